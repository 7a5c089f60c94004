#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "pseudoflow/metrics.hpp"

namespace pseudoflow {
namespace {

FlowEstimate filled(std::size_t n, const Vec3& v) {
  FlowEstimate f;
  f.flows.assign(n, v);
  return f;
}

TEST(Evaluate, PerfectPrediction) {
  const auto gt = filled(5, Vec3(1, 2, 3));
  const auto r = evaluate(gt, gt);
  EXPECT_EQ(r.epe3d, 0.0);
  EXPECT_EQ(r.acc3ds, 1.0);
  EXPECT_EQ(r.acc3dr, 1.0);
  EXPECT_EQ(r.outliers, 0.0);
  EXPECT_EQ(r.n_points, 5u);
}

TEST(Evaluate, OutlierOnRelativeBranch) {
  const auto gt = filled(4, Vec3(1, 0, 0));
  const auto pred = filled(4, Vec3(1.3, 0, 0));
  const auto r = evaluate(pred, gt);
  EXPECT_NEAR(r.epe3d, 0.3, 1e-15);
  EXPECT_EQ(r.acc3ds, 0.0);
  EXPECT_EQ(r.acc3dr, 0.0);
  EXPECT_EQ(r.outliers, 1.0);
}

TEST(Evaluate, SmallErrorIsAccurate) {
  const auto gt = filled(3, Vec3(1, 0, 0));
  const auto r = evaluate(filled(3, Vec3(1.04, 0, 0)), gt);
  EXPECT_EQ(r.acc3ds, 1.0);
  EXPECT_EQ(r.acc3dr, 1.0);
  EXPECT_EQ(r.outliers, 0.0);
}

TEST(Evaluate, ZeroGroundTruth) {
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_TRUE(std::isinf(relative_error(0.2, 0.0)));
  const auto r = evaluate(filled(2, Vec3(0.2, 0, 0)), filled(2, Vec3::Zero()));
  EXPECT_EQ(r.acc3ds, 0.0);
  EXPECT_EQ(r.outliers, 1.0);
}

TEST(Evaluate, Errors) {
  EXPECT_THROW(evaluate(filled(2, Vec3::Zero()), filled(3, Vec3::Zero())), Error);
  EXPECT_THROW(evaluate(FlowEstimate{}, FlowEstimate{}), Error);
}

TEST(Evaluate, RandomInvariants) {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0), s(0.0, 0.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + trial % 40;
    FlowEstimate pred, gt;
    for (std::size_t i = 0; i < n; ++i) {
      gt.flows.emplace_back(u(gen), u(gen), u(gen));
      pred.flows.push_back(gt.flows.back() + s(gen) * Vec3(u(gen), u(gen), u(gen)));
    }
    const auto r = evaluate(pred, gt);
    EXPECT_LE(r.acc3ds, r.acc3dr);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    FlowEstimate pp, gp;
    for (auto i : perm) {
      pp.flows.push_back(pred.flows[i]);
      gp.flows.push_back(gt.flows[i]);
    }
    const auto rp = evaluate(pp, gp);
    EXPECT_NEAR(rp.epe3d, r.epe3d, 1e-12);
    EXPECT_EQ(rp.acc3ds, r.acc3ds);
    EXPECT_EQ(rp.acc3dr, r.acc3dr);
    EXPECT_EQ(rp.outliers, r.outliers);

    const Vec3 delta(u(gen), u(gen), u(gen));
    FlowEstimate shifted = gt;
    for (auto& f : shifted.flows) f += delta;
    EXPECT_NEAR(evaluate(shifted, gt).epe3d, delta.norm(), 1e-12);
  }
}

TEST(WriteReport, KeyValueLines) {
  std::ostringstream os;
  write_report(os, evaluate(filled(2, Vec3(1.3, 0, 0)), filled(2, Vec3(1, 0, 0))));
  EXPECT_EQ(os.str(), "EPE3D 0.3\nAcc3DS 0\nAcc3DR 0\nOutliers 1\nn_points 2\n");
}

}  // namespace
}  // namespace pseudoflow
