#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"

namespace pseudoflow {
namespace {

synth::SceneSpec single_box(const synth::RigidMotion& motion) {
  synth::SceneSpec spec;
  spec.seed = 5;
  synth::ObjectSpec box;
  box.center = Vec3(0, 0, 12);
  box.half_extents = Vec3(1.5, 1.0, 1.0);
  box.num_points = 300;
  box.motion = motion;
  spec.objects.push_back(box);
  return spec;
}

TEST(MakeRigidScene, TranslatedBoxHasConstantFlow) {
  const auto spec = single_box(synth::RigidMotion::yaw(0.0, Vec3(0, 0, 12), Vec3(1, 0.5, 0)));
  const auto scene = synth::make_rigid_scene(spec);
  ASSERT_GT(scene.p_t.size(), 50u);
  ASSERT_EQ(scene.gt.size(), scene.p_t.size());
  for (std::size_t i = 0; i < scene.gt.size(); ++i) {
    // Coordinates are stored at float precision.
    EXPECT_LT((scene.gt.flows[i] - Vec3(1, 0.5, 0)).norm(), 1e-5);
    EXPECT_EQ(scene.gt.flows[i], scene.p_t1[i] - scene.p_t[i]);
  }
}

TEST(MakeRigidScene, IdentityMotionHasZeroFlow) {
  const auto scene = synth::make_rigid_scene(single_box(synth::RigidMotion{}));
  for (const auto& f : scene.gt.flows) EXPECT_EQ(f, Vec3::Zero());
}

TEST(RigidMotion, QuarterTurnChord) {
  const auto m = synth::RigidMotion::yaw(std::numbers::pi / 2.0, Vec3::Zero(), Vec3::Zero());
  const Vec3 p(1, 0, 0);
  EXPECT_NEAR((m.apply(p) - p).norm(), std::sqrt(2.0), 1e-15);
}

TEST(MakeRigidScene, DeterministicPerSeed) {
  const auto a = synth::make_rigid_scene(synth::default_scene_spec(9, 100));
  const auto b = synth::make_rigid_scene(synth::default_scene_spec(9, 100));
  const auto c = synth::make_rigid_scene(synth::default_scene_spec(10, 100));
  EXPECT_EQ(a.p_t.points, b.p_t.points);
  EXPECT_EQ(a.p_t1.points, b.p_t1.points);
  EXPECT_NE(a.p_t.points, c.p_t.points);
}

TEST(MakeRigidScene, CoordinatesAreFloatExact) {
  const auto is_f32 = [](const Vec3& p) {
    for (int c = 0; c < 3; ++c) {
      if (static_cast<double>(static_cast<float>(p[c])) != p[c]) return false;
    }
    return true;
  };
  for (bool resampled : {false, true}) {
    const auto scene = synth::make_rigid_scene(synth::default_scene_spec(8, 100, resampled));
    for (const auto& p : scene.p_t.points) ASSERT_TRUE(is_f32(p));
    for (const auto& p : scene.p_t1.points) ASSERT_TRUE(is_f32(p));
  }
}

TEST(MakeRigidScene, ResampledDoesNotShareTargets) {
  const auto spec = synth::default_scene_spec(2, 200, true);
  const auto scene = synth::make_rigid_scene(spec);
  std::set<std::array<double, 3>> targets;
  for (const auto& q : scene.p_t1.points) targets.insert({q.x(), q.y(), q.z()});
  std::size_t shared = 0;
  for (std::size_t i = 0; i < scene.p_t.size(); ++i) {
    const Vec3 moved = scene.p_t[i] + scene.gt.flows[i];
    shared += targets.count({moved.x(), moved.y(), moved.z()});
  }
  EXPECT_LT(shared, scene.p_t.size() / 10);
}

TEST(RenderExactFlowField, StaticSceneIsZero) {
  const auto spec = single_box(synth::RigidMotion{});
  const auto scene = synth::make_rigid_scene(spec);
  const auto ff = synth::render_exact_flow_field(scene, spec);
  for (const auto& v : ff.vectors()) EXPECT_EQ(v, Vec2::Zero());
}

TEST(RenderExactFlowField, ExactAtEveryProjection) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto spec = synth::default_scene_spec(seed, 200);
    const auto scene = synth::make_rigid_scene(spec);
    const auto ff = synth::render_exact_flow_field(scene, spec);
    for (std::size_t i = 0; i < scene.p_t.size(); ++i) {
      const ImagePoint a = project_point(scene.p_t[i], spec.camera);
      const ImagePoint b = project_point(scene.p_t[i] + scene.gt.flows[i], spec.camera);
      const auto s = sample_flow(ff, a.uv);
      ASSERT_TRUE(s.has_value());
      EXPECT_LT((*s - (b.uv - a.uv)).norm(), 1e-6);
    }
  }
}

TEST(RenderExactFlowField, FarFromPointsTakesNearestValue) {
  PointCloud p;
  p.points = {Vec3(10.4, 10.3, 1), Vec3(80.6, 40.2, 1)};
  FlowEstimate gt;
  gt.flows = {Vec3(1, 0, 0), Vec3(0, 2, 0)};
  const auto ff = synth::render_exact_flow_field(p, gt, CameraModel::identity(), 100, 50);
  EXPECT_EQ(ff.at(0, 0), Vec2(1, 0));
  EXPECT_EQ(ff.at(99, 49), Vec2(0, 2));
  EXPECT_EQ(ff.at(95, 5), Vec2(0, 2));
  EXPECT_EQ(ff.at(20, 45), Vec2(1, 0));
}

TEST(RenderExactFlowField, OutOfBoundsFails) {
  PointCloud p;
  p.points = {Vec3(500, 10, 1)};
  FlowEstimate gt;
  gt.flows = {Vec3::Zero()};
  try {
    synth::render_exact_flow_field(p, gt, CameraModel::identity(), 100, 50);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

TEST(Corrupt, FractionZeroIsIdentity) {
  std::mt19937_64 gen(3);
  FlowEstimate f;
  for (int i = 0; i < 100; ++i) f.flows.push_back(testing::random_cloud(1, gen)[0]);
  synth::CorruptionSpec spec;
  spec.fraction = 0.0;
  const auto out = synth::corrupt(f, spec);
  EXPECT_TRUE(out.mask.empty());
  EXPECT_EQ(out.data.flows, f.flows);
}

TEST(Corrupt, FractionOneMovesEveryEntryByMagnitude) {
  FlowEstimate f;
  f.flows.assign(50, Vec3(0.1, 0.2, 0.3));
  synth::CorruptionSpec spec;
  spec.fraction = 1.0;
  spec.magnitude = 0.7;
  const auto out = synth::corrupt(f, spec);
  EXPECT_EQ(out.mask.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR((out.data.flows[i] - f.flows[i]).norm(), 0.7, 1e-12);

  const auto ff = FlowField2D::constant(5, 4, Vec2(1, 1));
  const auto cf = synth::corrupt(ff, spec);
  for (std::size_t i = 0; i < ff.vectors().size(); ++i) {
    EXPECT_NEAR((cf.data.vectors()[i] - ff.vectors()[i]).norm(), 0.7, 1e-12);
  }
}

TEST(Corrupt, MaskSizeAndDeterminism) {
  FlowEstimate f;
  f.flows.assign(1000, Vec3::Zero());
  synth::CorruptionSpec spec;
  spec.seed = 42;
  const auto a = synth::corrupt(f, spec);
  const auto b = synth::corrupt(f, spec);
  EXPECT_EQ(a.mask.size(), 200u);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_EQ(a.data.flows, b.data.flows);
  EXPECT_TRUE(std::is_sorted(a.mask.begin(), a.mask.end()));
  EXPECT_EQ(std::set<std::size_t>(a.mask.begin(), a.mask.end()).size(), a.mask.size());
  std::vector<bool> hit(1000, false);
  for (auto i : a.mask) hit[i] = true;
  for (std::size_t i = 0; i < 1000; ++i) {
    EXPECT_EQ(a.data.flows[i] != Vec3::Zero(), static_cast<bool>(hit[i]));
  }
}

TEST(Corrupt, LabelsKeepIdentity) {
  const auto spec = synth::default_scene_spec(6, 150);
  const auto scene = synth::make_rigid_scene(spec);
  const auto labels = generate_pseudo_labels(scene.p_t, scene.p_t1, spec.camera,
                                             synth::render_exact_flow_field(scene, spec));
  const auto out = synth::corrupt(labels, scene.p_t, spec.camera, synth::CorruptionSpec{});
  EXPECT_EQ(out.mask.size(),
            static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(labels.valid_count()))));
  for (auto i : out.mask) {
    EXPECT_NEAR((out.data[i].correspondence - labels[i].correspondence).norm(), 0.5, 1e-12);
    EXPECT_EQ(out.data[i].correspondence - scene.p_t[i] - out.data[i].flow, Vec3::Zero());
  }
}

}  // namespace
}  // namespace pseudoflow
