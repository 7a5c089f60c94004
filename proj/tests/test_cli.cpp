#include <gtest/gtest.h>

#include <sstream>

#include "cli.hpp"
#include "oracles.hpp"

namespace pseudoflow {
namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "pseudoflow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = testing::scratch_dir(std::string("cli_") +
                                ::testing::UnitTest::GetInstance()->current_test_info()->name());
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::filesystem::path dir_;
};

TEST_F(CliTest, SynthGenerateEval) {
  const std::string d = path("scene");
  ASSERT_EQ(run({"synth", "-o", d, "--seed", "3", "--points", "150"}).code, 0);
  const CliResult gen = run({"generate", d + "/cloud_t.pcf", d + "/cloud_t1.pcf", d + "/calib.txt",
                       d + "/flow.flo", "-o", path("labels.psl")});
  ASSERT_EQ(gen.code, 0) << gen.err;

  const auto rec = io::read_labels(path("labels.psl"));
  const auto gt = io::read_flow(d + "/gt_flow.pcf");
  ASSERT_EQ(rec.size(), gt.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    ASSERT_EQ(rec.valid[i], 1);
    // Labels are stored as f32.
    EXPECT_LT((rec.flows[i] - gt.flows[i]).norm(), 1e-5);
    EXPECT_EQ(rec.weights[i], 1.0);
  }

  const CliResult conf = run({"confidence", path("labels.psl"), d + "/cloud_t.pcf", d + "/cloud_t1.pcf",
                        d + "/calib.txt", "-o", path("scored.psl")});
  ASSERT_EQ(conf.code, 0) << conf.err;
  const CliResult fit = run({"fit", path("scored.psl"), d + "/cloud_t.pcf", "-o", path("pred.pcf"),
                       "--iters", "50"});
  ASSERT_EQ(fit.code, 0) << fit.err;
  const CliResult ev = run({"eval", path("pred.pcf"), d + "/gt_flow.pcf", "-o", path("report.json")});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("EPE3D "), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(path("report.json")));
}

TEST_F(CliTest, EvalIdenticalFilesIsZero) {
  FlowEstimate f;
  f.flows = {Vec3(1, 0, 0), Vec3(0, 0.5, 0.25)};
  io::write_flow(path("a.pcf"), f);
  const CliResult r = run({"eval", path("a.pcf"), path("a.pcf")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("EPE3D 0\n", 0), 0u) << r.out;
}

TEST_F(CliTest, ChamferFitAndPreprocess) {
  const std::string d = path("scene");
  ASSERT_EQ(run({"synth", "-o", d, "--seed", "4", "--points", "80"}).code, 0);
  ASSERT_EQ(run({"generate", d + "/cloud_t.pcf", d + "/cloud_t1.pcf", d + "/calib.txt", d + "/flow.flo",
                 "-o", path("l.psl")})
                .code,
            0);
  const CliResult fit = run({"fit", path("l.psl"), d + "/cloud_t.pcf", "-o", path("c.pcf"), "--mode", "chamfer",
                       "--cloud-t1", d + "/cloud_t1.pcf", "--iters", "20"});
  EXPECT_EQ(fit.code, 0) << fit.err;
  const CliResult bad_mode = run({"fit", path("l.psl"), d + "/cloud_t.pcf", "-o", path("c.pcf"), "--mode", "l2"});
  EXPECT_NE(bad_mode.code, 0);

  const CliResult pre = run({"preprocess", d + "/cloud_t.pcf", d + "/calib.txt", "-o", path("pre.pcf"),
                       "--sample-n", "50", "--seed", "9", "--keep-ground"});
  ASSERT_EQ(pre.code, 0) << pre.err;
  EXPECT_EQ(io::read_point_cloud(path("pre.pcf")).size(), 50u);
}

TEST_F(CliTest, MissingInputNamesPath) {
  const std::string missing = path("nope.pcf");
  const CliResult r = run({"eval", missing, missing});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_NE(run({"frobnicate"}).code, 0);
  EXPECT_NE(run({}).code, 0);
  EXPECT_NE(run({"eval", "--bogus", "a", "b"}).code, 0);
  EXPECT_EQ(run({"--help"}).code, 0);
}

}  // namespace
}  // namespace pseudoflow
