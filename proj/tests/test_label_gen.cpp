#include <gtest/gtest.h>

#include "oracles.hpp"

namespace pseudoflow {
namespace {

TEST(GeneratePseudoLabels, SinglePointTrace) {
  PointCloud p_t, p_t1;
  p_t.points = {Vec3(1, 1, 2)};
  p_t1.points = {Vec3(2, 1, 2)};
  const auto ff = FlowField2D::constant(4, 4, Vec2(0.5, 0));
  const auto labels = generate_pseudo_labels(p_t, p_t1, CameraModel::identity(), ff);
  ASSERT_EQ(labels.size(), 1u);
  const PseudoLabel& l = labels[0];
  ASSERT_TRUE(l.valid);
  EXPECT_DOUBLE_EQ(l.corr_2d.x(), 1.0);
  EXPECT_DOUBLE_EQ(l.corr_2d.y(), 0.5);
  EXPECT_EQ(l.nn_point_id, 0u);
  EXPECT_DOUBLE_EQ(l.nn_2d_distance, 0.0);
  EXPECT_DOUBLE_EQ(l.correspondence.x(), 2.0);
  EXPECT_DOUBLE_EQ(l.correspondence.y(), 1.0);
  EXPECT_DOUBLE_EQ(l.correspondence.z(), 2.0);
  EXPECT_DOUBLE_EQ(l.flow.x(), 1.0);
  EXPECT_DOUBLE_EQ(l.flow.y(), 0.0);
  EXPECT_DOUBLE_EQ(l.flow.z(), 0.0);
}

TEST(GeneratePseudoLabels, StaticScene) {
  std::mt19937_64 gen(5);
  const auto cam = synth::default_camera();
  PointCloud pc;
  std::uniform_real_distribution<double> x(-5, 5), z(5, 30);
  for (int i = 0; i < 300; ++i) pc.points.emplace_back(x(gen), 0.3 * x(gen), z(gen));
  const auto ff = FlowField2D::constant(synth::kDefaultWidth, synth::kDefaultHeight, Vec2::Zero());
  const auto labels = generate_pseudo_labels(pc, pc, cam, ff);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].valid) continue;
    EXPECT_EQ(labels[i].nn_2d_distance, 0.0);
    EXPECT_LT(labels[i].flow.norm(), 1e-12);
  }
  EXPECT_GT(labels.valid_count(), 0u);
}

TEST(GeneratePseudoLabels, BehindCameraIsInvalid) {
  PointCloud p_t, p_t1;
  p_t.points = {Vec3(0, 0, -2), Vec3(1, 1, 2)};
  p_t1.points = {Vec3(1, 1, 2)};
  const auto labels = generate_pseudo_labels(p_t, p_t1, CameraModel::identity(),
                                             FlowField2D::constant(4, 4, Vec2::Zero()));
  ASSERT_EQ(labels.size(), 2u);
  EXPECT_FALSE(labels[0].valid);
  EXPECT_EQ(labels[0].flow, Vec3::Zero());
  EXPECT_TRUE(labels[1].valid);
}

TEST(GeneratePseudoLabels, OutOfFieldSampleIsInvalid) {
  PointCloud p_t, p_t1;
  p_t.points = {Vec3(20, 1, 2)};  // projects to u = 10 on a 4x4 field
  p_t1.points = {Vec3(1, 1, 2)};
  const auto labels = generate_pseudo_labels(p_t, p_t1, CameraModel::identity(),
                                             FlowField2D::constant(4, 4, Vec2::Zero()));
  EXPECT_FALSE(labels[0].valid);
}

TEST(GeneratePseudoLabels, NoProjectableTargetFails) {
  PointCloud p_t, p_t1;
  p_t.points = {Vec3(1, 1, 2)};
  p_t1.points = {Vec3(1, 1, -2)};
  try {
    generate_pseudo_labels(p_t, p_t1, CameraModel::identity(), FlowField2D::constant(4, 4, Vec2::Zero()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
  EXPECT_THROW(generate_pseudo_labels(PointCloud{}, p_t, CameraModel::identity(),
                                      FlowField2D::constant(4, 4, Vec2::Zero())),
               Error);
}

TEST(GeneratePseudoLabels, RigidTranslationMatchesGroundTruth) {
  synth::SceneSpec spec = synth::default_scene_spec(3, 200);
  for (auto& obj : spec.objects) obj.motion = synth::RigidMotion::yaw(0.0, obj.center, Vec3(0.4, 0.0, -0.6));
  const auto scene = synth::make_rigid_scene(spec);
  const auto ff = synth::render_exact_flow_field(scene, spec);
  const auto labels = generate_pseudo_labels(scene.p_t, scene.p_t1, spec.camera, ff);
  ASSERT_EQ(labels.size(), scene.p_t.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ASSERT_TRUE(labels[i].valid);
    EXPECT_LT((labels[i].flow - scene.gt.flows[i]).norm(), 1e-6) << i;
  }
}

TEST(GeneratePseudoLabels, Invariants) {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const auto spec = synth::default_scene_spec(seed, 150, true);
    const auto scene = synth::make_rigid_scene(spec);
    const auto ff = synth::render_exact_flow_field(scene.p_t, scene.gt, spec.camera,
                                                   spec.image_width, spec.image_height);
    const auto labels = generate_pseudo_labels(scene.p_t, scene.p_t1, spec.camera, ff);
    ASSERT_EQ(labels.size(), scene.p_t.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto& l = labels[i];
      if (!l.valid) continue;
      EXPECT_EQ(l.correspondence - scene.p_t[i] - l.flow, Vec3::Zero());
      const ImagePoint c = project_point(l.correspondence, spec.camera);
      ASSERT_TRUE(c.valid);
      EXPECT_LT((c.uv - l.corr_2d).norm(), 1e-9);
      const double z_nn = project_point(scene.p_t1[l.nn_point_id], spec.camera).cam_depth;
      EXPECT_NEAR(c.cam_depth, z_nn, 1e-12 * z_nn);
    }
  }
}

}  // namespace
}  // namespace pseudoflow
