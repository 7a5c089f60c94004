// pseudoflow - pseudo scene-flow labels from camera projection and 2D flow
#ifndef PSEUDOFLOW_LABEL_GEN_HPP
#define PSEUDOFLOW_LABEL_GEN_HPP

#include <cstddef>
#include <vector>

#include "pseudoflow/core.hpp"
#include "pseudoflow/flow_field.hpp"
#include "pseudoflow/geometry.hpp"
#include "pseudoflow/spatial_index.hpp"

namespace pseudoflow {

/// Pseudo label of one point of P^t.
struct PseudoLabel {
  Vec3 flow = Vec3::Zero();            ///< f = c - p, meters
  Vec3 correspondence = Vec3::Zero();  ///< pseudo 3D correspondence c in P^{t+1}
  Vec2 corr_2d = Vec2::Zero();         ///< 2D correspondence p_bar + optical flow
  double nn_2d_distance = 0.0;         ///< image distance from corr_2d to nearest projected P^{t+1} point
  std::size_t nn_point_id = 0;         ///< index of that point in P^{t+1}
  bool valid = false;
};

struct PseudoLabelSet {
  std::vector<PseudoLabel> labels;

  std::size_t size() const { return labels.size(); }
  const PseudoLabel& operator[](std::size_t i) const { return labels[i]; }
  PseudoLabel& operator[](std::size_t i) { return labels[i]; }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (const auto& l : labels) n += l.valid ? 1 : 0;
    return n;
  }

  /// Labels as a flow estimate (invalid entries are zero).
  FlowEstimate as_flow() const {
    FlowEstimate f;
    f.flows.reserve(labels.size());
    for (const auto& l : labels) f.flows.push_back(l.flow);
    return f;
  }
};

/**
 * @brief Pseudo scene-flow labels for every point of P^t.
 *
 * Each point is projected, displaced by the sampled optical flow, matched
 * to the nearest projected point of P^{t+1}, and lifted back to 3D at that
 * point's camera depth. A label is invalid (zero flow) when the point does
 * not project or its flow sample falls outside the field.
 */
inline PseudoLabelSet generate_pseudo_labels(const PointCloud& p_t, const PointCloud& p_t1,
                                             const CameraModel& cam, const FlowField2D& ff) {
  detail::require(!p_t.empty() && !p_t1.empty(), ErrorKind::kInvalidArgument,
                  "generate_pseudo_labels: both clouds must be non-empty");

  const std::vector<ImagePoint> proj_t1 = project_cloud(p_t1, cam);
  const PlanarIndex index(proj_t1);  // throws if P^{t+1} has no valid projection

  PseudoLabelSet out;
  out.labels.resize(p_t.size());
  for (std::size_t i = 0; i < p_t.size(); ++i) {
    PseudoLabel& label = out.labels[i];
    const ImagePoint ip = project_point(p_t[i], cam);
    if (!ip.valid) continue;
    const auto flow_2d = sample_flow(ff, ip.uv);
    if (!flow_2d) continue;

    label.corr_2d = displace(ip.uv, *flow_2d);
    const Neighbor nn = nearest_planar(index, label.corr_2d);
    label.nn_point_id = nn.id;
    label.nn_2d_distance = nn.distance;
    label.correspondence = lift_to_3d(label.corr_2d, proj_t1[nn.id].cam_depth, cam);
    label.flow = label.correspondence - p_t[i];
    label.valid = label.flow.allFinite();
    if (!label.valid) label = PseudoLabel{};
  }
  return out;
}

}  // namespace pseudoflow

#endif  // PSEUDOFLOW_LABEL_GEN_HPP
