// pseudoflow - pseudo scene-flow labels from camera projection and 2D flow
#ifndef PSEUDOFLOW_NOISE_MODEL_HPP
#define PSEUDOFLOW_NOISE_MODEL_HPP

#include <cmath>
#include <span>
#include <vector>

#include "pseudoflow/core.hpp"
#include "pseudoflow/geometry.hpp"
#include "pseudoflow/label_gen.hpp"
#include "pseudoflow/spatial_index.hpp"

namespace pseudoflow {

struct NoiseParams {
  double theta = 2.0;           ///< image-distance threshold of the kernel
  double lambda = 0.25;         ///< weight kept from the initial confidence
  double tau = 0.1;             ///< label-similarity temperature, meters
  std::size_t k_neighbors = 8;  ///< neighborhood size for refinement

  void validate() const {
    detail::require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::kInvalidArgument,
                    "noise params: lambda must lie in [0, 1]");
    detail::require(theta > 0.0, ErrorKind::kInvalidArgument, "noise params: theta must be > 0");
    detail::require(tau > 0.0, ErrorKind::kInvalidArgument, "noise params: tau must be > 0");
    detail::require(k_neighbors >= 1, ErrorKind::kInvalidArgument, "noise params: K must be >= 1");
  }
};

struct ConfidenceVector {
  std::vector<double> w;    ///< initial
  std::vector<double> w_u;  ///< refined
};

/// 1 below theta, 1/d from theta on.
inline double confidence_kernel(double d, double theta) {
  return d < theta ? 1.0 : 1.0 / d;
}

/**
 * Initial confidence of each label from the image distance between its
 * projected correspondence and the nearest projected point of P^{t+1}.
 * Invalid labels, and correspondences that no longer project, get 0.
 */
inline std::vector<double> initial_confidence(const PseudoLabelSet& labels,
                                              const PointCloud& p_t1, const CameraModel& cam,
                                              const NoiseParams& params) {
  params.validate();
  std::vector<double> w(labels.size(), 0.0);
  if (labels.valid_count() == 0) return w;

  const std::vector<ImagePoint> proj_t1 = project_cloud(p_t1, cam);
  const PlanarIndex index(proj_t1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].valid) continue;
    const ImagePoint c = project_point(labels[i].correspondence, cam);
    if (!c.valid) continue;
    w[i] = confidence_kernel(nearest_planar(index, c.uv).distance, params.theta);
  }
  return w;
}

/// Length-checked variant for callers that hold P^t alongside the labels.
inline std::vector<double> initial_confidence(const PseudoLabelSet& labels, const PointCloud& p_t,
                                              const PointCloud& p_t1, const CameraModel& cam,
                                              const NoiseParams& params) {
  detail::require_same_length(labels.size(), p_t.size(), "initial_confidence labels vs P^t");
  return initial_confidence(labels, p_t1, cam, params);
}

/// Similarity of two labels, exp(-|f_k - f_i| / tau).
inline double label_affinity(const Vec3& f_i, const Vec3& f_k, double tau) {
  return std::exp(-(f_k - f_i).norm() / tau);
}

/**
 * Single refinement pass: each positively weighted point blends its own
 * confidence with the affinity-weighted confidences of its K nearest
 * neighbors in P^t. Zero-confidence points stay at zero.
 */
inline std::vector<double> refine_confidence(const PseudoLabelSet& labels, const PointCloud& p_t,
                                             std::span<const double> w,
                                             const NoiseParams& params) {
  params.validate();
  detail::require_same_length(labels.size(), p_t.size(), "refine_confidence labels vs P^t");
  detail::require_same_length(labels.size(), w.size(), "refine_confidence labels vs weights");

  std::size_t positive = 0;
  for (std::size_t i = 0; i < w.size(); ++i) positive += (labels[i].valid && w[i] > 0.0) ? 1 : 0;
  detail::require(positive >= 2, ErrorKind::kDegenerate,
                  "refine_confidence: need at least 2 valid labels");

  const VolumeIndex index(p_t);
  std::vector<double> w_u(w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!labels[i].valid || !(w[i] > 0.0)) continue;
    const auto neighbors = knn_volume(index, p_t[i], params.k_neighbors, i);
    double sum = 0.0;
    for (const auto& nb : neighbors) {
      if (!labels[nb.id].valid) continue;
      sum += w[nb.id] * label_affinity(labels[i].flow, labels[nb.id].flow, params.tau);
    }
    const double mean = neighbors.empty() ? 0.0 : sum / static_cast<double>(neighbors.size());
    w_u[i] = params.lambda * w[i] + (1.0 - params.lambda) * mean;
  }
  return w_u;
}

inline ConfidenceVector score_labels(const PseudoLabelSet& labels, const PointCloud& p_t,
                                     const PointCloud& p_t1, const CameraModel& cam,
                                     const NoiseParams& params) {
  ConfidenceVector conf;
  conf.w = initial_confidence(labels, p_t, p_t1, cam, params);
  conf.w_u = refine_confidence(labels, p_t, conf.w, params);
  return conf;
}

}  // namespace pseudoflow

#endif  // PSEUDOFLOW_NOISE_MODEL_HPP
