// pseudoflow - pseudo scene-flow labels from camera projection and 2D flow
#ifndef PSEUDOFLOW_FLOW_FIT_HPP
#define PSEUDOFLOW_FLOW_FIT_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pseudoflow/core.hpp"
#include "pseudoflow/label_gen.hpp"
#include "pseudoflow/spatial_index.hpp"

namespace pseudoflow {

struct FitConfig {
  double learning_rate = 0.05;  ///< fraction of the preconditioned step; (0, 2) is monotone
  int iterations = 500;
  double smoothness_weight = 0.1;
  std::size_t smoothness_k = 8;
  double l1_epsilon = 1e-6;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(learning_rate > 0.0, ErrorKind::kInvalidArgument,
                    "fit config: learning_rate must be > 0");
    detail::require(iterations >= 1, ErrorKind::kInvalidArgument,
                    "fit config: iterations must be >= 1");
    detail::require(smoothness_weight >= 0.0, ErrorKind::kInvalidArgument,
                    "fit config: smoothness_weight must be >= 0");
    detail::require(smoothness_k >= 1, ErrorKind::kInvalidArgument,
                    "fit config: smoothness_k must be >= 1");
    detail::require(l1_epsilon >= 0.0, ErrorKind::kInvalidArgument,
                    "fit config: l1_epsilon must be >= 0");
  }
};

enum class FitMode {
  kWeighted,    ///< confidence-weighted L1 to the labels + smoothness
  kUnweighted,  ///< every valid label weighted 1 + smoothness
  kChamfer,     ///< chamfer to P^{t+1} + smoothness, labels unused
};

inline const char* to_string(FitMode mode) {
  switch (mode) {
    case FitMode::kWeighted: return "weighted";
    case FitMode::kUnweighted: return "unweighted";
    case FitMode::kChamfer: return "chamfer";
  }
  return "unknown";
}

struct LossReport {
  std::vector<double> trace;       ///< smoothed objective after each iteration
  double initial_objective = 0.0;  ///< smoothed objective at the zero start
  double data_loss = 0.0;          ///< exact weighted L1 (label modes) at the result
  double smoothness = 0.0;         ///< Laplacian term at the result, unscaled
  double chamfer = 0.0;            ///< chamfer term at the result (chamfer mode)
};

struct FitResult {
  FlowEstimate estimate;
  LossReport report;
};

// ---------------------------------------------------------------------------
// Weighted L1 data term

inline double weighted_l1_loss(const PseudoLabelSet& labels, const FlowEstimate& flows,
                               std::span<const double> w_u) {
  detail::require_same_length(labels.size(), flows.size(), "weighted_l1_loss labels vs flows");
  detail::require_same_length(labels.size(), w_u.size(), "weighted_l1_loss labels vs weights");
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].valid) continue;
    loss += w_u[i] * (labels[i].flow - flows.flows[i]).lpNorm<1>();
  }
  return loss;
}

/// Weighted L1 with each |r| replaced by sqrt(r^2 + eps^2).
inline double smoothed_l1_loss(const PseudoLabelSet& labels, const FlowEstimate& flows,
                               std::span<const double> w_u, double eps) {
  detail::require_same_length(labels.size(), flows.size(), "smoothed_l1_loss labels vs flows");
  detail::require_same_length(labels.size(), w_u.size(), "smoothed_l1_loss labels vs weights");
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].valid) continue;
    const Vec3 r = labels[i].flow - flows.flows[i];
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += std::sqrt(r[c] * r[c] + eps * eps);
    loss += w_u[i] * s;
  }
  return loss;
}

/**
 * Gradient of the data term with respect to the predicted flows.
 * eps == 0 gives the sign subgradient with sign(0) = 0; eps > 0 gives the
 * gradient of the smoothed loss.
 */
inline std::vector<Vec3> loss_gradient(const PseudoLabelSet& labels, const FlowEstimate& flows,
                                       std::span<const double> w_u, double eps = 0.0) {
  detail::require_same_length(labels.size(), flows.size(), "loss_gradient labels vs flows");
  detail::require_same_length(labels.size(), w_u.size(), "loss_gradient labels vs weights");
  std::vector<Vec3> grad(labels.size(), Vec3::Zero());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].valid) continue;
    const Vec3 r = labels[i].flow - flows.flows[i];
    for (int c = 0; c < 3; ++c) {
      if (eps > 0.0) {
        grad[i][c] = -w_u[i] * r[c] / std::sqrt(r[c] * r[c] + eps * eps);
      } else {
        grad[i][c] = -w_u[i] * static_cast<double>((r[c] > 0.0) - (r[c] < 0.0));
      }
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Laplacian smoothness over a fixed neighbor graph

/// k nearest neighbors (self excluded) of every point of P^t, fixed for a fit.
struct NeighborGraph {
  std::vector<std::vector<std::size_t>> neighbors;

  static NeighborGraph build(const PointCloud& p_t, std::size_t k) {
    detail::require(p_t.size() >= 2, ErrorKind::kInvalidArgument,
                    "neighbor graph: need at least 2 points");
    const VolumeIndex index(p_t);
    NeighborGraph g;
    g.neighbors.resize(p_t.size());
    for (std::size_t i = 0; i < p_t.size(); ++i) {
      for (const auto& nb : knn_volume(index, p_t[i], k, i)) g.neighbors[i].push_back(nb.id);
    }
    return g;
  }

  std::size_t size() const { return neighbors.size(); }
};

namespace detail {

/// f_i minus the mean flow of its neighbors.
inline std::vector<Vec3> laplacian_residuals(const FlowEstimate& flows, const NeighborGraph& g) {
  require_same_length(flows.size(), g.size(), "laplacian flows vs graph");
  std::vector<Vec3> d(flows.size(), Vec3::Zero());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    Vec3 mean = Vec3::Zero();
    for (auto j : g.neighbors[i]) mean += flows.flows[j];
    if (!g.neighbors[i].empty()) mean /= static_cast<double>(g.neighbors[i].size());
    d[i] = flows.flows[i] - mean;
  }
  return d;
}

}  // namespace detail

inline double laplacian_smoothness(const FlowEstimate& flows, const NeighborGraph& g) {
  double s = 0.0;
  for (const auto& d : detail::laplacian_residuals(flows, g)) s += d.squaredNorm();
  return s;
}

inline std::vector<Vec3> laplacian_gradient(const FlowEstimate& flows, const NeighborGraph& g) {
  const auto d = detail::laplacian_residuals(flows, g);
  std::vector<Vec3> grad(flows.size(), Vec3::Zero());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    grad[i] += 2.0 * d[i];
    if (g.neighbors[i].empty()) continue;
    const double share = 2.0 / static_cast<double>(g.neighbors[i].size());
    for (auto j : g.neighbors[i]) grad[j] -= share * d[i];
  }
  return grad;
}

inline double laplacian_smoothness(const FlowEstimate& flows, const PointCloud& p_t,
                                   std::size_t k) {
  return laplacian_smoothness(flows, NeighborGraph::build(p_t, k));
}

// ---------------------------------------------------------------------------
// Chamfer baseline

namespace detail {

inline KdTree<3> tree_of(const PointCloud& pc) {
  std::vector<Coords<3>> coords;
  std::vector<std::size_t> ids;
  coords.reserve(pc.size());
  ids.reserve(pc.size());
  for (std::size_t i = 0; i < pc.size(); ++i) {
    coords.push_back({pc[i].x(), pc[i].y(), pc[i].z()});
    ids.push_back(i);
  }
  return KdTree<3>(std::move(coords), std::move(ids));
}

inline std::vector<std::size_t> nearest_ids(const PointCloud& from, const KdTree<3>& to) {
  std::vector<std::size_t> out(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    out[i] = to.nearest({from[i].x(), from[i].y(), from[i].z()})->id;
  }
  return out;
}

/// Chamfer terms with the nearest-neighbor assignments made explicit.
struct ChamferState {
  double value = 0.0;
  std::vector<std::size_t> a_to_b;
  std::vector<std::size_t> b_to_a;
};

inline ChamferState chamfer_state(const PointCloud& a, const PointCloud& b, const KdTree<3>& tree_b) {
  ChamferState s;
  s.a_to_b = nearest_ids(a, tree_b);
  s.b_to_a = nearest_ids(b, tree_of(a));
  double fwd = 0.0, bwd = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) fwd += (a[i] - b[s.a_to_b[i]]).squaredNorm();
  for (std::size_t j = 0; j < b.size(); ++j) bwd += (b[j] - a[s.b_to_a[j]]).squaredNorm();
  s.value = fwd / static_cast<double>(a.size()) + bwd / static_cast<double>(b.size());
  return s;
}

}  // namespace detail

/// Symmetric chamfer: mean squared nearest distance a->b plus b->a.
inline double chamfer_loss(const PointCloud& warped, const PointCloud& target) {
  detail::require(!warped.empty() && !target.empty(), ErrorKind::kInvalidArgument,
                  "chamfer_loss: clouds must be non-empty");
  return detail::chamfer_state(warped, target, detail::tree_of(target)).value;
}

inline PointCloud warp(const PointCloud& p_t, const FlowEstimate& flows) {
  detail::require_same_length(p_t.size(), flows.size(), "warp cloud vs flows");
  PointCloud out;
  out.frame_id = p_t.frame_id;
  out.points.reserve(p_t.size());
  for (std::size_t i = 0; i < p_t.size(); ++i) out.points.push_back(p_t[i] + flows.flows[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer

namespace detail {

/// Objective value with its gradient and a diagonal curvature bound D such
/// that value + g.dx + dx^T D dx / 2 majorizes the objective around the
/// current flows.
struct Linearization {
  double value = 0.0;
  std::vector<Vec3> grad;
  std::vector<Vec3> curvature;
};

class FitObjective {
 public:
  FitObjective(const PseudoLabelSet* labels, std::vector<double> weights, const PointCloud& p_t,
               const PointCloud* target, const FitConfig& cfg, FitMode mode)
      : labels_(labels), weights_(std::move(weights)), p_t_(p_t), target_(target), cfg_(cfg),
        mode_(mode) {
    if (cfg.smoothness_weight > 0.0 && p_t.size() >= 2) {
      graph_ = NeighborGraph::build(p_t, cfg.smoothness_k);
      smooth_bound_.assign(p_t.size(), 1.0);
      for (const auto& nbs : graph_.neighbors) {
        for (auto j : nbs) smooth_bound_[j] += 1.0 / static_cast<double>(nbs.size());
      }
      // Gershgorin bound on 2 (I - W)^T (I - W): rows of I - W have abs sum 2.
      for (auto& c : smooth_bound_) c *= 4.0 * cfg.smoothness_weight;
    } else {
      graph_.neighbors.assign(p_t.size(), {});
      smooth_bound_.assign(p_t.size(), 0.0);
    }
    if (target_) target_tree_ = tree_of(*target_);
  }

  Linearization linearize(const FlowEstimate& flows) const {
    const std::size_t n = flows.size();
    Linearization lin;
    lin.grad.assign(n, Vec3::Zero());
    lin.curvature.assign(n, Vec3::Zero());

    if (mode_ == FitMode::kChamfer) {
      const PointCloud warped = warp(p_t_, flows);
      const ChamferState cs = chamfer_state(warped, *target_, target_tree_);
      lin.value += cs.value;
      const double inv_n = 1.0 / static_cast<double>(n);
      const double inv_m = 1.0 / static_cast<double>(target_->size());
      for (std::size_t i = 0; i < n; ++i) {
        lin.grad[i] += 2.0 * inv_n * (warped[i] - (*target_)[cs.a_to_b[i]]);
        lin.curvature[i].array() += 2.0 * inv_n;
      }
      for (std::size_t j = 0; j < target_->size(); ++j) {
        const std::size_t i = cs.b_to_a[j];
        lin.grad[i] += 2.0 * inv_m * (warped[i] - (*target_)[j]);
        lin.curvature[i].array() += 2.0 * inv_m;
      }
    } else {
      // Per component, sqrt(r^2 + eps^2) is majorized by a parabola of curvature 1 / sqrt(r0^2 + eps^2).
      const double eps = cfg_.l1_epsilon;
      for (std::size_t i = 0; i < n; ++i) {
        if (!(*labels_)[i].valid || weights_[i] == 0.0) continue;
        const Vec3 r = (*labels_)[i].flow - flows.flows[i];
        for (int c = 0; c < 3; ++c) {
          const double s = std::sqrt(r[c] * r[c] + eps * eps);
          lin.value += weights_[i] * s;
          if (s > 0.0) {
            lin.grad[i][c] = -weights_[i] * r[c] / s;
            lin.curvature[i][c] += weights_[i] / s;
          }
        }
      }
    }

    if (cfg_.smoothness_weight > 0.0) {
      lin.value += cfg_.smoothness_weight * laplacian_smoothness(flows, graph_);
      const auto sg = laplacian_gradient(flows, graph_);
      for (std::size_t i = 0; i < n; ++i) {
        lin.grad[i] += cfg_.smoothness_weight * sg[i];
        lin.curvature[i].array() += smooth_bound_[i];
      }
    }
    return lin;
  }

  double value(const FlowEstimate& flows) const { return linearize(flows).value; }

  const NeighborGraph& graph() const { return graph_; }

 private:
  const PseudoLabelSet* labels_;
  std::vector<double> weights_;
  const PointCloud& p_t_;
  const PointCloud* target_;
  FitConfig cfg_;
  FitMode mode_;
  NeighborGraph graph_;
  std::vector<double> smooth_bound_;
  KdTree<3> target_tree_;
};

}  // namespace detail

/**
 * @brief Fits per-point flows for P^t, starting from zero.
 *
 * Each iteration takes a diagonally preconditioned gradient step
 * f <- f - learning_rate * D^-1 g, where D bounds the curvature of the
 * smoothed objective (majorize-minimize). Any learning_rate in (0, 2)
 * therefore never increases the objective.
 *
 * Label modes need labels and weights aligned with P^t; chamfer mode needs
 * `target` (P^{t+1}) and ignores the labels.
 */
inline FitResult fit_flow(const PseudoLabelSet& labels, std::span<const double> w_u,
                          const PointCloud& p_t, const FitConfig& cfg, FitMode mode,
                          const PointCloud* target = nullptr) {
  cfg.validate();
  detail::require(!p_t.empty(), ErrorKind::kInvalidArgument, "fit_flow: P^t is empty");

  std::vector<double> weights;
  if (mode == FitMode::kChamfer) {
    detail::require(target != nullptr && !target->empty(), ErrorKind::kInvalidArgument,
                    "fit_flow: chamfer mode needs a non-empty target cloud");
  } else {
    detail::require_same_length(labels.size(), p_t.size(), "fit_flow labels vs P^t");
    detail::require_same_length(labels.size(), w_u.size(), "fit_flow labels vs weights");
    weights.resize(labels.size(), 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!labels[i].valid) continue;
      weights[i] = mode == FitMode::kUnweighted ? 1.0 : w_u[i];
      detail::require(std::isfinite(weights[i]) && weights[i] >= 0.0, ErrorKind::kInvalidArgument,
                      "fit_flow: weights must be finite and non-negative");
    }
  }

  const detail::FitObjective objective(mode == FitMode::kChamfer ? nullptr : &labels, weights, p_t,
                                       target, cfg, mode);
  FitResult result;
  result.estimate.flows.assign(p_t.size(), Vec3::Zero());
  result.report.trace.reserve(static_cast<std::size_t>(cfg.iterations));

  detail::Linearization lin = objective.linearize(result.estimate);
  result.report.initial_objective = lin.value;
  for (int it = 0; it < cfg.iterations; ++it) {
    for (std::size_t i = 0; i < p_t.size(); ++i) {
      for (int c = 0; c < 3; ++c) {
        if (lin.curvature[i][c] > 0.0) {
          result.estimate.flows[i][c] -= cfg.learning_rate * lin.grad[i][c] / lin.curvature[i][c];
        }
      }
    }
    lin = objective.linearize(result.estimate);
    if (!std::isfinite(lin.value)) {
      throw Error(ErrorKind::kDiverged, "fit_flow: objective became non-finite at iteration " +
                                            std::to_string(it) + "; lower the learning rate");
    }
    result.report.trace.push_back(lin.value);
  }

  if (mode != FitMode::kChamfer) {
    result.report.data_loss = weighted_l1_loss(labels, result.estimate, weights);
  } else {
    result.report.chamfer = chamfer_loss(warp(p_t, result.estimate), *target);
  }
  if (cfg.smoothness_weight > 0.0 && p_t.size() >= 2) {
    result.report.smoothness = laplacian_smoothness(result.estimate, objective.graph());
  }
  return result;
}

}  // namespace pseudoflow

#endif  // PSEUDOFLOW_FLOW_FIT_HPP
