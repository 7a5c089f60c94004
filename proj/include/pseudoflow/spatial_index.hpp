// pseudoflow - pseudo scene-flow labels from camera projection and 2D flow
#ifndef PSEUDOFLOW_SPATIAL_INDEX_HPP
#define PSEUDOFLOW_SPATIAL_INDEX_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "pseudoflow/core.hpp"
#include "pseudoflow/geometry.hpp"

namespace pseudoflow {

struct Neighbor {
  std::size_t id = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

namespace detail {

template <int Dim>
using Coords = std::array<double, Dim>;

template <int Dim>
double squared_distance(const Coords<Dim>& a, const Coords<Dim>& b) {
  double s = 0.0;
  for (int d = 0; d < Dim; ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

/// Strict weak order on candidates: closer first, then lower id.
struct Candidate {
  double sq = 0.0;
  std::size_t id = 0;

  bool operator<(const Candidate& o) const { return sq < o.sq || (sq == o.sq && id < o.id); }
};

}  // namespace detail

/**
 * Static k-d tree over Dim-dimensional points with deterministic tie-breaking.
 *
 * Every candidate is ranked by (squared distance, id), the same key the
 * brute-force scans use, so indexed and brute-force answers agree exactly.
 */
template <int Dim>
class KdTree {
 public:
  using Coords = detail::Coords<Dim>;

  KdTree() = default;

  KdTree(std::vector<Coords> points, std::vector<std::size_t> ids)
      : points_(std::move(points)), ids_(std::move(ids)) {
    detail::require_same_length(points_.size(), ids_.size(), "kd-tree ids");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!order_.empty()) root_ = build(0, order_.size());
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Coords>& points() const { return points_; }
  const std::vector<std::size_t>& ids() const { return ids_; }

  std::optional<Neighbor> nearest(const Coords& q) const {
    auto found = knn(q, 1, std::nullopt);
    if (found.empty()) return std::nullopt;
    return found.front();
  }

  /// Up to k nearest entries, ascending by (distance, id). Entries whose id
  /// equals `exclude` are skipped.
  std::vector<Neighbor> knn(const Coords& q, std::size_t k,
                            std::optional<std::size_t> exclude) const {
    std::vector<Neighbor> out;
    if (k == 0 || nodes_.empty()) return out;
    std::priority_queue<detail::Candidate> heap;  // max-heap: worst on top
    search(root_, q, k, exclude.value_or(kNoId), heap);
    out.resize(heap.size());
    for (std::size_t i = heap.size(); i-- > 0;) {
      out[i] = Neighbor{heap.top().id, std::sqrt(heap.top().sq)};
      heap.pop();
    }
    return out;
  }

 private:
  static constexpr std::size_t kLeafSize = 8;
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  static constexpr std::size_t kNoId = std::numeric_limits<std::size_t>::max();

  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::uint32_t left = kNone;
    std::uint32_t right = kNone;
  };

  std::uint32_t build(std::size_t begin, std::size_t end) {
    const auto node_id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return node_id;

    // Split on the axis of largest spread.
    Coords lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (std::size_t i = begin; i < end; ++i) {
      for (int d = 0; d < Dim; ++d) {
        lo[d] = std::min(lo[d], points_[order_[i]][d]);
        hi[d] = std::max(hi[d], points_[order_[i]][d]);
      }
    }
    int axis = 0;
    for (int d = 1; d < Dim; ++d) {
      if (hi[d] - lo[d] > hi[axis] - lo[axis]) axis = d;
    }
    if (!(hi[axis] > lo[axis])) return node_id;  // all coincident

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];

    nodes_[node_id].axis = axis;
    nodes_[node_id].split = split;
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[node_id].left = left;
    nodes_[node_id].right = right;
    return node_id;
  }

  void search(std::uint32_t node_id, const Coords& q, std::size_t k,
              std::size_t exclude, std::priority_queue<detail::Candidate>& heap) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t slot = order_[i];
        if (ids_[slot] == exclude) continue;
        const detail::Candidate c{detail::squared_distance<Dim>(points_[slot], q), ids_[slot]};
        if (heap.size() < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    // Left holds coordinates <= split, right holds >= split.
    const double diff = q[node.axis] - node.split;
    const auto near = diff <= 0.0 ? node.left : node.right;
    const auto far = diff <= 0.0 ? node.right : node.left;
    search(near, q, k, exclude, heap);
    // Equal bound may still hide a lower-id tie, so only prune when strictly worse.
    if (heap.size() < k || diff * diff <= heap.top().sq) search(far, q, k, exclude, heap);
  }

  std::vector<Coords> points_;
  std::vector<std::size_t> ids_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
};

/// Nearest-neighbor search over valid image-plane projections.
class PlanarIndex {
 public:
  explicit PlanarIndex(std::span<const ImagePoint> points) {
    std::vector<detail::Coords<2>> coords;
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!points[i].valid) continue;
      coords.push_back({points[i].uv.x(), points[i].uv.y()});
      ids.push_back(i);
    }
    if (coords.empty()) {
      throw Error(ErrorKind::kDegenerate, "planar index: no valid projected points");
    }
    tree_ = KdTree<2>(std::move(coords), std::move(ids));
  }

  std::size_t size() const { return tree_.size(); }
  const KdTree<2>& tree() const { return tree_; }

 private:
  KdTree<2> tree_;
};

inline PlanarIndex build_planar(std::span<const ImagePoint> points) { return PlanarIndex(points); }

inline Neighbor nearest_planar(const PlanarIndex& idx, const Vec2& q) {
  return *idx.tree().nearest({q.x(), q.y()});
}

/// k-NN search over 3D positions; ids are indices into the source cloud.
class VolumeIndex {
 public:
  explicit VolumeIndex(const PointCloud& pc) {
    std::vector<detail::Coords<3>> coords;
    std::vector<std::size_t> ids;
    coords.reserve(pc.size());
    ids.reserve(pc.size());
    for (std::size_t i = 0; i < pc.size(); ++i) {
      coords.push_back({pc[i].x(), pc[i].y(), pc[i].z()});
      ids.push_back(i);
    }
    tree_ = KdTree<3>(std::move(coords), std::move(ids));
  }

  std::size_t size() const { return tree_.size(); }
  const KdTree<3>& tree() const { return tree_; }

 private:
  KdTree<3> tree_;
};

/// Pass `self` when q is itself entry `self` of the indexed cloud.
inline std::vector<Neighbor> knn_volume(const VolumeIndex& idx, const Vec3& q, std::size_t k,
                                        std::optional<std::size_t> self = std::nullopt) {
  detail::require(k >= 1, ErrorKind::kInvalidArgument, "knn_volume: k must be >= 1");
  return idx.tree().knn({q.x(), q.y(), q.z()}, k, self);
}

// Reference scans with the same contracts as the indexed queries.

inline std::optional<Neighbor> brute_force_nearest(std::span<const ImagePoint> points,
                                                   const Vec2& q) {
  std::optional<detail::Candidate> best;
  const detail::Coords<2> qc{q.x(), q.y()};
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].valid) continue;
    const detail::Candidate c{
        detail::squared_distance<2>({points[i].uv.x(), points[i].uv.y()}, qc), i};
    if (!best || c < *best) best = c;
  }
  if (!best) return std::nullopt;
  return Neighbor{best->id, std::sqrt(best->sq)};
}

inline std::vector<Neighbor> brute_force_knn(const PointCloud& pc, const Vec3& q, std::size_t k,
                                             std::optional<std::size_t> self = std::nullopt) {
  std::vector<detail::Candidate> all;
  all.reserve(pc.size());
  const detail::Coords<3> qc{q.x(), q.y(), q.z()};
  const bool exclude = self.has_value();
  const std::size_t self_id = self.value_or(0);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    if (exclude && i == self_id) continue;
    all.push_back({detail::squared_distance<3>({pc[i].x(), pc[i].y(), pc[i].z()}, qc), i});
  }
  std::sort(all.begin(), all.end());
  all.resize(std::min(all.size(), k));
  std::vector<Neighbor> out;
  out.reserve(all.size());
  for (const auto& c : all) out.push_back({c.id, std::sqrt(c.sq)});
  return out;
}

}  // namespace pseudoflow

#endif  // PSEUDOFLOW_SPATIAL_INDEX_HPP
