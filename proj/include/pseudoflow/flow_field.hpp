// pseudoflow - pseudo scene-flow labels from camera projection and 2D flow
#ifndef PSEUDOFLOW_FLOW_FIELD_HPP
#define PSEUDOFLOW_FLOW_FIELD_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pseudoflow/core.hpp"

namespace pseudoflow {

/// Grid cell whose four corners enclose an in-bounds sample position.
struct BilinearCell {
  int x0 = 0;
  int y0 = 0;
  double fx = 0.0;
  double fy = 0.0;
};

/// Cell used for bilinear sampling in a width x height grid. The last
/// row/column folds into the previous cell with weight 1, so every in-bounds
/// position has four corners.
inline std::optional<BilinearCell> bilinear_cell(const Vec2& uv, int width, int height) {
  if (!(uv.x() >= 0.0 && uv.y() >= 0.0 && uv.x() <= width - 1 && uv.y() <= height - 1)) {
    return std::nullopt;
  }
  BilinearCell c;
  c.x0 = std::min(static_cast<int>(std::floor(uv.x())), width - 2);
  c.y0 = std::min(static_cast<int>(std::floor(uv.y())), height - 2);
  c.fx = uv.x() - c.x0;
  c.fy = uv.y() - c.y0;
  return c;
}

/**
 * @brief Dense H x W grid of 2D image motion, row-major.
 *
 * Vector (x, y) holds the flow at integer pixel position u = x, v = y.
 */
class FlowField2D {
 public:
  FlowField2D() = default;

  FlowField2D(int width, int height, std::vector<Vec2> vectors)
      : width_(width), height_(height), vectors_(std::move(vectors)) {
    if (width < 2 || height < 2) {
      throw Error(ErrorKind::kBadDimensions, "flow field must be at least 2x2, got " +
                                                 std::to_string(width) + "x" +
                                                 std::to_string(height));
    }
    detail::require_same_length(vectors_.size(), static_cast<std::size_t>(width) * height,
                                "flow field payload");
    for (const auto& v : vectors_) {
      detail::require(v.allFinite(), ErrorKind::kNonFinite, "flow field has non-finite vectors");
    }
  }

  static FlowField2D constant(int width, int height, const Vec2& value) {
    return FlowField2D(width, height,
                       std::vector<Vec2>(static_cast<std::size_t>(width) * height, value));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<Vec2>& vectors() const { return vectors_; }

  const Vec2& at(int x, int y) const { return vectors_[index(x, y)]; }
  Vec2& at(int x, int y) { return vectors_[index(x, y)]; }

  bool in_bounds(const Vec2& uv) const {
    return uv.x() >= 0.0 && uv.y() >= 0.0 && uv.x() <= width_ - 1 && uv.y() <= height_ - 1;
  }

  std::optional<BilinearCell> cell_of(const Vec2& uv) const {
    return bilinear_cell(uv, width_, height_);
  }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Vec2> vectors_;
};

/// Bilinear sample; std::nullopt marks a position outside [0, W-1] x [0, H-1].
inline std::optional<Vec2> sample_flow(const FlowField2D& ff, const Vec2& uv) {
  const auto cell = ff.cell_of(uv);
  if (!cell) return std::nullopt;
  const auto [x0, y0, fx, fy] = *cell;
  // Weights of exactly 0 and 1 reproduce grid vectors bit-for-bit.
  const Vec2 top = (1.0 - fx) * ff.at(x0, y0) + fx * ff.at(x0 + 1, y0);
  const Vec2 bottom = (1.0 - fx) * ff.at(x0, y0 + 1) + fx * ff.at(x0 + 1, y0 + 1);
  return (1.0 - fy) * top + fy * bottom;
}

inline Vec2 displace(const Vec2& uv, const Vec2& flow) { return uv + flow; }

}  // namespace pseudoflow

#endif  // PSEUDOFLOW_FLOW_FIELD_HPP
