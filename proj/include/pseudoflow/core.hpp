// pseudoflow - pseudo scene-flow labels from camera projection and 2D flow
#ifndef PSEUDOFLOW_CORE_HPP
#define PSEUDOFLOW_CORE_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pseudoflow {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Category of a failure, so callers (and the CLI) can tell them apart.
enum class ErrorKind {
  kInvalidArgument,  ///< precondition violated by the caller
  kLengthMismatch,   ///< aligned sequences differ in length
  kDegenerate,       ///< geometry admits no answer (no valid projections, z <= 0, ...)
  kSingular,         ///< camera block A not invertible
  kDiverged,         ///< optimizer produced a non-finite objective
  kIo,               ///< file could not be opened / written
  kBadMagic,
  kTruncated,
  kNonFinite,
  kBadCount,
  kParse,
  kBadDimensions,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kLengthMismatch: return "length mismatch";
    case ErrorKind::kDegenerate: return "degenerate input";
    case ErrorKind::kSingular: return "singular camera";
    case ErrorKind::kDiverged: return "diverged";
    case ErrorKind::kIo: return "io error";
    case ErrorKind::kBadMagic: return "bad magic";
    case ErrorKind::kTruncated: return "truncated payload";
    case ErrorKind::kNonFinite: return "non-finite value";
    case ErrorKind::kBadCount: return "bad count";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kBadDimensions: return "bad dimensions";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// N x 3 positions in meters. Pipeline operations require N >= 1.
struct PointCloud {
  std::vector<Vec3> points;
  std::string frame_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Vec3& operator[](std::size_t i) const { return points[i]; }
  Vec3& operator[](std::size_t i) { return points[i]; }
};

/// Per-point 3D flow vectors aligned with P^t.
struct FlowEstimate {
  std::vector<Vec3> flows;

  std::size_t size() const { return flows.size(); }
};

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

inline bool all_finite(const PointCloud& pc) {
  for (const auto& p : pc.points) {
    if (!p.allFinite()) return false;
  }
  return true;
}

namespace detail {

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::kLengthMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace detail
}  // namespace pseudoflow

#endif  // PSEUDOFLOW_CORE_HPP
