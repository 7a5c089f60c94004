// pseudoflow - pseudo scene-flow labels from camera projection and 2D flow
#ifndef PSEUDOFLOW_PREPROCESS_HPP
#define PSEUDOFLOW_PREPROCESS_HPP

#include <cstdint>

#include "pseudoflow/core.hpp"
#include "pseudoflow/geometry.hpp"
#include "pseudoflow/random.hpp"

namespace pseudoflow {

struct PreprocessConfig {
  double max_depth = 35.0;       ///< meters of camera depth
  bool remove_ground = true;
  double ground_height = -1.4;   ///< signed height coordinate below which points are ground
  int height_axis = 1;           ///< coordinate holding height
  double height_sign = 1.0;      ///< multiply the coordinate by this before comparing
  std::size_t sample_n = 8192;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(max_depth > 0.0, ErrorKind::kInvalidArgument, "preprocess: max_depth must be > 0");
    detail::require(sample_n >= 1, ErrorKind::kInvalidArgument, "preprocess: sample_n must be >= 1");
    detail::require(height_axis >= 0 && height_axis <= 2, ErrorKind::kInvalidArgument,
                    "preprocess: height_axis must be 0, 1 or 2");
    detail::require(height_sign == 1.0 || height_sign == -1.0, ErrorKind::kInvalidArgument,
                    "preprocess: height_sign must be +1 or -1");
  }
};

struct PreprocessReport {
  std::size_t input = 0;
  std::size_t removed_depth = 0;
  std::size_t removed_ground = 0;
  std::size_t output = 0;
  std::size_t shortfall = 0;  ///< sample_n minus survivors when fewer than sample_n remain
};

/**
 * Depth cutoff, then ground removal, then uniform sampling without
 * replacement. Sampled points keep their original relative order.
 */
inline PointCloud preprocess(const PointCloud& pc, const CameraModel& cam,
                             const PreprocessConfig& cfg, PreprocessReport* report = nullptr) {
  cfg.validate();
  detail::require(!pc.empty(), ErrorKind::kInvalidArgument, "preprocess: empty cloud");

  PreprocessReport rep;
  rep.input = pc.size();
  std::vector<Vec3> kept;
  kept.reserve(pc.size());
  for (const auto& p : pc.points) {
    if (cam.to_camera(p).z() > cfg.max_depth) {
      ++rep.removed_depth;
      continue;
    }
    if (cfg.remove_ground && cfg.height_sign * p[cfg.height_axis] < cfg.ground_height) {
      ++rep.removed_ground;
      continue;
    }
    kept.push_back(p);
  }
  if (kept.empty()) throw Error(ErrorKind::kDegenerate, "preprocess: filtering removed every point");

  PointCloud out;
  out.frame_id = pc.frame_id;
  if (kept.size() <= cfg.sample_n) {
    rep.shortfall = cfg.sample_n - kept.size();
    out.points = std::move(kept);
  } else {
    Rng rng(cfg.seed);
    for (auto i : rng.choose(kept.size(), cfg.sample_n)) out.points.push_back(kept[i]);
  }
  rep.output = out.size();
  if (report) *report = rep;
  return out;
}

}  // namespace pseudoflow

#endif  // PSEUDOFLOW_PREPROCESS_HPP
