// pseudoflow - pseudo scene-flow labels from camera projection and 2D flow
#ifndef PSEUDOFLOW_METRICS_HPP
#define PSEUDOFLOW_METRICS_HPP

#include <cmath>
#include <limits>
#include <ostream>

#include "pseudoflow/core.hpp"

namespace pseudoflow {

struct MetricsReport {
  double epe3d = 0.0;     ///< mean end-point error, meters
  double acc3ds = 0.0;    ///< e < 0.05 m or relative < 5%
  double acc3dr = 0.0;    ///< e < 0.10 m or relative < 10%
  double outliers = 0.0;  ///< e > 0.30 m or relative > 10%
  std::size_t n_points = 0;
};

/// Relative error; 0 when both error and ground truth vanish, +inf when only the ground truth does.
inline double relative_error(double error, double gt_norm) {
  if (gt_norm > 0.0) return error / gt_norm;
  return error == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

inline MetricsReport evaluate(const FlowEstimate& pred, const FlowEstimate& gt) {
  detail::require_same_length(pred.size(), gt.size(), "evaluate pred vs gt");
  detail::require(pred.size() >= 1, ErrorKind::kInvalidArgument, "evaluate: empty input");

  double epe_sum = 0.0;
  std::size_t strict = 0, relaxed = 0, outlier = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = (pred.flows[i] - gt.flows[i]).norm();
    const double rel = relative_error(e, gt.flows[i].norm());
    epe_sum += e;
    strict += (e < 0.05 || rel < 0.05) ? 1 : 0;
    relaxed += (e < 0.10 || rel < 0.10) ? 1 : 0;
    outlier += (e > 0.30 || rel > 0.10) ? 1 : 0;
  }
  const double n = static_cast<double>(pred.size());
  MetricsReport r;
  r.n_points = pred.size();
  r.epe3d = epe_sum / n;
  r.acc3ds = strict / n;
  r.acc3dr = relaxed / n;
  r.outliers = outlier / n;
  return r;
}

/// Flat "key value" block, one metric per line.
inline void write_report(std::ostream& os, const MetricsReport& r) {
  const auto old = os.precision(9);
  os << "EPE3D " << r.epe3d << '\n'
     << "Acc3DS " << r.acc3ds << '\n'
     << "Acc3DR " << r.acc3dr << '\n'
     << "Outliers " << r.outliers << '\n'
     << "n_points " << r.n_points << '\n';
  os.precision(old);
}

}  // namespace pseudoflow

#endif  // PSEUDOFLOW_METRICS_HPP
