// pseudoflow - pseudo scene-flow labels from camera projection and 2D flow
#ifndef PSEUDOFLOW_GEOMETRY_HPP
#define PSEUDOFLOW_GEOMETRY_HPP

#include <Eigen/Core>
#include <Eigen/LU>

#include <cmath>
#include <vector>

#include "pseudoflow/core.hpp"

namespace pseudoflow {

/// Points closer to the camera plane than this are not projected.
inline constexpr double kDepthEpsilon = 1e-6;

/// Minimum |det(A)| accepted when constructing a camera.
inline constexpr double kSingularDeterminant = 1e-12;

using ProjectionMatrix = Eigen::Matrix<double, 3, 4>;

/**
 * @brief Perspective camera M = [A | b].
 *
 * A world point p maps to camera coordinates [x, y, z] = A p + b and to the
 * image plane at (x / z, y / z). "Depth" is always the camera-frame z.
 */
class CameraModel {
 public:
  explicit CameraModel(const ProjectionMatrix& m) : m_(m) {
    detail::require(m.allFinite(), ErrorKind::kNonFinite, "camera matrix has non-finite entries");
    const Eigen::Matrix3d a = m.leftCols<3>();
    const double det = a.determinant();
    if (!(std::abs(det) > kSingularDeterminant)) {
      throw Error(ErrorKind::kSingular, "camera block A is singular (|det| <= 1e-12)");
    }
    lu_ = a.partialPivLu();
  }

  static CameraModel identity() {
    ProjectionMatrix m = ProjectionMatrix::Zero();
    m.leftCols<3>().setIdentity();
    return CameraModel(m);
  }

  /// Pinhole intrinsics with the camera frame equal to the world frame.
  static CameraModel pinhole(double fx, double fy, double cx, double cy) {
    ProjectionMatrix m = ProjectionMatrix::Zero();
    m(0, 0) = fx;
    m(0, 2) = cx;
    m(1, 1) = fy;
    m(1, 2) = cy;
    m(2, 2) = 1.0;
    return CameraModel(m);
  }

  const ProjectionMatrix& matrix() const { return m_; }
  Eigen::Matrix3d A() const { return m_.leftCols<3>(); }
  Vec3 b() const { return m_.col(3); }

  Vec3 to_camera(const Vec3& p) const { return m_.leftCols<3>() * p + m_.col(3); }

  /// Solves A p = q - b.
  Vec3 from_camera(const Vec3& q) const { return lu_.solve(q - m_.col(3)); }

 private:
  ProjectionMatrix m_;
  Eigen::PartialPivLU<Eigen::Matrix3d> lu_;
};

struct ImagePoint {
  Vec2 uv = Vec2::Zero();
  double cam_depth = 0.0;
  bool valid = false;
};

inline ImagePoint project_point(const Vec3& p, const CameraModel& cam) {
  const Vec3 q = cam.to_camera(p);
  ImagePoint ip;
  ip.cam_depth = q.z();
  if (q.z() > kDepthEpsilon) {
    ip.uv = Vec2(q.x() / q.z(), q.y() / q.z());
    ip.valid = ip.uv.allFinite();
  }
  return ip;
}

inline std::vector<ImagePoint> project_cloud(const PointCloud& pc, const CameraModel& cam) {
  std::vector<ImagePoint> out;
  out.reserve(pc.size());
  for (const auto& p : pc.points) out.push_back(project_point(p, cam));
  return out;
}

/// Inverse of project_point for a known camera depth: A^-1 ((u z, v z, z) - b).
inline Vec3 lift_to_3d(const Vec2& uv, double z_star, const CameraModel& cam) {
  if (!(z_star > 0.0)) {
    throw Error(ErrorKind::kDegenerate, "lift_to_3d: camera depth must be positive");
  }
  return cam.from_camera(Vec3(uv.x() * z_star, uv.y() * z_star, z_star));
}

}  // namespace pseudoflow

#endif  // PSEUDOFLOW_GEOMETRY_HPP
