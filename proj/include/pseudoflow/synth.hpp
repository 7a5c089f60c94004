// pseudoflow - pseudo scene-flow labels from camera projection and 2D flow
#ifndef PSEUDOFLOW_SYNTH_HPP
#define PSEUDOFLOW_SYNTH_HPP

#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "pseudoflow/core.hpp"
#include "pseudoflow/flow_field.hpp"
#include "pseudoflow/geometry.hpp"
#include "pseudoflow/label_gen.hpp"
#include "pseudoflow/random.hpp"

namespace pseudoflow::synth {

/// Rotation about `pivot` followed by a translation.
struct RigidMotion {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 pivot = Vec3::Zero();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * (p - pivot) + pivot + translation; }

  /// Rotation by `angle` radians about the vertical (camera y) axis through `pivot`.
  static RigidMotion yaw(double angle, const Vec3& pivot, const Vec3& translation) {
    RigidMotion m;
    m.rotation = Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix();
    m.pivot = pivot;
    m.translation = translation;
    return m;
  }
};

struct ObjectSpec {
  enum class Shape { kBox, kSphere };

  Shape shape = Shape::kBox;
  Vec3 center = Vec3(0.0, 0.0, 10.0);
  Vec3 half_extents = Vec3(1.0, 1.0, 1.0);  ///< box only
  double radius = 1.0;                      ///< sphere only
  std::size_t num_points = 200;
  RigidMotion motion;
};

/// KITTI-sized pinhole camera used by the default scenes.
inline CameraModel default_camera() { return CameraModel::pinhole(720.0, 720.0, 621.0, 187.5); }
inline constexpr int kDefaultWidth = 1242;
inline constexpr int kDefaultHeight = 375;

struct SceneSpec {
  std::vector<ObjectSpec> objects;
  CameraModel camera = default_camera();
  int image_width = kDefaultWidth;
  int image_height = kDefaultHeight;
  /// Sample P^{t+1} independently on the moved surfaces instead of moving P^t.
  bool resampled = false;
  /// Give every P^t point its own bilinear cell so the rendered flow field
  /// can be exact at every projection.
  bool exclusive_cells = true;
  /// Keep only surface points that are the first hit along their camera ray
  /// (P^t at time t; resampled P^{t+1} at time t+1).
  bool visible_only = true;
  std::uint64_t seed = 0;
};

struct CorruptionSpec {
  double fraction = 0.2;
  double magnitude = 0.5;
  std::uint64_t seed = 0;
};

struct SyntheticScene {
  PointCloud p_t;
  PointCloud p_t1;
  FlowEstimate gt;
  std::vector<std::size_t> object_of;  ///< object index of each P^t point
};

namespace detail {

/// Nearest f32 value. The volatile store keeps the rounding from being
/// folded away by the vectorizer.
inline double to_f32(double v) {
  volatile float f = static_cast<float>(v);
  return f;
}

/// Round to the nearest f32 so scenes survive the binary formats unchanged.
inline Vec3 quantize(const Vec3& p) { return Vec3(to_f32(p.x()), to_f32(p.y()), to_f32(p.z())); }

inline Vec3 sample_surface(const ObjectSpec& obj, Rng& rng) {
  if (obj.shape == ObjectSpec::Shape::kSphere) return obj.center + obj.radius * rng.unit_vector3();
  const Vec3& h = obj.half_extents;
  // Faces normal to x, y, z, chosen by area.
  const double ax = h.y() * h.z(), ay = h.x() * h.z(), az = h.x() * h.y();
  const double pick = rng.uniform(0.0, ax + ay + az);
  const int axis = pick < ax ? 0 : (pick < ax + ay ? 1 : 2);
  Vec3 local(rng.uniform(-h.x(), h.x()), rng.uniform(-h.y(), h.y()), rng.uniform(-h.z(), h.z()));
  local[axis] = rng.uniform() < 0.5 ? -h[axis] : h[axis];
  return obj.center + local;
}

/// Object placement at one time step: local box frame rotated by `rotation` about `center`.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 center = Vec3::Zero();
};

inline Pose pose_at_t(const ObjectSpec& obj) { return {Eigen::Matrix3d::Identity(), obj.center}; }

inline Pose pose_at_t1(const ObjectSpec& obj) {
  return {obj.motion.rotation, obj.motion.apply(obj.center)};
}

/// Ray parameter where origin + s * dir enters the object, if it does at s > 0.
inline std::optional<double> entry_parameter(const ObjectSpec& obj, const Pose& pose,
                                             const Vec3& origin, const Vec3& dir) {
  const Vec3 o = pose.rotation.transpose() * (origin - pose.center);
  const Vec3 d = pose.rotation.transpose() * dir;
  double enter = -std::numeric_limits<double>::infinity();
  double exit = std::numeric_limits<double>::infinity();
  if (obj.shape == ObjectSpec::Shape::kSphere) {
    const double a = d.squaredNorm();
    const double b = o.dot(d);
    const double c = o.squaredNorm() - obj.radius * obj.radius;
    const double disc = b * b - a * c;
    if (disc < 0.0) return std::nullopt;
    enter = (-b - std::sqrt(disc)) / a;
    exit = (-b + std::sqrt(disc)) / a;
  } else {
    for (int k = 0; k < 3; ++k) {
      const double h = obj.half_extents[k];
      if (d[k] == 0.0) {
        if (std::abs(o[k]) > h) return std::nullopt;
        continue;
      }
      double s0 = (-h - o[k]) / d[k];
      double s1 = (h - o[k]) / d[k];
      if (s0 > s1) std::swap(s0, s1);
      enter = std::max(enter, s0);
      exit = std::min(exit, s1);
    }
    if (enter > exit) return std::nullopt;
  }
  if (exit <= 0.0) return std::nullopt;
  return enter;
}

/// True when surface point p of object `self` is the first surface its camera ray meets.
inline bool first_hit(const Vec3& p, std::size_t self, const std::vector<ObjectSpec>& objects,
                      bool moved, const Vec3& camera_center) {
  constexpr double kTol = 1e-6;
  const Vec3 dir = p - camera_center;
  for (std::size_t o = 0; o < objects.size(); ++o) {
    const Pose pose = moved ? pose_at_t1(objects[o]) : pose_at_t(objects[o]);
    const auto enter = entry_parameter(objects[o], pose, camera_center, dir);
    if (!enter) continue;
    if (o == self && *enter < 1.0 - kTol) return false;  // p lies on the far side
    if (o != self && *enter < 1.0 - kTol) return false;  // occluded
  }
  return true;
}

inline std::optional<BilinearCell> cell_if_visible(const Vec3& p, const SceneSpec& spec) {
  const ImagePoint ip = project_point(p, spec.camera);
  if (!ip.valid) return std::nullopt;
  return bilinear_cell(ip.uv, spec.image_width, spec.image_height);
}

/// Felzenszwalb-Huttenlocher lower envelope: d[p] = min_q (p - q)^2 + f[q], with argmin.
inline void distance_transform_1d(const std::vector<double>& f, std::vector<double>& d,
                                  std::vector<int>& arg) {
  const int n = static_cast<int>(f.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    const auto intersect = [&](int r) {
      return ((f[q] + double(q) * q) - (f[r] + double(r) * r)) / (2.0 * q - 2.0 * r);
    };
    double s = intersect(v[k]);
    while (s <= z[k]) s = intersect(v[--k]);  // z[0] = -inf stops the loop
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  d.assign(n, inf);
  arg.assign(n, -1);
  if (k < 0) return;
  int j = 0;
  for (int p = 0; p < n; ++p) {
    while (z[j + 1] < p) ++j;
    d[p] = (double(p) - v[j]) * (double(p) - v[j]) + f[v[j]];
    arg[p] = v[j];
  }
}

/// For every cell of a width x height grid, the linear index of the nearest seeded cell.
inline std::vector<std::size_t> nearest_seed(const std::vector<std::uint8_t>& seeded, int width,
                                             int height) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> col_d(seeded.size());
  std::vector<int> col_arg(seeded.size());
  std::vector<double> f, d;
  std::vector<int> arg;
  for (int x = 0; x < width; ++x) {
    f.assign(height, inf);
    for (int y = 0; y < height; ++y) {
      if (seeded[static_cast<std::size_t>(y) * width + x]) f[y] = 0.0;
    }
    distance_transform_1d(f, d, arg);
    for (int y = 0; y < height; ++y) {
      col_d[static_cast<std::size_t>(y) * width + x] = d[y];
      col_arg[static_cast<std::size_t>(y) * width + x] = arg[y];
    }
  }
  std::vector<std::size_t> source(seeded.size());
  for (int y = 0; y < height; ++y) {
    f.assign(col_d.begin() + static_cast<std::ptrdiff_t>(y) * width,
             col_d.begin() + static_cast<std::ptrdiff_t>(y + 1) * width);
    distance_transform_1d(f, d, arg);
    for (int x = 0; x < width; ++x) {
      const int sx = arg[x];
      const int sy = col_arg[static_cast<std::size_t>(y) * width + sx];
      source[static_cast<std::size_t>(y) * width + x] = static_cast<std::size_t>(sy) * width + sx;
    }
  }
  return source;
}

}  // namespace detail

/**
 * @brief Rigidly moving boxes and spheres with analytic ground truth.
 *
 * P^{t+1} is P^t moved by each object's motion (or, when `resampled`, an
 * independent sample of the moved surfaces). Points are kept only if both
 * ends project inside the image. All coordinates are f32-representable.
 */
inline SyntheticScene make_rigid_scene(const SceneSpec& spec) {
  for (const auto& obj : spec.objects) {
    pseudoflow::detail::require(obj.num_points >= 1, ErrorKind::kInvalidArgument,
                                "scene spec: every object needs at least one point");
  }
  Rng rng(spec.seed);
  Rng resample_rng(spec.seed ^ 0x9E3779B97F4A7C15ull);
  const Vec3 camera_center = spec.camera.from_camera(Vec3::Zero());
  SyntheticScene scene;
  std::vector<std::uint8_t> occupied(
      static_cast<std::size_t>(spec.image_width) * spec.image_height, 0);
  const auto corner_index = [&](int x, int y) {
    return static_cast<std::size_t>(y) * spec.image_width + x;
  };

  for (std::size_t o = 0; o < spec.objects.size(); ++o) {
    const ObjectSpec& obj = spec.objects[o];
    std::size_t accepted = 0;
    for (std::size_t attempt = 0; attempt < 50 * obj.num_points && accepted < obj.num_points;
         ++attempt) {
      const Vec3 p = detail::quantize(detail::sample_surface(obj, rng));
      const Vec3 moved = detail::quantize(obj.motion.apply(p));
      const auto cell = detail::cell_if_visible(p, spec);
      if (!cell || !detail::cell_if_visible(moved, spec)) continue;
      if (spec.visible_only && !detail::first_hit(p, o, spec.objects, false, camera_center)) continue;
      if (spec.exclusive_cells) {
        const std::size_t corners[4] = {
            corner_index(cell->x0, cell->y0), corner_index(cell->x0 + 1, cell->y0),
            corner_index(cell->x0, cell->y0 + 1), corner_index(cell->x0 + 1, cell->y0 + 1)};
        bool free = true;
        for (auto c : corners) free = free && !occupied[c];
        if (!free) continue;
        for (auto c : corners) occupied[c] = 1;
      }
      scene.p_t.points.push_back(p);
      scene.p_t1.points.push_back(moved);
      scene.gt.flows.push_back(moved - p);
      scene.object_of.push_back(o);
      ++accepted;
    }
    if (spec.resampled) {
      // Replace this object's moved copies with an independent surface sample.
      std::size_t first = scene.p_t1.size() - accepted;
      std::size_t filled = 0;
      for (std::size_t attempt = 0; attempt < 50 * obj.num_points && filled < accepted; ++attempt) {
        const Vec3 moved =
            detail::quantize(obj.motion.apply(detail::sample_surface(obj, resample_rng)));
        if (!detail::cell_if_visible(moved, spec)) continue;
        if (spec.visible_only && !detail::first_hit(moved, o, spec.objects, true, camera_center)) {
          continue;
        }
        scene.p_t1.points[first + filled++] = moved;
      }
      scene.p_t1.points.resize(first + filled);
    }
  }
  if (scene.p_t.empty() || scene.p_t1.empty()) {
    throw Error(ErrorKind::kDegenerate, "scene spec produced no visible points");
  }
  scene.p_t.frame_id = "t";
  scene.p_t1.frame_id = "t1";
  return scene;
}

/**
 * @brief Optical-flow field that is exact at every projection of P^t.
 *
 * Each point's image displacement is written to the four corners of its
 * bilinear cell; all other cells copy the nearest written cell (Euclidean
 * distance on the grid).
 */
inline FlowField2D render_exact_flow_field(const PointCloud& p_t, const FlowEstimate& gt,
                                           const CameraModel& cam, int width, int height) {
  pseudoflow::detail::require_same_length(p_t.size(), gt.size(), "render P^t vs gt flow");
  pseudoflow::detail::require(width >= 2 && height >= 2, ErrorKind::kBadDimensions,
                              "render: image must be at least 2x2");
  const std::size_t cells = static_cast<std::size_t>(width) * height;
  std::vector<Vec2> vectors(cells, Vec2::Zero());
  std::vector<std::uint8_t> written(cells, 0);

  for (std::size_t i = 0; i < p_t.size(); ++i) {
    const ImagePoint from = project_point(p_t[i], cam);
    const ImagePoint to = project_point(p_t[i] + gt.flows[i], cam);
    const auto cell = from.valid ? bilinear_cell(from.uv, width, height) : std::nullopt;
    if (!cell || !to.valid || !bilinear_cell(to.uv, width, height)) {
      throw Error(ErrorKind::kDegenerate,
                  "render: point " + std::to_string(i) + " projects outside the image");
    }
    const Vec2 flow = to.uv - from.uv;
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const std::size_t c = static_cast<std::size_t>(cell->y0 + dy) * width + cell->x0 + dx;
        if (written[c] && vectors[c] != flow) {
          throw Error(ErrorKind::kDegenerate, "render: points " + std::to_string(i) +
                                                  " and an earlier point share a flow cell");
        }
        vectors[c] = flow;
        written[c] = 1;
      }
    }
  }
  if (p_t.empty()) return FlowField2D(width, height, std::move(vectors));

  const auto source = detail::nearest_seed(written, width, height);
  for (std::size_t c = 0; c < cells; ++c) {
    if (!written[c]) vectors[c] = vectors[source[c]];
  }
  return FlowField2D(width, height, std::move(vectors));
}

inline FlowField2D render_exact_flow_field(const SyntheticScene& scene, const SceneSpec& spec) {
  return render_exact_flow_field(scene.p_t, scene.gt, spec.camera, spec.image_width,
                                 spec.image_height);
}

// ---------------------------------------------------------------------------
// Corruption

namespace detail {

inline std::size_t corrupted_count(std::size_t n, double fraction) {
  pseudoflow::detail::require(fraction >= 0.0 && fraction <= 1.0, ErrorKind::kInvalidArgument,
                              "corruption fraction must lie in [0, 1]");
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

}  // namespace detail

/// Offsets round(fraction * n) entries by `magnitude` in seeded random
/// directions; returns the ascending indices that were changed.
inline std::vector<std::size_t> corrupt_in_place(std::vector<Vec3>& v, const CorruptionSpec& spec) {
  Rng rng(spec.seed);
  auto mask = rng.choose(v.size(), detail::corrupted_count(v.size(), spec.fraction));
  for (auto i : mask) v[i] += spec.magnitude * rng.unit_vector3();
  return mask;
}

inline std::vector<std::size_t> corrupt_in_place(std::vector<Vec2>& v, const CorruptionSpec& spec) {
  Rng rng(spec.seed);
  auto mask = rng.choose(v.size(), detail::corrupted_count(v.size(), spec.fraction));
  for (auto i : mask) v[i] += spec.magnitude * rng.unit_vector2();
  return mask;
}

template <class T>
struct Corrupted {
  T data;
  std::vector<std::size_t> mask;
};

inline Corrupted<FlowEstimate> corrupt(const FlowEstimate& flows, const CorruptionSpec& spec) {
  Corrupted<FlowEstimate> out{flows, {}};
  out.mask = corrupt_in_place(out.data.flows, spec);
  return out;
}

/// Corrupts individual grid vectors (magnitude in image units).
inline Corrupted<FlowField2D> corrupt(const FlowField2D& ff, const CorruptionSpec& spec) {
  std::vector<Vec2> vectors = ff.vectors();
  auto mask = corrupt_in_place(vectors, spec);
  return {FlowField2D(ff.width(), ff.height(), std::move(vectors)), std::move(mask)};
}

/**
 * Moves the pseudo correspondence of a fraction of the valid labels and
 * recomputes flow = correspondence - p so the label identity still holds.
 * The mask holds indices into the full label set.
 */
inline Corrupted<PseudoLabelSet> corrupt(const PseudoLabelSet& labels, const PointCloud& p_t,
                                         const CameraModel& cam, const CorruptionSpec& spec) {
  pseudoflow::detail::require_same_length(labels.size(), p_t.size(), "corrupt labels vs P^t");
  std::vector<std::size_t> valid_ids;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].valid) valid_ids.push_back(i);
  }
  Rng rng(spec.seed);
  const auto picks = rng.choose(valid_ids.size(), detail::corrupted_count(valid_ids.size(), spec.fraction));
  Corrupted<PseudoLabelSet> out{labels, {}};
  for (auto k : picks) {
    const std::size_t i = valid_ids[k];
    PseudoLabel& l = out.data[i];
    l.correspondence += spec.magnitude * rng.unit_vector3();
    l.flow = l.correspondence - p_t[i];
    const ImagePoint ip = project_point(l.correspondence, cam);
    if (ip.valid) l.corr_2d = ip.uv;
    out.mask.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Default randomized layouts

/**
 * Four objects in front of the default camera: random boxes and spheres at
 * 8-25 m, each with a random yaw (up to 10 degrees) and translation (up to
 * about 1.5 m); one object in four is static.
 */
inline SceneSpec default_scene_spec(std::uint64_t seed, std::size_t points_per_object = 400,
                                    bool resampled = false) {
  SceneSpec spec;
  spec.seed = seed;
  spec.resampled = resampled;
  Rng rng(seed * 0x2545F4914F6CDD1Dull + 17);
  for (int o = 0; o < 4; ++o) {
    ObjectSpec obj;
    const double z = rng.uniform(8.0, 25.0);
    obj.center = Vec3(z * rng.uniform(-0.55, 0.55), z * rng.uniform(-0.1, 0.1), z);
    obj.shape = rng.uniform() < 0.6 ? ObjectSpec::Shape::kBox : ObjectSpec::Shape::kSphere;
    obj.half_extents = Vec3(rng.uniform(0.5, 2.0), rng.uniform(0.4, 1.2), rng.uniform(0.5, 2.0));
    obj.radius = rng.uniform(0.6, 1.6);
    obj.num_points = points_per_object;
    if (o != 3) {
      const double yaw = rng.uniform(-10.0, 10.0) * std::numbers::pi / 180.0;
      const Vec3 t(rng.uniform(-1.0, 1.0), rng.uniform(-0.2, 0.2), rng.uniform(-1.5, 1.5));
      obj.motion = RigidMotion::yaw(yaw, obj.center, t);
    }
    spec.objects.push_back(obj);
  }
  return spec;
}

}  // namespace pseudoflow::synth

#endif  // PSEUDOFLOW_SYNTH_HPP
