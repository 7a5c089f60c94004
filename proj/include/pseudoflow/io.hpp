// pseudoflow - pseudo scene-flow labels from camera projection and 2D flow
#ifndef PSEUDOFLOW_IO_HPP
#define PSEUDOFLOW_IO_HPP

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pseudoflow/core.hpp"
#include "pseudoflow/flow_field.hpp"
#include "pseudoflow/geometry.hpp"
#include "pseudoflow/label_gen.hpp"

/*
 * Binary layouts (all little-endian):
 *
 *   point cloud  "PCF1" | u32 count | count x (f32 X, f32 Y, f32 Z)
 *   flow field   f32 202021.25 | i32 width | i32 height | height x width x (f32 du, f32 dv)
 *   labels       "PSL1" | u32 count | count x (f32 fx, f32 fy, f32 fz, f32 w_u, u8 valid)
 *
 * Point clouds with a .txt / .xyz / .asc extension use the text form instead:
 * one "X Y Z" line per point.
 */

namespace pseudoflow::io {

inline constexpr std::array<char, 4> kCloudMagic{'P', 'C', 'F', '1'};
inline constexpr std::array<char, 4> kLabelMagic{'P', 'S', 'L', '1'};
inline constexpr float kFlowMagic = 202021.25f;

namespace detail {

using pseudoflow::detail::require;

class ByteWriter {
 public:
  void bytes(std::span<const char> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorKind::kIo, "cannot open for writing: " + path);
    os.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!os) throw Error(ErrorKind::kIo, "write failed: " + path);
  }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}

  static ByteReader open(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::kIo, "cannot open: " + path);
    std::vector<char> data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return ByteReader(std::move(data), path);
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  const std::string& path() const { return path_; }

  void need(std::size_t n) const {
    if (remaining() < n) throw Error(ErrorKind::kTruncated, "truncated file: " + path_);
  }

  std::array<char, 4> tag() {
    need(4);
    std::array<char, 4> t{};
    std::memcpy(t.data(), data_.data() + pos_, 4);
    pos_ += 4;
    return t;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  /// Payload must end exactly where the header says.
  void expect_end() const {
    if (remaining() != 0) {
      throw Error(ErrorKind::kBadCount, "payload longer than declared count: " + path_);
    }
  }

 private:
  std::vector<char> data_;
  std::size_t pos_ = 0;
  std::string path_;
};

inline float to_f32(double v, const std::string& path) {
  const auto f = static_cast<float>(v);
  require(std::isfinite(f), ErrorKind::kNonFinite, "value not representable as finite f32: " + path);
  return f;
}

inline float finite_f32(float v, const std::string& path) {
  require(std::isfinite(v), ErrorKind::kNonFinite, "non-finite value in " + path);
  return v;
}

inline std::uint32_t checked_count(std::size_t n) {
  require(n <= std::numeric_limits<std::uint32_t>::max(), ErrorKind::kBadCount,
          "too many entries for a u32 count");
  return static_cast<std::uint32_t>(n);
}

inline std::string read_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline std::vector<std::string_view> tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

inline double parse_number(std::string_view tok, const std::string& path) {
  double v = 0.0;
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw Error(ErrorKind::kParse, "not a number '" + std::string(tok) + "' in " + path);
  }
  require(std::isfinite(v), ErrorKind::kNonFinite, "non-finite value in " + path);
  return v;
}

}  // namespace detail

inline bool is_text_cloud_path(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".txt" || ext == ".xyz" || ext == ".asc";
}

// ---------------------------------------------------------------------------
// Point clouds

inline void write_point_cloud(const std::string& path, const PointCloud& pc) {
  if (is_text_cloud_path(path)) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error(ErrorKind::kIo, "cannot open for writing: " + path);
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& p : pc.points) {
      detail::require(p.allFinite(), ErrorKind::kNonFinite, "non-finite point for " + path);
      os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    }
    if (!os) throw Error(ErrorKind::kIo, "write failed: " + path);
    return;
  }
  detail::ByteWriter w;
  w.bytes(kCloudMagic);
  w.u32(detail::checked_count(pc.size()));
  for (const auto& p : pc.points) {
    for (int c = 0; c < 3; ++c) w.f32(detail::to_f32(p[c], path));
  }
  w.save(path);
}

inline PointCloud read_point_cloud(const std::string& path) {
  PointCloud pc;
  pc.frame_id = std::filesystem::path(path).stem().string();
  if (is_text_cloud_path(path)) {
    const std::string text = detail::read_text(path);
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      const auto toks = detail::tokens(line);
      if (toks.empty()) continue;
      if (toks.size() != 3) {
        throw Error(ErrorKind::kParse, "expected 'X Y Z' per line in " + path);
      }
      pc.points.emplace_back(detail::parse_number(toks[0], path), detail::parse_number(toks[1], path),
                             detail::parse_number(toks[2], path));
    }
    return pc;
  }
  auto r = detail::ByteReader::open(path);
  if (r.tag() != kCloudMagic) throw Error(ErrorKind::kBadMagic, "not a PCF1 point cloud: " + path);
  const std::uint32_t n = r.u32();
  r.need(static_cast<std::size_t>(n) * 12);
  pc.points.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Vec3 p;
    for (int c = 0; c < 3; ++c) p[c] = detail::finite_f32(r.f32(), path);
    pc.points.push_back(p);
  }
  r.expect_end();
  return pc;
}

/// Flows share the point-cloud container (one vector per line / record).
inline void write_flow(const std::string& path, const FlowEstimate& f) {
  PointCloud pc;
  pc.points = f.flows;
  write_point_cloud(path, pc);
}

inline FlowEstimate read_flow(const std::string& path) {
  FlowEstimate f;
  f.flows = read_point_cloud(path).points;
  return f;
}

// ---------------------------------------------------------------------------
// Calibration: 12 numbers, row-major 3x4

inline CameraModel read_calibration(const std::string& path) {
  const std::string text = detail::read_text(path);
  const auto toks = detail::tokens(text);
  if (toks.size() != 12) {
    throw Error(ErrorKind::kBadCount, "calibration needs exactly 12 numbers, found " +
                                          std::to_string(toks.size()) + " in " + path);
  }
  ProjectionMatrix m;
  for (int i = 0; i < 12; ++i) m(i / 4, i % 4) = detail::parse_number(toks[i], path);
  return CameraModel(m);
}

inline void write_calibration(const std::string& path, const CameraModel& cam) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorKind::kIo, "cannot open for writing: " + path);
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) os << cam.matrix()(r, c) << (c == 3 ? '\n' : ' ');
  }
  if (!os) throw Error(ErrorKind::kIo, "write failed: " + path);
}

// ---------------------------------------------------------------------------
// Flow field

inline void write_flow_field(const std::string& path, const FlowField2D& ff) {
  detail::ByteWriter w;
  w.f32(kFlowMagic);
  w.i32(ff.width());
  w.i32(ff.height());
  for (const auto& v : ff.vectors()) {
    w.f32(detail::to_f32(v.x(), path));
    w.f32(detail::to_f32(v.y(), path));
  }
  w.save(path);
}

inline FlowField2D read_flow_field(const std::string& path) {
  auto r = detail::ByteReader::open(path);
  if (r.f32() != kFlowMagic) throw Error(ErrorKind::kBadMagic, "bad flow magic: " + path);
  const std::int32_t width = r.i32();
  const std::int32_t height = r.i32();
  if (width < 0 || height < 0) {
    throw Error(ErrorKind::kBadDimensions, "negative flow dimensions in " + path);
  }
  if (width < 2 || height < 2) {
    throw Error(ErrorKind::kBadDimensions, "flow field must be at least 2x2 in " + path);
  }
  const std::size_t cells = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  r.need(cells * 8);
  std::vector<Vec2> vectors(cells);
  for (auto& v : vectors) {
    v.x() = detail::finite_f32(r.f32(), path);
    v.y() = detail::finite_f32(r.f32(), path);
  }
  r.expect_end();
  return FlowField2D(width, height, std::move(vectors));
}

// ---------------------------------------------------------------------------
// Labels + refined confidences

struct LabelRecord {
  std::vector<Vec3> flows;
  std::vector<double> weights;
  std::vector<std::uint8_t> valid;

  std::size_t size() const { return flows.size(); }
};

inline void write_labels(const std::string& path, const PseudoLabelSet& labels,
                         std::span<const double> w_u) {
  pseudoflow::detail::require_same_length(labels.size(), w_u.size(), "write_labels labels vs weights");
  detail::ByteWriter w;
  w.bytes(kLabelMagic);
  w.u32(detail::checked_count(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (int c = 0; c < 3; ++c) w.f32(detail::to_f32(labels[i].flow[c], path));
    w.f32(detail::to_f32(w_u[i], path));
    w.u8(labels[i].valid ? 1 : 0);
  }
  w.save(path);
}

inline void write_labels(const std::string& path, const LabelRecord& rec) {
  PseudoLabelSet labels;
  labels.labels.resize(rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    labels[i].flow = rec.flows[i];
    labels[i].valid = rec.valid[i] != 0;
  }
  write_labels(path, labels, rec.weights);
}

inline LabelRecord read_labels(const std::string& path) {
  auto r = detail::ByteReader::open(path);
  if (r.tag() != kLabelMagic) throw Error(ErrorKind::kBadMagic, "not a PSL1 label file: " + path);
  const std::uint32_t n = r.u32();
  r.need(static_cast<std::size_t>(n) * 17);
  LabelRecord rec;
  rec.flows.resize(n);
  rec.weights.resize(n);
  rec.valid.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) rec.flows[i][c] = detail::finite_f32(r.f32(), path);
    rec.weights[i] = detail::finite_f32(r.f32(), path);
    rec.valid[i] = r.u8();
  }
  r.expect_end();
  return rec;
}

/// Rebuilds labels against P^t: correspondence = p + flow. Image-plane
/// fields are not stored on disk and come back zeroed.
inline PseudoLabelSet to_label_set(const LabelRecord& rec, const PointCloud& p_t) {
  pseudoflow::detail::require_same_length(rec.size(), p_t.size(), "label file vs P^t");
  PseudoLabelSet labels;
  labels.labels.resize(rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    if (!rec.valid[i]) continue;
    labels[i].valid = true;
    labels[i].correspondence = p_t[i] + rec.flows[i];
    labels[i].flow = labels[i].correspondence - p_t[i];
  }
  return labels;
}

}  // namespace pseudoflow::io

#endif  // PSEUDOFLOW_IO_HPP
