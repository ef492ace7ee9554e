#include "mmp/prediction.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace mmp {

void ObstacleTrack::validate() const {
  if (history.empty()) throw std::invalid_argument("track " + id + " has no samples");
  if (!(radius > 0.0)) throw std::invalid_argument("track " + id + " radius must be positive");
  for (std::size_t i = 1; i < history.size(); ++i)
    if (!(history[i].time > history[i - 1].time))
      throw std::invalid_argument("track " + id + " timestamps must be strictly increasing");
}

void ProbMapStack::validate() const {
  if (maps.empty()) throw ParseError("probability map stack is empty");
  if (!(step_duration > 0.0)) throw ParseError("step_duration must be positive");
  const ScalarGrid& ref = maps.front();
  for (std::size_t s = 0; s < maps.size(); ++s) {
    const ScalarGrid& g = maps[s];
    g.validate();
    if (g.width != ref.width || g.height != ref.height || g.resolution != ref.resolution ||
        g.origin != ref.origin)
      throw ParseError("shape mismatch: map " + std::to_string(s) + " differs from map 0");
    for (double v : g.values)
      if (!(v >= 0.0 && v <= 1.0))
        throw ParseError("value out of range [0, 1] in map " + std::to_string(s));
  }
}

Vec2 cvm_velocity(const ObstacleTrack& track) {
  const std::size_t n = std::min<std::size_t>(track.history.size(), 8);
  if (n < 2) return Vec2::Zero();
  const auto first = track.history.end() - static_cast<std::ptrdiff_t>(n);

  double t_mean = 0.0;
  Vec2 p_mean = Vec2::Zero();
  for (auto it = first; it != track.history.end(); ++it) {
    t_mean += it->time;
    p_mean += it->position;
  }
  t_mean /= static_cast<double>(n);
  p_mean /= static_cast<double>(n);

  double stt = 0.0;
  Vec2 stp = Vec2::Zero();
  for (auto it = first; it != track.history.end(); ++it) {
    const double dt = it->time - t_mean;
    stt += dt * dt;
    stp += dt * (it->position - p_mean);
  }
  if (stt <= 0.0) return Vec2::Zero();
  return stp / stt;
}

namespace {

void append_arc(std::vector<Point2>& out, const Point2& c, double r, double from, double to, int segments) {
  for (int i = 0; i <= segments; ++i) {
    const double t = from + (to - from) * static_cast<double>(i) / segments;
    out.emplace_back(c.x() + r * std::cos(t), c.y() + r * std::sin(t));
  }
}

}  // namespace

Efrs cvm_efrs(const ObstacleTrack& track, double tau_max, const CvmShape& shape) {
  if (!(tau_max > 0.0)) throw std::invalid_argument("cvm_efrs: tau_max must be positive");
  track.validate();
  const Vec2 v = cvm_velocity(track);
  const double speed = v.norm();
  const double travel = speed * tau_max;
  const double r0 = track.radius + shape.margin;
  constexpr double pi = std::numbers::pi;
  constexpr int kCapSegments = 24;

  Polyline local;
  local.closed = true;
  if (travel < 1e-9) {
    local = make_circle(Point2::Zero(), r0, 4 * kCapSegments);
  } else {
    // Local frame: x along the predicted motion. Counter-clockwise from the rear-right corner.
    const double wide = r0 + shape.spread * travel / 2.0;
    auto& pts = local.vertices;
    pts.emplace_back(0.0, -r0);
    pts.emplace_back(travel / 2.0, -wide);
    append_arc(pts, Point2(travel, 0.0), r0, -pi / 2.0, pi / 2.0, kCapSegments);
    pts.emplace_back(travel / 2.0, wide);
    append_arc(pts, Point2::Zero(), r0, pi / 2.0, 3.0 * pi / 2.0, kCapSegments);
    pts.pop_back();  // closes onto (0, -r0)
  }

  const double heading = travel < 1e-9 ? 0.0 : std::atan2(v.y(), v.x());
  Efrs out;
  out.obstacle_id = track.id;
  out.tau_max = tau_max;
  out.source = EfrsSource::Cvm;
  out.boundary = resample_closed(transform(local, heading, track.current()), shape.max_points, shape.spacing);
  return out;
}

Efrs cvm_efrs(const ObstacleTrack& track, double tau_max, double margin) {
  CvmShape shape;
  shape.margin = margin;
  return cvm_efrs(track, tau_max, shape);
}

ScalarGrid occupancy_sum(const ProbMapStack& stack) {
  stack.validate();
  ScalarGrid sum = stack.maps.front();
  std::fill(sum.values.begin(), sum.values.end(), 0.0);
  for (const auto& m : stack.maps)
    for (std::size_t i = 0; i < sum.values.size(); ++i) sum.values[i] += m.values[i];
  return sum;
}

double default_delta_kappa(const ProbMapStack& stack) {
  const ScalarGrid occ = occupancy_sum(stack);
  return 0.1 * *std::max_element(occ.values.begin(), occ.values.end());
}

std::vector<Efrs> probmap_efrs(const ProbMapStack& stack, double delta_kappa, std::size_t max_points) {
  ScalarGrid occ = occupancy_sum(stack);
  // Negate so occupied cells are "below" and their outer rings come out counter-clockwise.
  for (double& v : occ.values) v = -v;
  const auto contours = extract_level_contours(occ, -delta_kappa);

  std::vector<Efrs> out;
  for (const auto& c : contours) {
    if (signed_area(c) <= 0.0) continue;  // holes
    if (c.length() < 4.0 * occ.resolution) continue;
    Efrs e;
    e.obstacle_id = "probmap-" + std::to_string(out.size());
    e.boundary = resample_closed(c, max_points);
    e.tau_max = stack.step_duration * static_cast<double>(stack.maps.size());
    e.source = EfrsSource::ProbMap;
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// File format (see docs/probmap_format.md):
//
//   MMP-PROBMAP 1
//   steps <int>
//   width <int>
//   height <int>
//   resolution <float>
//   origin_x <float>
//   origin_y <float>
//   step_duration <float>
//   encoding ascii|binary
//   data
//   <steps * height * width values, step-major then row-major>

namespace {

constexpr const char* kMagic = "MMP-PROBMAP";

double decode_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
  return std::bit_cast<double>(bits);
}

void encode_le(double v, unsigned char* bytes) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<unsigned char>(bits & 0xffu);
    bits >>= 8;
  }
}

template <class T>
T header_number(const std::map<std::string, std::string>& header, const std::string& key) {
  auto it = header.find(key);
  if (it == header.end()) throw ParseError("malformed header: missing field '" + key + "'");
  std::istringstream ss(it->second);
  T v{};
  ss >> v;
  std::string rest;
  if (ss.fail() || (ss >> rest)) throw ParseError("malformed header: field '" + key + "' is not a number");
  return v;
}

}  // namespace

ProbMapStack read_probmap_stack(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("malformed header: empty file");
  {
    std::istringstream ss(line);
    std::string magic;
    int version = 0;
    ss >> magic >> version;
    if (magic != kMagic || version != 1) throw ParseError("malformed header: expected 'MMP-PROBMAP 1'");
  }

  std::map<std::string, std::string> header;
  bool saw_data = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line == "data") {
      saw_data = true;
      break;
    }
    std::istringstream ss(line);
    std::string key, value;
    ss >> key;
    std::getline(ss >> std::ws, value);
    if (value.empty()) throw ParseError("malformed header: field '" + key + "' has no value");
    header[key] = value;
  }
  if (!saw_data) throw ParseError("malformed header: missing 'data' line");

  const int steps = header_number<int>(header, "steps");
  const int width = header_number<int>(header, "width");
  const int height = header_number<int>(header, "height");
  const double resolution = header_number<double>(header, "resolution");
  const double ox = header_number<double>(header, "origin_x");
  const double oy = header_number<double>(header, "origin_y");
  const double step_duration = header_number<double>(header, "step_duration");
  const std::string encoding = header.count("encoding") ? header.at("encoding") : "ascii";
  if (steps <= 0) throw ParseError("malformed header: field 'steps' must be positive");
  if (width < 2) throw ParseError("malformed header: field 'width' must be at least 2");
  if (height < 2) throw ParseError("malformed header: field 'height' must be at least 2");
  if (!(resolution > 0.0)) throw ParseError("malformed header: field 'resolution' must be positive");
  if (!(step_duration > 0.0)) throw ParseError("malformed header: field 'step_duration' must be positive");
  if (encoding != "ascii" && encoding != "binary")
    throw ParseError("malformed header: field 'encoding' must be ascii or binary");

  const std::size_t per_map = static_cast<std::size_t>(width) * height;
  const std::size_t expected = per_map * steps;
  std::vector<double> data;
  data.reserve(expected);
  if (encoding == "ascii") {
    double v = 0.0;
    while (in >> v) data.push_back(v);
    if (!in.eof()) throw ParseError("data: non-numeric token after " + std::to_string(data.size()) + " values");
  } else {
    unsigned char buf[8];
    while (in.read(reinterpret_cast<char*>(buf), 8)) data.push_back(decode_le(buf));
    if (in.gcount() != 0) throw ParseError("data: trailing partial value in binary payload");
  }
  if (data.size() != expected)
    throw ParseError("shape mismatch: field 'steps' declares " + std::to_string(steps) + " maps of " +
                     std::to_string(width) + "x" + std::to_string(height) + " (" + std::to_string(expected) +
                     " values) but data holds " + std::to_string(data.size()) + " values");

  ProbMapStack stack;
  stack.step_duration = step_duration;
  for (int s = 0; s < steps; ++s) {
    ScalarGrid g(Point2(ox, oy), resolution, width, height);
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(s * per_map), per_map, g.values.begin());
    for (std::size_t i = 0; i < per_map; ++i)
      if (!(g.values[i] >= 0.0 && g.values[i] <= 1.0))
        throw ParseError("data: value " + std::to_string(g.values[i]) + " out of range [0, 1] at step " +
                         std::to_string(s) + ", cell (" + std::to_string(i % width) + ", " +
                         std::to_string(i / width) + ")");
    stack.maps.push_back(std::move(g));
  }
  return stack;
}

ProbMapStack load_probmap_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open probability map file " + path.string());
  return read_probmap_stack(in);
}

void save_probmap_stack(const ProbMapStack& stack, const std::filesystem::path& path, ProbMapEncoding encoding) {
  stack.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write probability map file " + path.string());
  const ScalarGrid& ref = stack.maps.front();
  out.precision(17);
  out << kMagic << " 1\n"
      << "steps " << stack.maps.size() << "\n"
      << "width " << ref.width << "\n"
      << "height " << ref.height << "\n"
      << "resolution " << ref.resolution << "\n"
      << "origin_x " << ref.origin.x() << "\n"
      << "origin_y " << ref.origin.y() << "\n"
      << "step_duration " << stack.step_duration << "\n"
      << "encoding " << (encoding == ProbMapEncoding::Ascii ? "ascii" : "binary") << "\n"
      << "data\n";
  for (const auto& g : stack.maps) {
    if (encoding == ProbMapEncoding::Ascii) {
      for (int iy = 0; iy < g.height; ++iy) {
        for (int ix = 0; ix < g.width; ++ix) out << (ix ? " " : "") << g.at(ix, iy);
        out << "\n";
      }
    } else {
      unsigned char buf[8];
      for (double v : g.values) {
        encode_le(v, buf);
        out.write(reinterpret_cast<const char*>(buf), 8);
      }
    }
  }
}

}  // namespace mmp
