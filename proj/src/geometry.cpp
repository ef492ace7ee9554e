#include "mmp/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace mmp {

std::size_t Polyline::edge_count() const {
  if (vertices.size() < 2) return 0;
  return closed ? vertices.size() : vertices.size() - 1;
}

std::pair<Point2, Point2> Polyline::edge(std::size_t i) const {
  return {vertices[i], vertices[(i + 1) % vertices.size()]};
}

double Polyline::length() const {
  double total = 0.0;
  for (std::size_t i = 0; i < edge_count(); ++i) {
    auto [a, b] = edge(i);
    total += (b - a).norm();
  }
  return total;
}

ScalarGrid::ScalarGrid(Point2 origin_, double resolution_, int width_, int height_, double fill)
    : origin(std::move(origin_)),
      resolution(resolution_),
      width(width_),
      height(height_),
      values(static_cast<std::size_t>(std::max(width_, 0)) * std::max(height_, 0), fill) {}

void ScalarGrid::validate() const {
  if (!(resolution > 0.0)) throw GeometryError("grid resolution must be positive");
  if (width < 0 || height < 0) throw GeometryError("grid shape must be non-negative");
  if (values.size() != static_cast<std::size_t>(width) * height)
    throw GeometryError("grid value count does not match width*height");
}

namespace {

// Marching squares over a grid padded by one ring of above-level cells.
class ContourTracer {
public:
  ContourTracer(const ScalarGrid& grid, double level) : grid_(grid), level_(level) {}

  std::vector<Polyline> run() {
    for (int iy = -1; iy < grid_.height; ++iy)
      for (int ix = -1; ix < grid_.width; ++ix) emit_cell(ix, iy);
    return link();
  }

private:
  bool inside(int ix, int iy) const {
    return ix >= 0 && iy >= 0 && ix < grid_.width && iy < grid_.height;
  }
  bool below(int ix, int iy) const { return inside(ix, iy) && grid_.at(ix, iy) < level_; }

  std::int64_t key(int ix, int iy, int dir) const {
    const std::int64_t stride = grid_.width + 2;
    return ((static_cast<std::int64_t>(iy) + 1) * stride + (ix + 1)) * 2 + dir;
  }

  // dir 0: node (ix,iy) -> (ix+1,iy); dir 1: node (ix,iy) -> (ix,iy+1).
  Point2 crossing(int ix, int iy, int dir) const {
    const int jx = ix + (dir == 0 ? 1 : 0);
    const int jy = iy + (dir == 1 ? 1 : 0);
    double t = 0.5;
    if (inside(ix, iy) && inside(jx, jy)) {
      const double v0 = grid_.at(ix, iy);
      const double v1 = grid_.at(jx, jy);
      if (v1 != v0) t = std::clamp((level_ - v0) / (v1 - v0), 0.0, 1.0);
    }
    const Point2 p0 = grid_.cell_center(ix, iy);
    const Point2 p1 = grid_.cell_center(jx, jy);
    return p0 + t * (p1 - p0);
  }

  void emit_cell(int ix, int iy) {
    const std::array<std::array<int, 2>, 4> corner{{{ix, iy}, {ix + 1, iy}, {ix + 1, iy + 1}, {ix, iy + 1}}};
    // Edge k joins corner k and corner k+1.
    const std::array<std::array<int, 3>, 4> edge{{{ix, iy, 0}, {ix + 1, iy, 1}, {ix, iy + 1, 0}, {ix, iy, 1}}};
    std::array<bool, 4> b{};
    for (int k = 0; k < 4; ++k) b[k] = below(corner[k][0], corner[k][1]);

    std::array<int, 4> crossing_edges{};
    int n = 0;
    for (int k = 0; k < 4; ++k)
      if (b[k] != b[(k + 1) % 4]) crossing_edges[n++] = k;
    if (n == 0) return;

    if (n == 2) {
      add_segment(edge, b, crossing_edges[0], crossing_edges[1]);
      return;
    }
    // Saddle: decide connectivity from the cell-center value.
    double center = 0.0;
    for (int k = 0; k < 4; ++k) center += grid_.at(corner[k][0], corner[k][1]);
    const bool center_below = center / 4.0 < level_;
    for (int c = 0; c < 4; ++c) {
      if (b[c] == center_below) continue;
      add_segment(edge, b, (c + 3) % 4, c);
    }
  }

  void add_segment(const std::array<std::array<int, 3>, 4>& edge, const std::array<bool, 4>& b, int ea, int eb) {
    // Corners run counter-clockwise, so leaving through the edge whose first corner is
    // below the level keeps the below region on the left. Purely topological: crossings
    // that coincide on a grid node cannot flip it.
    if (!(b[ea] && !b[(ea + 1) % 4])) std::swap(ea, eb);
    const auto& A = edge[ea];
    const auto& B = edge[eb];
    const std::int64_t ka = key(A[0], A[1], A[2]);
    const std::int64_t kb = key(B[0], B[1], B[2]);
    point_for(ka, A);
    point_for(kb, B);
    next_[ka] = kb;
    starts_.push_back(ka);
  }

  void point_for(std::int64_t k, const std::array<int, 3>& e) {
    if (!points_.count(k)) points_.emplace(k, crossing(e[0], e[1], e[2]));
  }

  std::vector<Polyline> link() {
    std::vector<Polyline> out;
    std::unordered_map<std::int64_t, bool> used;
    for (std::int64_t start : starts_) {
      if (used[start]) continue;
      Polyline ring;
      ring.closed = true;
      std::int64_t k = start;
      while (!used[k]) {
        used[k] = true;
        const Point2& p = points_.at(k);
        if (ring.vertices.empty() || (ring.vertices.back() - p).norm() > 1e-12) ring.vertices.push_back(p);
        auto it = next_.find(k);
        if (it == next_.end()) break;
        k = it->second;
      }
      while (ring.vertices.size() > 1 && (ring.vertices.back() - ring.vertices.front()).norm() <= 1e-12)
        ring.vertices.pop_back();
      if (ring.vertices.size() >= 3) out.push_back(std::move(ring));
    }
    return out;
  }

  const ScalarGrid& grid_;
  double level_;
  std::unordered_map<std::int64_t, std::int64_t> next_;
  std::unordered_map<std::int64_t, Point2> points_;
  std::vector<std::int64_t> starts_;
};

}  // namespace

std::vector<Polyline> extract_level_contours(const ScalarGrid& grid, double level) {
  grid.validate();
  if (grid.width < 2 || grid.height < 2) throw GeometryError("contour extraction needs at least 2x2 cells");
  if (!std::isfinite(level)) throw GeometryError("contour level must be finite");
  return ContourTracer(grid, level).run();
}

Projection project_onto(const Polyline& contour, const Point2& p) {
  if (contour.size() == 1) return {contour.vertices[0], 0.0, (p - contour.vertices[0]).norm()};
  Projection best{contour.vertices.at(0), 0.0, std::numeric_limits<double>::infinity()};
  double arc = 0.0;
  for (std::size_t i = 0; i < contour.edge_count(); ++i) {
    auto [a, b] = contour.edge(i);
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double len = std::sqrt(len2);
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const Point2 q = a + t * ab;
    const double dist = (p - q).norm();
    // Strict improvement keeps the smallest arc parameter on ties.
    if (dist < best.distance - 1e-12) best = {q, arc + t * len, dist};
    arc += len;
  }
  return best;
}

double geodesic_along(const Polyline& contour, const Point2& a, const Point2& b) {
  const double perimeter = contour.length();
  const double tol = 1e-6 * std::max(perimeter, 1e-12);
  const Projection pa = project_onto(contour, a);
  const Projection pb = project_onto(contour, b);
  if (pa.distance > tol || pb.distance > tol) throw GeometryError("geodesic_along: point is not on the contour");
  const double direct = std::abs(pa.arc - pb.arc);
  if (!contour.closed) return direct;
  return std::min(direct, perimeter - direct);
}

Polyline resample_closed(const Polyline& polygon, std::size_t max_points, double min_spacing) {
  if (max_points < 3) throw GeometryError("resample_closed: max_points must be at least 3");
  if (polygon.size() < 2) throw GeometryError("resample_closed: polygon needs at least 2 vertices");
  Polyline ring = polygon;
  ring.closed = true;
  const double perimeter = ring.length();
  if (!(perimeter > 1e-12)) throw GeometryError("resample_closed: degenerate zero-perimeter polygon");

  std::size_t n = max_points;
  if (min_spacing > 0.0) {
    const auto wanted = static_cast<std::size_t>(std::ceil(perimeter / min_spacing));
    n = std::clamp<std::size_t>(wanted, 3, max_points);
  }
  const double spacing = perimeter / static_cast<double>(n);

  Polyline out;
  out.closed = true;
  out.vertices.reserve(n);
  std::size_t edge = 0;
  double edge_start = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double s = spacing * static_cast<double>(k);
    auto [a, b] = ring.edge(edge);
    double len = (b - a).norm();
    while (edge_start + len < s && edge + 1 < ring.edge_count()) {
      edge_start += len;
      ++edge;
      std::tie(a, b) = ring.edge(edge);
      len = (b - a).norm();
    }
    const double t = len > 0.0 ? std::clamp((s - edge_start) / len, 0.0, 1.0) : 0.0;
    out.vertices.push_back(a + t * (b - a));
  }
  return out;
}

double signed_area(const Polyline& polygon) {
  double area = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = polygon.vertices[i];
    const Point2& b = polygon.vertices[(i + 1) % n];
    area += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * area;
}

bool point_in_polygon(const Polyline& polygon, const Point2& p) {
  bool in = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = polygon.vertices[i];
    const Point2& b = polygon.vertices[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) in = !in;
    }
  }
  return in;
}

double signed_distance(const Polyline& polygon, const Point2& p) {
  Polyline ring = polygon;
  ring.closed = true;
  const double d = project_onto(ring, p).distance;
  return point_in_polygon(ring, p) ? -d : d;
}

Polyline make_circle(const Point2& center, double radius, std::size_t n) {
  Polyline c;
  c.closed = true;
  c.vertices.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    c.vertices.emplace_back(center.x() + radius * std::cos(t), center.y() + radius * std::sin(t));
  }
  return c;
}

Polyline transform(const Polyline& poly, double angle, const Vec2& offset) {
  const Eigen::Rotation2Dd rot(angle);
  Polyline out = poly;
  for (auto& v : out.vertices) v = rot * v + offset;
  return out;
}

double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

}  // namespace mmp
