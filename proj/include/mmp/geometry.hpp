#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmp {

using Point2 = Eigen::Vector2d;
using Vec2 = Eigen::Vector2d;

class GeometryError : public std::runtime_error {
public:
  explicit GeometryError(const std::string& what) : std::runtime_error(what) {}
};

/// Ordered vertex list. A closed polyline has an implicit last->first edge.
struct Polyline {
  std::vector<Point2> vertices;
  bool closed = true;

  std::size_t size() const { return vertices.size(); }
  std::size_t edge_count() const;
  /// Start vertex of edge i and its end vertex (wraps for closed rings).
  std::pair<Point2, Point2> edge(std::size_t i) const;
  double length() const;
};

/// Row-major scalar raster. Cell (ix, iy) is sampled at origin + resolution * (ix, iy).
struct ScalarGrid {
  Point2 origin = Point2::Zero();
  double resolution = 1.0;
  int width = 0;
  int height = 0;
  std::vector<double> values;

  ScalarGrid() = default;
  ScalarGrid(Point2 origin, double resolution, int width, int height, double fill = 0.0);

  double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * width + ix]; }
  double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * width + ix]; }
  Point2 cell_center(int ix, int iy) const {
    return origin + resolution * Point2(static_cast<double>(ix), static_cast<double>(iy));
  }
  void validate() const;
};

/// Closest point on a polyline together with its arc-length parameter from vertex 0.
struct Projection {
  Point2 point;
  double arc = 0.0;
  double distance = 0.0;
};

/// Marching-squares level contours. Each ring is oriented counter-clockwise around
/// the region where grid < level; cells outside the grid count as above the level,
/// so every returned contour is closed.
std::vector<Polyline> extract_level_contours(const ScalarGrid& grid, double level);

Projection project_onto(const Polyline& contour, const Point2& p);

/// Shorter of the two arc lengths between a and b along a closed contour.
/// Throws GeometryError if either point is off the contour.
double geodesic_along(const Polyline& contour, const Point2& a, const Point2& b);

/// Uniform arc-length resampling of a closed polygon, starting at vertex 0.
/// The vertex count is max_points, or fewer when min_spacing > 0 allows it.
Polyline resample_closed(const Polyline& polygon, std::size_t max_points, double min_spacing = 0.0);

double signed_area(const Polyline& polygon);
bool point_in_polygon(const Polyline& polygon, const Point2& p);
/// Euclidean distance to the polygon boundary, negative inside.
double signed_distance(const Polyline& polygon, const Point2& p);

Polyline make_circle(const Point2& center, double radius, std::size_t n);
/// Rotate by angle about the origin, then translate.
Polyline transform(const Polyline& poly, double angle, const Vec2& offset);

double wrap_angle(double angle);

}  // namespace mmp
