#include "mmp/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace mmp;

namespace {

ScalarGrid sample(const std::function<double(const Point2&)>& f, double lo, double hi, double res) {
  const int n = static_cast<int>(std::lround((hi - lo) / res)) + 1;
  ScalarGrid g(Point2(lo, lo), res, n, n);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) g.at(ix, iy) = f(g.cell_center(ix, iy));
  return g;
}

Polyline square(double half) {
  return Polyline{{{-half, -half}, {half, -half}, {half, half}, {-half, half}}, true};
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("constant grid has no contours") {
  ScalarGrid g(Point2::Zero(), 0.1, 10, 10, 5.0);
  CHECK(extract_level_contours(g, 0.0).empty());
}

TEST_CASE("unit circle level set") {
  const double res = 0.05;
  const auto g = sample([](const Point2& p) { return p.norm() - 1.0; }, -2.0, 2.0, res);
  const auto cs = extract_level_contours(g, 0.0);
  REQUIRE(cs.size() == 1);
  for (const auto& v : cs[0].vertices) CHECK(std::abs(v.norm() - 1.0) <= res);
  CHECK(signed_area(cs[0]) > 0.0);
  CHECK(signed_area(cs[0]) == doctest::Approx(std::numbers::pi).epsilon(0.01));
}

TEST_CASE("two discs give two contours") {
  const Point2 c1(-1.5, 0.0), c2(1.5, 0.0);
  const auto g = sample([&](const Point2& p) { return std::min((p - c1).norm(), (p - c2).norm()) - 0.5; }, -3.0,
                        3.0, 0.05);
  const auto cs = extract_level_contours(g, 0.0);
  REQUIRE(cs.size() == 2);
  for (const auto& c : cs) CHECK(signed_area(c) > 0.0);
}

TEST_CASE("contours classify cell centres away from the boundary") {
  const double res = 0.1;
  auto f = [](const Point2& p) { return std::hypot(p.x() / 1.5, p.y()) - 1.0; };
  const auto g = sample(f, -2.5, 2.5, res);
  const auto cs = extract_level_contours(g, 0.0);
  REQUIRE(cs.size() == 1);
  int checked = 0;
  for (int iy = 0; iy < g.height; ++iy)
    for (int ix = 0; ix < g.width; ++ix) {
      const Point2 c = g.cell_center(ix, iy);
      if (std::abs(signed_distance(cs[0], c)) < 2 * res) continue;
      CHECK(point_in_polygon(cs[0], c) == (g.at(ix, iy) < 0.0));
      ++checked;
    }
  CHECK(checked > 1000);
}

TEST_CASE("contour cut by the map edge still closes") {
  const auto g = sample([](const Point2& p) { return p.x(); }, -1.0, 1.0, 0.1);
  const auto cs = extract_level_contours(g, 0.0);
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].closed);
}

TEST_CASE("projection onto a square") {
  const Polyline sq = square(1.0);
  auto pr = project_onto(sq, Point2(5.0, 0.0));
  CHECK(pr.point.x() == doctest::Approx(1.0));
  CHECK(pr.point.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pr.arc == doctest::Approx(3.0));
  CHECK(pr.distance == doctest::Approx(4.0));

  pr = project_onto(sq, sq.vertices[2]);
  CHECK((pr.point - sq.vertices[2]).norm() < 1e-12);
  CHECK(pr.arc == doctest::Approx(4.0));
}

TEST_CASE("projection tie-break picks the smallest arc") {
  const Polyline sq = square(1.0);
  const auto pr = project_onto(sq, Point2::Zero());
  // All four edges are at distance 1; the first edge wins.
  CHECK(pr.arc == doctest::Approx(1.0));
  CHECK(pr.point.y() == doctest::Approx(-1.0));
}

TEST_CASE("geodesic along a discretized circle") {
  const double r = 1.3;
  const Polyline c = make_circle(Point2::Zero(), r, 128);
  const Point2 a = c.vertices[0], b = c.vertices[64], q = c.vertices[32];
  CHECK(geodesic_along(c, a, a) == doctest::Approx(0.0));
  CHECK(geodesic_along(c, a, b) == doctest::Approx(std::numbers::pi * r).epsilon(0.01));
  CHECK(geodesic_along(c, a, q) == doctest::Approx(0.5 * std::numbers::pi * r).epsilon(0.01));
  CHECK(geodesic_along(c, a, q) == geodesic_along(c, q, a));
  CHECK(geodesic_along(c, a, b) <= c.length() / 2 + 1e-12);
}

TEST_CASE("geodesic is symmetric and obeys the triangle inequality") {
  const Polyline c = transform(make_circle(Point2::Zero(), 0.8, 90), 0.3, Vec2(1.0, -2.0));
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> idx(0, c.size() - 1);
  std::uniform_real_distribution<double> t(0.0, 1.0);
  auto on = [&] {
    const auto [p, q] = c.edge(idx(rng));
    return Point2(p + t(rng) * (q - p));
  };
  for (int k = 0; k < 200; ++k) {
    const Point2 a = on(), b = on(), m = on();
    CHECK(geodesic_along(c, a, b) == geodesic_along(c, b, a));
    CHECK(geodesic_along(c, a, b) <= geodesic_along(c, a, m) + geodesic_along(c, m, b) + 1e-9);
  }
}

TEST_CASE("geodesic rejects off-contour points") {
  const Polyline c = make_circle(Point2::Zero(), 1.0, 64);
  CHECK_THROWS_AS(geodesic_along(c, c.vertices[0], Point2(0.0, 0.0)), GeometryError);
}

TEST_CASE("resample square into four") {
  const Polyline sq = square(1.0);
  const Polyline r = resample_closed(sq, 4);
  REQUIRE(r.size() == 4);
  for (std::size_t i = 0; i < r.edge_count(); ++i) {
    const auto [p, q] = r.edge(i);
    CHECK((q - p).norm() == doctest::Approx(2.0));
  }
}

TEST_CASE("resample caps vertex count at 200") {
  const Polyline c = make_circle(Point2::Zero(), 1.0, 1000);
  const Polyline r = resample_closed(c, 200);
  CHECK(r.size() == 200);
  CHECK(std::abs(r.length() - c.length()) <= c.length() / 200);
}

TEST_CASE("resample triangle keeps the perimeter") {
  const Polyline tri{{{0.0, 0.0}, {3.0, 0.0}, {0.0, 4.0}}, true};
  const Polyline r = resample_closed(tri, 300);
  CHECK(r.size() <= 300);
  CHECK(std::abs(r.length() - 12.0) <= 12.0 / static_cast<double>(r.size()));
}

TEST_CASE("resample with minimum spacing uses fewer points") {
  const Polyline c = make_circle(Point2::Zero(), 0.3, 400);
  const Polyline r = resample_closed(c, 200, 0.05);
  CHECK(r.size() == static_cast<std::size_t>(std::ceil(c.length() / 0.05)));
}

TEST_CASE("resample rejects degenerate polygons") {
  const Polyline deg{{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}}, true};
  CHECK_THROWS_AS(resample_closed(deg, 10), GeometryError);
}

TEST_CASE("signed distance and point in polygon") {
  const Polyline sq = square(1.0);
  CHECK(signed_distance(sq, Point2::Zero()) == doctest::Approx(-1.0));
  CHECK(signed_distance(sq, Point2(3.0, 0.0)) == doctest::Approx(2.0));
  CHECK(point_in_polygon(sq, Point2(0.5, 0.5)));
  CHECK_FALSE(point_in_polygon(sq, Point2(1.5, 0.5)));
}

TEST_CASE("wrap angle") {
  CHECK(wrap_angle(3 * std::numbers::pi / 2) == doctest::Approx(-std::numbers::pi / 2));
  CHECK(wrap_angle(-0.25) == doctest::Approx(-0.25));
}

}
