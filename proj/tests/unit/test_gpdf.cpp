#include "mmp/geometry.hpp"
#include "mmp/gpdf.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace mmp;

namespace {

std::vector<Point2> circle_points(double r, int n) {
  std::vector<Point2> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * M_PI * i / n;
    pts.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  return pts;
}

// Brute-force distance to the training set.
double nearest(const std::vector<Point2>& pts, const Point2& p) {
  double d = INFINITY;
  for (const auto& q : pts) d = std::min(d, (p - q).norm());
  return d;
}

}  // namespace

TEST_SUITE("gpdf") {

TEST_CASE("single point fit") {
  const std::vector<Point2> pts{Point2::Zero()};
  const auto m = GpdfModel::fit(pts, {});
  REQUIRE(m.size() == 1);
  CHECK(m.alpha()(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.distance(Point2(0.3, 0.4)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m.distance(Point2::Zero()) <= 1e-9);
  const Vec2 g = m.gradient(Point2(2.0, 0.0));
  CHECK(g.x() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(g.y()) <= 1e-6);
}

TEST_CASE("duplicate points need jitter") {
  const std::vector<Point2> pts{Point2(1.0, 1.0), Point2(1.0, 1.0)};
  CHECK_THROWS_AS(GpdfModel::fit(pts, {}), FitError);
  const auto m = GpdfModel::fit_with_jitter(pts, {});
  CHECK(m.kernel().noise == doctest::Approx(1e-6));
}

TEST_CASE("solve residual on a circle") {
  const auto pts = circle_points(1.0, 8);
  CHECK(GpdfModel::fit(pts, {}).residual() <= 1e-8);
  const auto dense = circle_points(1.0, 200);
  CHECK(GpdfModel::fit(dense, {}).residual() <= 1e-8);
}

TEST_CASE("zero distance at training points") {
  const auto pts = circle_points(1.0, 50);
  const auto m = GpdfModel::fit(pts, {});
  for (const auto& p : pts) CHECK(m.distance(p) <= 1e-6);
}

TEST_CASE("symmetric pair has no gradient along its axis on the bisector") {
  const std::vector<Point2> pts{Point2(-1.0, 0.0), Point2(1.0, 0.0)};
  const auto m = GpdfModel::fit(pts, {});
  const Vec2 g = m.gradient(Point2(0.0, 0.7));
  CHECK(std::abs(g.x()) <= 1e-12);
  CHECK(g.y() > 0.0);
}

TEST_CASE("gradient matches central differences") {
  const auto pts = circle_points(1.0, 200);
  const auto m = GpdfModel::fit(pts, {});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  const double h = 1e-5;
  int probes = 0;
  while (probes < 1000) {
    const Point2 p(u(rng), u(rng));
    const auto s = m.evaluate(p);
    if (s.saturated || nearest(pts, p) < 1e-3) continue;
    const Vec2 fd((m.distance(p + Vec2(h, 0)) - m.distance(p - Vec2(h, 0))) / (2 * h),
                  (m.distance(p + Vec2(0, h)) - m.distance(p - Vec2(0, h))) / (2 * h));
    CHECK((fd - s.gradient).cwiseAbs().maxCoeff() <= 1e-4);
    ++probes;
  }
}

TEST_CASE("distance is Lipschitz at small scale") {
  const auto pts = circle_points(1.0, 200);
  const auto m = GpdfModel::fit(pts, {});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> ang(0.0, 2 * M_PI);
  for (int k = 0; k < 500; ++k) {
    const Point2 p(u(rng), u(rng));
    const double a = ang(rng);
    const Vec2 d = 1e-4 * Vec2(std::cos(a), std::sin(a));
    const double bound = 1.1 * std::max(m.gradient(p).norm(), m.gradient(p + d).norm()) * 1e-4 + 1e-12;
    CHECK(std::abs(m.distance(p + d) - m.distance(p)) <= bound);
  }
}

TEST_CASE("distance grows along rays from a single point") {
  const std::vector<Point2> pts{Point2(0.2, -0.1)};
  const auto m = GpdfModel::fit(pts, {});
  double prev = -1.0;
  for (int i = 0; i <= 400; ++i) {
    const double d = m.distance(pts[0] + Vec2(0.6, 0.8) * (0.02 * i));
    CHECK(d >= prev);
    prev = d;
  }
}

TEST_CASE("unit circle model underestimates and is monotone outward") {
  // The latent mean sums many boundary kernels, so the inverse reads short.
  const auto pts = circle_points(1.0, 200);
  const auto m = GpdfModel::fit(pts, {});
  for (int k = 0; k < 16; ++k) {
    const double a = 2 * M_PI * (k + 0.37) / 16;
    const Vec2 dir(std::cos(a), std::sin(a));
    double prev = -1.0;
    for (double r = 1.05; r <= 2.5; r += 0.05) {
      const Point2 p = r * dir;
      const double d = m.distance(p);
      CHECK(d <= nearest(pts, p) + 1e-9);
      CHECK(d > prev);
      prev = d;
    }
  }
  const double centre = m.distance(Point2::Zero());
  CHECK(centre < 1.0);
  CHECK(centre > 0.0);
}

TEST_CASE("far field saturates with a zero gradient") {
  const std::vector<Point2> pts{Point2::Zero()};
  const auto m = GpdfModel::fit(pts, {});
  const auto s = m.evaluate(Point2(50.0, 0.0));
  CHECK(s.saturated);
  CHECK(s.gradient.norm() == 0.0);
  CHECK(s.distance == doctest::Approx(-0.2 * std::log(GpdfModel::kLatentFloor)));
}

TEST_CASE("kernel parameter validation") {
  const std::vector<Point2> pts{Point2::Zero()};
  CHECK_THROWS(GpdfModel::fit(pts, KernelParams{1.0, -0.2, 0.0}));
  CHECK_THROWS(GpdfModel::fit(pts, KernelParams{0.0, 0.2, 0.0}));
  CHECK_THROWS(GpdfModel::fit(std::vector<Point2>{}, KernelParams{}));
}

}
