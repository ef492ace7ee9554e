#include "mmp/planner.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mmp {

namespace {

constexpr double kGradEps = 1e-8;
constexpr double kProjectionEps = 1e-6;

std::vector<Eigen::VectorXd> sphere_directions(int dim, int m) {
  std::vector<Eigen::VectorXd> out;
  constexpr double pi = std::numbers::pi;
  if (dim == 2) {
    for (int k = 0; k < m; ++k) {
      const double a = (k + 0.5) * 2.0 * pi / m;
      out.push_back(Eigen::Vector2d(std::cos(a), std::sin(a)));
    }
    return out;
  }
  if (dim == 3 && m == 2) {
    out.push_back(Eigen::Vector3d(1, 0, 0));
    out.push_back(Eigen::Vector3d(-1, 0, 0));
    return out;
  }
  if (dim == 3 && m == 4) {
    const double s = 1.0 / std::sqrt(3.0);
    for (const Eigen::Vector3d& v : {Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(1, -1, -1),
                                     Eigen::Vector3d(-1, 1, -1), Eigen::Vector3d(-1, -1, 1)})
      out.push_back(s * v);
    return out;
  }
  // Fibonacci lattice on S^2 (and its first three coordinates embedded in higher dims).
  const double golden = pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < m; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / m;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    v(0) = r * std::cos(golden * k);
    v(1) = r * std::sin(golden * k);
    v(2) = z;
    out.push_back(v);
  }
  return out;
}

Eigen::VectorXd rotated(const Eigen::VectorXd& v, int step, int m) {
  const double angle = step * std::numbers::pi / (4.0 * m);
  if (v.size() == 2) return Eigen::Rotation2Dd(angle) * Eigen::Vector2d(v);
  Eigen::VectorXd out = v;
  const Eigen::Vector3d axis = Eigen::Vector3d(1.0, 2.0, 3.0).normalized();
  out.head<3>() = Eigen::AngleAxisd(angle, axis) * Eigen::Vector3d(v.head<3>());
  return out;
}

}  // namespace

void ModulationConfig::validate() const {
  if (m < 2) throw PlannerError("modulation: m must be at least 2");
  if (N < 1) throw PlannerError("modulation: N must be at least 1");
  if (!(beta > 0.0)) throw PlannerError("modulation: beta must be positive");
  if (!(gamma > 0.0)) throw PlannerError("modulation: gamma must be positive");
}

Eigen::MatrixXd tangent_hyperplane(const Eigen::VectorXd& grad) {
  const double norm = grad.norm();
  if (!(norm > kGradEps)) throw PlannerError("tangent_hyperplane: vanishing gradient");
  const Eigen::VectorXd n = grad / norm;
  const Eigen::Index d = grad.size();
  if (d == 2) return Eigen::Vector2d(-n(1), n(0));

  Eigen::MatrixXd basis(d, d - 1);
  Eigen::Index cols = 0;
  for (Eigen::Index i = 0; i < d && cols < d - 1; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(d, i);
    v -= v.dot(n) * n;
    for (Eigen::Index j = 0; j < cols; ++j) v -= v.dot(basis.col(j)) * basis.col(j);
    const double vn = v.norm();
    if (vn < 1e-6) continue;
    basis.col(cols++) = v / vn;
  }
  return basis;
}

std::vector<Eigen::VectorXd> sample_candidates(const Eigen::VectorXd& grad, int m) {
  if (m < 2) throw PlannerError("sample_candidates: m must be at least 2");
  const int dim = static_cast<int>(grad.size());
  const Eigen::MatrixXd H = tangent_hyperplane(grad);
  const Eigen::MatrixXd P = H * H.transpose();

  std::vector<Eigen::VectorXd> out;
  for (const Eigen::VectorXd& base : sphere_directions(dim, m)) {
    constexpr int kMaxTries = 16;
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
      const Eigen::VectorXd raw = attempt == 0 ? base : rotated(base, attempt, m);
      Eigen::VectorXd e = raw;
      for (int i = 0; i < dim; ++i)
        if (std::abs(grad(i)) < kGradEps) e(i) = 0.0;
      // Zeroing can leave nothing tangential (axis-aligned gradient in 2D); keep the raw sample then.
      if (e.norm() < 1e-9 || (P * e.normalized()).norm() <= kProjectionEps) e = raw;
      const double en = e.norm();
      if (en < 1e-9) continue;
      e /= en;
      if ((P * e).norm() > kProjectionEps) {
        out.push_back(e);
        break;
      }
    }
  }
  if (out.empty()) throw PlannerError("sample_candidates: all candidate directions are degenerate");
  return out;
}

GeodesicWalk geodesic_walk(const FieldFn& field, const Eigen::VectorXd& x0, const Eigen::VectorXd& e0,
                           double beta, int N, const RewardFn& reward) {
  GeodesicWalk walk;
  walk.path.reserve(static_cast<std::size_t>(N) + 1);
  walk.path.push_back(x0);
  walk.initial_direction = e0;

  FieldSample s = field(x0);
  if (!(s.gradient.norm() > kGradEps)) throw PlannerError("geodesic_walk: vanishing gradient at start");
  if (N <= 0) return walk;

  Eigen::VectorXd x = x0;
  Eigen::VectorXd e = e0;
  double last_reward = reward(x0, s.value);
  for (int i = 0; i < N; ++i) {
    if (!(s.gradient.norm() > kGradEps)) {
      walk.terminated_early = true;
      walk.potential += beta * last_reward * (N - i);
      break;
    }
    const Eigen::MatrixXd H = tangent_hyperplane(s.gradient);
    const Eigen::VectorXd t = H * (H.transpose() * e);
    const double tn = t.norm();
    if (tn < 1e-12) {
      walk.terminated_early = true;
      walk.potential += beta * last_reward * (N - i);
      break;
    }
    x += beta * t;
    e = t / tn;
    walk.path.push_back(x);
    s = field(x);
    last_reward = reward(x, s.value);
    walk.potential += beta * last_reward;
  }
  return walk;
}

RewardFn goal_reward(const Point2& target, double w_goal, double w_barrier) {
  return [target, w_goal, w_barrier](const Eigen::VectorXd& x, double hbar) {
    return w_goal * (x.head<2>() - target).norm() + w_barrier * hbar;
  };
}

PhiSelection select_phi(const FieldFn& field, const Eigen::VectorXd& x, const ModulationConfig& config,
                        const Point2& target, const std::optional<Eigen::VectorXd>& incumbent) {
  config.validate();
  const FieldSample s0 = field(x);
  const Eigen::MatrixXd H = tangent_hyperplane(s0.gradient);
  const Eigen::MatrixXd P = H * H.transpose();
  const RewardFn reward = goal_reward(target, config.w_goal, config.w_barrier);

  PhiSelection sel;
  for (const Eigen::VectorXd& e : sample_candidates(s0.gradient, config.m)) {
    GeodesicWalk walk = geodesic_walk(field, x, e, config.beta, config.N, reward);
    const Eigen::VectorXd t = P * e;
    sel.potentials.push_back(walk.potential);
    sel.tangents.push_back(t / t.norm());
    sel.walks.push_back(std::move(walk));
  }

  int winner = 0;
  for (int k = 1; k < static_cast<int>(sel.potentials.size()); ++k)
    if (sel.potentials[k] < sel.potentials[winner]) winner = k;
  sel.winner = winner;
  sel.chosen = winner;

  if (incumbent && incumbent->size() == x.size()) {
    const Eigen::VectorXd t_inc = P * *incumbent;
    if (t_inc.norm() > 1e-9) {
      int inc = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < static_cast<int>(sel.tangents.size()); ++k) {
        const double c = sel.tangents[k].dot(t_inc);
        if (c > best) {
          best = c;
          inc = k;
        }
      }
      const double p_inc = sel.potentials[inc];
      if (inc != winner && !(sel.potentials[winner] < p_inc - config.hysteresis * std::abs(p_inc))) {
        sel.chosen = inc;
        sel.kept_incumbent = true;
      }
    }
  }
  sel.phi = sel.tangents[sel.chosen];
  return sel;
}

ScalarGrid rasterize(const std::function<double(const Point2&)>& field, const Eigen::AlignedBox2d& box,
                     double resolution) {
  if (!(resolution > 0.0)) throw PlannerError("rasterize: resolution must be positive");
  const Eigen::Vector2d size = box.sizes();
  const int w = std::max(2, static_cast<int>(std::ceil(size.x() / resolution)) + 1);
  const int h = std::max(2, static_cast<int>(std::ceil(size.y() / resolution)) + 1);
  ScalarGrid grid(box.min(), resolution, w, h);
  for (int iy = 0; iy < h; ++iy)
    for (int ix = 0; ix < w; ++ix) grid.at(ix, iy) = field(grid.cell_center(ix, iy));
  return grid;
}

BetaSelection auto_param_select(const std::function<double(const Point2&)>& sbar, int N, const Point2& xi_rob,
                                const Point2& xi_tar, const MapSpec& spec) {
  if (N < 1) throw PlannerError("auto_param_select: N must be at least 1");
  BetaSelection out;
  out.beta = spec.beta_fallback;
  out.fallback = true;

  const double level = sbar(xi_rob);
  if (!(level > 0.0) || !std::isfinite(level)) return out;

  Eigen::AlignedBox2d box = spec.cover;
  box.extend(xi_rob);
  box.extend(xi_tar);
  box.min().array() -= spec.margin;
  box.max().array() += spec.margin;
  const ScalarGrid grid = rasterize(sbar, box, spec.resolution);
  const auto contours = extract_level_contours(grid, level);
  out.contour_count = static_cast<int>(contours.size());
  if (contours.empty()) return out;

  double d_min = std::numeric_limits<double>::infinity();
  for (const auto& c : contours) {
    const Projection pr = project_onto(c, xi_rob);
    if (pr.distance < d_min) {
      d_min = pr.distance;
      const Projection pt = project_onto(c, xi_tar);
      const double direct = std::abs(pr.arc - pt.arc);
      out.d_geo = std::min(direct, c.length() - direct);
      out.contour = c;
    }
  }
  out.beta = std::clamp(out.d_geo / N, spec.beta_min, spec.beta_max);
  out.fallback = false;
  return out;
}

}  // namespace mmp
