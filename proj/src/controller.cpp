#include "mmp/controller.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mmp {

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::CBF: return "CBF";
    case Mode::MCBF: return "MCBF";
    case Mode::MMP_CBF: return "MMP_CBF";
    case Mode::MMP_MCBF: return "MMP_MCBF";
  }
  return "?";
}

Mode mode_from_string(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return c == '-' ? '_' : std::toupper(c); });
  if (s == "CBF") return Mode::CBF;
  if (s == "MCBF") return Mode::MCBF;
  if (s == "MMP_CBF") return Mode::MMP_CBF;
  if (s == "MMP_MCBF") return Mode::MMP_MCBF;
  throw std::invalid_argument("unknown controller mode '" + std::string(name) + "'");
}

bool uses_prediction(Mode mode) { return mode == Mode::MMP_CBF || mode == Mode::MMP_MCBF; }
bool uses_modulation(Mode mode) { return mode == Mode::MCBF || mode == Mode::MMP_MCBF; }

void ControllerConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("controller config: ") + what);
  };
  require(model != RobotModel::Shifted || a > 0.0, "a must be positive for the shifted model");
  require(alpha_gain > 0.0, "alpha_gain must be positive");
  require(gamma > 0.0, "gamma must be positive");
  require(rho > 0.0, "rho must be positive");
  require(b_range > 0.0, "b_range must be positive");
  require(w > 0.0, "w must be positive");
  require(N >= 1, "N must be at least 1");
  require(m >= 2, "m must be at least 2");
  require(v_min <= 0.0 && v_max > 0.0, "box limits need v_min <= 0 < v_max");
  require(omega_max > 0.0, "omega_max must be positive");
  require(dt > 0.0, "dt must be positive");
  require(rho_rob >= 0.0, "rho_rob must be non-negative");
  require(beta_min > 0.0 && beta_min <= beta_max, "beta clamps must satisfy 0 < beta_min <= beta_max");
  require(beta > 0.0 && beta_fallback > 0.0, "beta must be positive");
  require(map_resolution > 0.0, "map_resolution must be positive");
  require(tau_max > 0.0, "tau_max must be positive");
  require(refresh_divider >= 1, "refresh_divider must be at least 1");
  require(boundary_max_points >= 3, "boundary_max_points must be at least 3");
  kernel.validate();
}

ModulationConfig ControllerConfig::modulation() const {
  ModulationConfig mc;
  mc.m = m;
  mc.N = N;
  mc.beta = beta;
  mc.gamma = gamma;
  mc.w_goal = w_goal;
  mc.w_barrier = w_barrier;
  mc.hysteresis = hysteresis;
  return mc;
}

ControlInput nominal_control(const RobotState& state, const Point2& target, double dt,
                             const ControllerConfig& config) {
  if (!(dt > 0.0)) throw std::invalid_argument("nominal_control: dt must be positive");
  const Vec2 diff = target - state.point_of_interest();
  const double dist = diff.norm();
  if (dist < config.goal_tolerance) return {};
  const double psi = wrap_angle(std::atan2(diff.y(), diff.x()) - state.theta);
  ControlInput u;
  u.v = std::clamp(config.cruise_speed, config.v_min, config.v_max);
  u.omega = std::clamp(psi / dt, -config.omega_max, config.omega_max);
  return u;
}

Eigen::Matrix<double, 3, 2> input_matrix(const RobotState& state) {
  const double a = state.shift();
  const double c = std::cos(state.theta);
  const double s = std::sin(state.theta);
  Eigen::Matrix<double, 3, 2> g;
  g << c, -a * s,
       s, a * c,
       0.0, 1.0;
  return g;
}

namespace {

struct EvaluatedBarrier {
  double h = 0.0;
  Eigen::VectorXd grad;  // over the planning state
  double dhdt_env = 0.0;
};

EvaluatedBarrier evaluate_for_state(const RobotState& state, const ObstacleBarrier& b,
                                    const ControllerConfig& config, double now) {
  EvaluatedBarrier e;
  if (state.model == RobotModel::Shifted) {
    const BarrierQuery q = barrier_query(b, state.point_of_interest(), config.rho_rob, now);
    e.h = q.value;
    e.grad = q.gradient_pos;
    e.dhdt_env = q.dhdt_env;
  } else {
    const AugmentedQuery q = augmented_barrier(state, b, config.w, config.rho_rob, now);
    e.h = q.value;
    e.grad = q.gradient;
    e.dhdt_env = q.dhdt_env;
  }
  return e;
}

// Maps a gradient over the planning state through g(x) to a row over (v, omega).
Eigen::Vector2d lift(const Eigen::VectorXd& grad, const Eigen::Matrix<double, 3, 2>& g) {
  if (grad.size() == 2) return g.topRows<2>().transpose() * grad;
  return g.transpose() * Eigen::Vector3d(grad);
}

std::size_t polygon_signature(const Polyline& p) {
  std::size_t h = p.vertices.size();
  for (const auto& v : p.vertices) {
    h ^= std::hash<double>{}(v.x()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<double>{}(v.y()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace

QpProblem assemble_qp(const RobotState& state, std::span<const ObstacleBarrier> barriers,
                      const std::optional<Eigen::VectorXd>& phi, const ControllerConfig& config,
                      const ControlInput& u_nom, double now) {
  QpProblem qp;
  qp.u_nom = u_nom.vector();
  const auto g = input_matrix(state);
  const bool predictive = uses_prediction(config.mode);

  std::vector<double> values, env;
  std::vector<Eigen::VectorXd> grads;
  for (std::size_t i = 0; i < barriers.size(); ++i) {
    if (!predictive && barriers[i].kind == BarrierKind::Virtual) continue;
    const EvaluatedBarrier e = evaluate_for_state(state, barriers[i], config, now);
    // L_f h = 0 (driftless); L_g h u + env >= -alpha h.
    qp.rows.push_back({lift(e.grad, g), -config.alpha_gain * e.h - e.dhdt_env, RowKind::Safety, static_cast<int>(i)});
    values.push_back(e.h);
    grads.push_back(e.grad);
    env.push_back(e.dhdt_env);
  }

  if (uses_modulation(config.mode) && phi && !values.empty()) {
    const CombinedQuery c = combine_gradient(values, grads, env, config.rho);
    qp.rows.push_back({lift(c.gradient, g), -config.alpha_gain * c.value, RowKind::Combined, -1});
    qp.rows.push_back({lift(*phi, g), config.gamma, RowKind::Modulation, -1});
  }

  qp.rows.push_back({Eigen::Vector2d(1.0, 0.0), config.v_min, RowKind::Box, -1});
  qp.rows.push_back({Eigen::Vector2d(-1.0, 0.0), -config.v_max, RowKind::Box, -1});
  qp.rows.push_back({Eigen::Vector2d(0.0, 1.0), -config.omega_max, RowKind::Box, -1});
  qp.rows.push_back({Eigen::Vector2d(0.0, -1.0), -config.omega_max, RowKind::Box, -1});
  return qp;
}

Eigen::VectorXd planning_state(const RobotState& state) {
  if (state.model == RobotModel::Shifted) return Eigen::VectorXd(state.point_of_interest());
  return Eigen::VectorXd(state.vector());
}

FieldFn planning_field(std::span<const ObstacleBarrier> barriers, const ControllerConfig& config,
                       const RobotState& state, double now) {
  std::vector<ObstacleBarrier> list(barriers.begin(), barriers.end());
  const RobotModel model = state.model;
  return [list = std::move(list), config, model, now](const Eigen::VectorXd& x) {
    std::vector<double> values, env;
    std::vector<Eigen::VectorXd> grads;
    values.reserve(list.size());
    for (const auto& b : list) {
      if (model == RobotModel::Shifted) {
        const BarrierQuery q = barrier_query(b, Point2(x(0), x(1)), config.rho_rob, now);
        values.push_back(q.value);
        grads.emplace_back(q.gradient_pos);
      } else {
        RobotState s;
        s.px = x(0);
        s.py = x(1);
        s.theta = x(2);
        s.model = RobotModel::Standard;
        const AugmentedQuery q = augmented_barrier(s, b, config.w, config.rho_rob, now);
        values.push_back(q.value);
        grads.emplace_back(q.gradient);
      }
      env.push_back(0.0);
    }
    const CombinedQuery c = combine_gradient(values, grads, env, config.rho);
    return FieldSample{c.value, c.gradient};
  };
}

std::function<double(const Point2&)> combined_distance(std::span<const ObstacleBarrier> barriers, double rho,
                                                       double now) {
  std::vector<ObstacleBarrier> list(barriers.begin(), barriers.end());
  return [list = std::move(list), rho, now](const Point2& p) {
    double buf[64];
    std::vector<double> heap;
    double* values = buf;
    if (list.size() > 64) {
      heap.resize(list.size());
      values = heap.data();
    }
    for (std::size_t i = 0; i < list.size(); ++i) values[i] = list[i].model->distance(field_point(list[i], p, now));
    return combine(std::span<const double>(values, list.size()), rho);
  };
}

Controller::Controller(ControllerConfig config) : config_(std::move(config)), beta_(config_.beta_fallback) {
  config_.validate();
}

void Controller::reset() {
  cycle_ = 0;
  static_barriers_.clear();
  static_signature_.clear();
  barriers_.clear();
  efrs_.clear();
  beta_ = config_.beta_fallback;
  beta_fallback_ = true;
  d_geo_ = 0.0;
  incumbent_phi_.reset();
}

void Controller::refresh(const WorldSnapshot& world) {
  // Static geometry is fit once and reused while unchanged.
  std::vector<std::size_t> signature;
  for (const auto& p : world.static_obstacles) signature.push_back(polygon_signature(p));
  if (signature != static_signature_) {
    static_barriers_.clear();
    for (std::size_t i = 0; i < world.static_obstacles.size(); ++i) {
      const Polyline ring =
          resample_closed(world.static_obstacles[i], config_.boundary_max_points, config_.boundary_spacing);
      static_barriers_.push_back(make_barrier("static-" + std::to_string(i), ring.vertices, config_.kernel,
                                              BarrierKind::Physical, Vec2::Zero(), world.time));
    }
    static_signature_ = std::move(signature);
  }

  barriers_ = static_barriers_;
  efrs_.clear();
  const bool predictive = uses_prediction(config_.mode);
  for (const auto& track : world.tracks) {
    const Vec2 v = cvm_velocity(track);
    const double spacing = config_.boundary_spacing > 0.0 ? config_.boundary_spacing : 0.05;
    const auto n = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi * track.radius / spacing)), 8,
        config_.boundary_max_points);
    const Polyline disc = make_circle(track.current(), track.radius, n);
    barriers_.push_back(
        make_barrier("ped-" + track.id, disc.vertices, config_.kernel, BarrierKind::Physical, v, world.time));
    if (!predictive) continue;

    auto pm = world.probmaps.find(track.id);
    if (pm != world.probmaps.end()) {
      const double delta = config_.delta_kappa > 0.0 ? config_.delta_kappa : default_delta_kappa(pm->second);
      auto sets = probmap_efrs(pm->second, delta, config_.boundary_max_points);
      for (auto& e : sets) {
        e.obstacle_id = track.id + "#" + e.obstacle_id;
        barriers_.push_back(make_barrier("efrs-" + e.obstacle_id, e.boundary.vertices, config_.kernel,
                                         BarrierKind::Virtual, Vec2::Zero(), world.time));
        efrs_.push_back(std::move(e));
      }
    } else {
      CvmShape shape;
      shape.margin = config_.efrs_margin;
      shape.spread = config_.kappa_spread;
      shape.max_points = config_.boundary_max_points;
      shape.spacing = config_.boundary_spacing;
      Efrs e = cvm_efrs(track, config_.tau_max, shape);
      barriers_.push_back(make_barrier("efrs-" + track.id, e.boundary.vertices, config_.kernel,
                                       BarrierKind::Virtual, v, world.time));
      efrs_.push_back(std::move(e));
    }
  }
}

StepOutput Controller::step(const WorldSnapshot& world) {
  const auto t0 = std::chrono::steady_clock::now();
  StepOutput out;
  CycleDiagnostics& diag = out.diagnostics;

  RobotState state = world.robot;
  state.model = config_.model;
  state.offset = config_.a;
  const double now = world.time;

  diag.refreshed = cycle_ % config_.refresh_divider == 0;
  if (diag.refreshed) refresh(world);

  const Point2 xi = state.point_of_interest();
  std::vector<ObstacleBarrier> active;
  diag.min_h = std::numeric_limits<double>::infinity();
  for (const auto& b : barriers_) {
    const double h = barrier_query(b, xi, config_.rho_rob, now).value;
    diag.min_h = std::min(diag.min_h, h);
    if (h <= config_.b_range) {
      active.push_back(b);
      diag.active_obstacles.push_back(b.obstacle_id);
      diag.h_values.push_back(h);
    }
  }
  if (!diag.h_values.empty()) diag.hbar = combine(diag.h_values, config_.rho);

  diag.u_nom = nominal_control(state, world.target, config_.dt, config_);

  std::optional<Eigen::VectorXd> phi;
  if (uses_modulation(config_.mode) && !active.empty()) {
    if (config_.adaptive_beta && (diag.refreshed || beta_fallback_)) {
      MapSpec spec;
      for (const auto& b : active) {
        const Vec2 shift = field_point(b, Point2::Zero(), now);  // -v (now - t_fit)
        const auto box = b.model->bounds();
        spec.cover.extend(Point2(box.min() - shift));
        spec.cover.extend(Point2(box.max() - shift));
      }
      spec.margin = config_.map_margin;
      spec.resolution = config_.map_resolution;
      spec.beta_min = config_.beta_min;
      spec.beta_max = config_.beta_max;
      spec.beta_fallback = config_.beta_fallback;
      const BetaSelection sel = auto_param_select(combined_distance(active, config_.rho, now), config_.N, xi,
                                                  world.target, spec);
      beta_ = sel.beta;
      beta_fallback_ = sel.fallback;
      d_geo_ = sel.d_geo;
    }
    ModulationConfig mc = config_.modulation();
    mc.beta = config_.adaptive_beta ? beta_ : config_.beta;
    diag.beta = mc.beta;
    diag.beta_fallback = config_.adaptive_beta && beta_fallback_;
    diag.d_geo = d_geo_;
    try {
      const PhiSelection sel =
          select_phi(planning_field(active, config_, state, now), planning_state(state), mc, world.target,
                     incumbent_phi_);
      phi = sel.phi;
      incumbent_phi_ = sel.phi;
    } catch (const PlannerError&) {
      // Vanishing gradient of h-bar: no exit direction this cycle.
      phi.reset();
    }
  } else {
    incumbent_phi_.reset();
    beta_fallback_ = true;
  }
  diag.phi = phi;

  out.qp = assemble_qp(state, active, phi, config_, diag.u_nom, now);
  const QpSolution sol = solve_qp(out.qp);
  diag.qp_iterations = sol.iterations;
  diag.feasible = sol.feasible;
  if (sol.feasible) {
    out.u = {sol.u.x(), sol.u.y()};
    diag.active_rows = sol.active;
    for (int r : sol.active) diag.active_row_kinds.push_back(out.qp.rows[r].kind);
  } else {
    out.u = {};  // brake
  }

  ++cycle_;
  diag.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

StepOutput control_step(const WorldSnapshot& world, const ControllerConfig& config) {
  Controller c(config);
  return c.step(world);
}

}  // namespace mmp
