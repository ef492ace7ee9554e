#include "mmp/sim.hpp"

#include <json.hpp>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mmp {

Point2 PedestrianSpec::nominal_position(double t) const {
  if (waypoints.empty()) throw std::invalid_argument("pedestrian " + id + " has no waypoints");
  double s = std::max(0.0, t - start_delay) * speed;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const Vec2 seg = waypoints[i + 1] - waypoints[i];
    const double len = seg.norm();
    if (s <= len && len > 0.0) return waypoints[i] + (s / len) * seg;
    s -= len;
  }
  return waypoints.back();
}

void ScenarioConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("scenario " + name + ": dt must be positive");
  if (step_cap < 1) throw std::invalid_argument("scenario " + name + ": step_cap must be positive");
  if (duration / dt > step_cap + 1e-9)
    throw std::invalid_argument("scenario " + name + ": duration / dt exceeds step_cap");
  for (const auto& p : static_obstacles)
    if (p.size() < 3) throw std::invalid_argument("scenario " + name + ": obstacle polygon needs 3 vertices");
  for (const auto& p : pedestrians) {
    if (p.waypoints.empty()) throw std::invalid_argument("pedestrian " + p.id + " has no waypoints");
    if (!(p.radius > 0.0)) throw std::invalid_argument("pedestrian " + p.id + " radius must be positive");
    if (p.noise_sigma < 0.0) throw std::invalid_argument("pedestrian " + p.id + " noise must be non-negative");
  }
  controller.validate();
}

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Success: return "SUCCESS";
    case Outcome::Collision: return "COLLISION";
    case Outcome::Timeout: return "TIMEOUT";
    case Outcome::Error: return "ERROR";
  }
  return "?";
}

RobotState step_unicycle(const RobotState& state, const ControlInput& u, double dt) {
  auto f = [&](const Eigen::Vector3d& x) {
    return Eigen::Vector3d(u.v * std::cos(x.z()), u.v * std::sin(x.z()), u.omega);
  };
  const Eigen::Vector3d x = state.vector();
  const Eigen::Vector3d k1 = f(x);
  const Eigen::Vector3d k2 = f(x + 0.5 * dt * k1);
  const Eigen::Vector3d k3 = f(x + 0.5 * dt * k2);
  const Eigen::Vector3d k4 = f(x + dt * k3);
  const Eigen::Vector3d next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  RobotState out = state;
  out.px = next.x();
  out.py = next.y();
  out.theta = wrap_angle(next.z());
  return out;
}

void step_pedestrians(const ScenarioConfig& scenario, double t, std::mt19937_64& rng,
                      std::vector<ObstacleTrack>& tracks) {
  if (tracks.size() != scenario.pedestrians.size()) {
    tracks.clear();
    for (const auto& p : scenario.pedestrians) {
      ObstacleTrack track;
      track.id = p.id;
      track.radius = p.radius;
      tracks.push_back(std::move(track));
    }
  }
  for (std::size_t i = 0; i < scenario.pedestrians.size(); ++i) {
    const PedestrianSpec& p = scenario.pedestrians[i];
    Point2 pos = p.nominal_position(t);
    if (p.noise_sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, p.noise_sigma);
      const double nx = noise(rng);
      const double ny = noise(rng);
      pos += Vec2(nx, ny);
    }
    auto& history = tracks[i].history;
    history.push_back({t, pos});
    if (history.size() > scenario.history_length)
      history.erase(history.begin(), history.end() - static_cast<std::ptrdiff_t>(scenario.history_length));
  }
}

double physical_clearance(const ScenarioConfig& scenario, const std::vector<ObstacleTrack>& tracks,
                          const Point2& xi, double rho_rob) {
  double c = std::numeric_limits<double>::infinity();
  for (const auto& poly : scenario.static_obstacles) c = std::min(c, signed_distance(poly, xi) - rho_rob);
  for (const auto& t : tracks) c = std::min(c, (xi - t.current()).norm() - t.radius - rho_rob);
  return c;
}

RunRecord run_scenario(const ScenarioConfig& config, Mode mode) {
  config.validate();
  RunRecord rec;
  rec.scenario = config.name;
  rec.mode = mode;
  rec.seed = config.seed;
  rec.initial_theta = config.start.theta;
  rec.min_clearance = std::numeric_limits<double>::infinity();

  ControllerConfig cc = config.controller;
  cc.mode = mode;
  cc.dt = config.dt;
  Controller controller(cc);

  std::mt19937_64 rng(config.seed);
  std::vector<ObstacleTrack> tracks;
  RobotState state = config.start;
  state.model = cc.model;
  state.offset = cc.a;

  WorldSnapshot world;
  world.target = config.target;
  world.static_obstacles = config.static_obstacles;

  const int steps = std::min(config.step_cap, static_cast<int>(std::floor(config.duration / config.dt + 1e-9)));
  rec.outcome = Outcome::Timeout;
  rec.timespan = steps * config.dt;
  for (int k = 0; k < steps; ++k) {
    const double t = k * config.dt;
    step_pedestrians(config, t, rng, tracks);

    const Point2 xi = state.point_of_interest();
    const double clearance = physical_clearance(config, tracks, xi, cc.rho_rob);
    rec.min_clearance = std::min(rec.min_clearance, clearance);
    if (clearance < 0.0) {
      rec.outcome = Outcome::Collision;
      rec.timespan = t;
      break;
    }
    if ((xi - config.target).norm() <= cc.goal_tolerance) {
      rec.outcome = Outcome::Success;
      rec.timespan = t;
      break;
    }

    world.time = t;
    world.robot = state;
    world.tracks = tracks;
    StepOutput out;
    try {
      out = controller.step(world);
    } catch (const std::exception& e) {
      rec.outcome = Outcome::Error;
      rec.error = e.what();
      rec.timespan = t;
      break;
    }

    StepRecord s;
    s.t = t;
    s.state = state;
    s.u = out.u;
    s.feasible = out.diagnostics.feasible;
    s.min_h = out.diagnostics.min_h;
    s.clearance = clearance;
    s.beta = out.diagnostics.beta;
    if (out.diagnostics.phi) {
      s.has_phi = true;
      s.phi = out.diagnostics.phi->head<2>();
    }
    s.solve_time = out.diagnostics.solve_time;
    if (!s.feasible) ++rec.infeasible_steps;
    rec.steps.push_back(s);

    state = step_unicycle(state, out.u, config.dt);
  }
  return rec;
}

double batch_orientation(int i, int n) { return wrap_angle(2.0 * std::numbers::pi * i / n); }

MetricsRow aggregate(const std::string& scenario, Mode mode, const std::vector<RunRecord>& runs) {
  MetricsRow row;
  row.scenario = scenario;
  row.mode = mode;
  double span = 0.0;
  double rt_sum = 0.0, rt_sq = 0.0;
  long rt_n = 0;
  for (const auto& r : runs) {
    ++row.runs;
    if (r.outcome == Outcome::Error) {
      ++row.errored;
      continue;
    }
    if (r.outcome != Outcome::Collision) ++row.safety;
    if (r.outcome == Outcome::Success) {
      ++row.success;
      span += r.timespan;
    }
    row.infeasible_steps += r.infeasible_steps;
    for (const auto& s : r.steps) {
      rt_sum += s.solve_time;
      rt_sq += s.solve_time * s.solve_time;
      ++rt_n;
    }
  }
  const int counted = row.runs - row.errored;
  row.infeasible_per_run = counted > 0 ? static_cast<double>(row.infeasible_steps) / counted : 0.0;
  if (row.success > 0) row.timespan_mean = span / row.success;
  if (rt_n > 0) {
    row.runtime_mean = rt_sum / rt_n;
    row.runtime_std = std::sqrt(std::max(0.0, rt_sq / rt_n - row.runtime_mean * row.runtime_mean));
  }
  return row;
}

BatchResult run_batch(const std::vector<ScenarioConfig>& configs, const std::vector<Mode>& modes,
                      int orientations) {
  if (configs.empty() || modes.empty() || orientations < 1)
    throw std::invalid_argument("run_batch: empty batch");
  BatchResult out;
  for (const auto& base : configs) {
    for (Mode mode : modes) {
      std::vector<RunRecord> runs;
      for (int i = 0; i < orientations; ++i) {
        ScenarioConfig cfg = base;
        cfg.start.theta = batch_orientation(i, orientations);
        cfg.seed = base.seed + static_cast<std::uint64_t>(i);
        runs.push_back(run_scenario(cfg, mode));
      }
      out.table.push_back(aggregate(base.name, mode, runs));
      for (auto& r : runs) out.runs.push_back(std::move(r));
    }
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trajectory_csv(const RunRecord& run, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory file " + path.string());
  out << "t,px,py,theta,v,omega,min_h,feasible,beta,phi_x,phi_y\n";
  for (const auto& s : run.steps) {
    out << fmt(s.t) << ',' << fmt(s.state.px) << ',' << fmt(s.state.py) << ',' << fmt(s.state.theta) << ','
        << fmt(s.u.v) << ',' << fmt(s.u.omega) << ',' << fmt(s.min_h) << ',' << (s.feasible ? 1 : 0) << ','
        << fmt(s.beta) << ',' << fmt(s.phi.x()) << ',' << fmt(s.phi.y()) << '\n';
  }
}

void write_metrics_csv(const std::vector<MetricsRow>& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics file " + path.string());
  out << "scenario,mode,runs,errored,safety,success,infeasible_steps,infeasible_per_run,timespan_mean,"
         "runtime_mean,runtime_std\n";
  for (const auto& r : table) {
    out << r.scenario << ',' << to_string(r.mode) << ',' << r.runs << ',' << r.errored << ',' << r.safety << ','
        << r.success << ',' << r.infeasible_steps << ',' << fmt(r.infeasible_per_run) << ','
        << (r.timespan_mean ? fmt(*r.timespan_mean) : std::string("--")) << ',' << fmt(r.runtime_mean) << ','
        << fmt(r.runtime_std) << '\n';
  }
}

void write_metrics_json(const BatchResult& batch, const std::filesystem::path& path) {
  nlohmann::json j;
  j["table"] = nlohmann::json::array();
  for (const auto& r : batch.table) {
    nlohmann::json row{{"scenario", r.scenario},
                       {"mode", to_string(r.mode)},
                       {"runs", r.runs},
                       {"errored", r.errored},
                       {"safety", r.safety},
                       {"success", r.success},
                       {"infeasible_steps", r.infeasible_steps},
                       {"infeasible_per_run", r.infeasible_per_run},
                       {"runtime_mean", r.runtime_mean},
                       {"runtime_std", r.runtime_std}};
    row["timespan_mean"] = r.timespan_mean ? nlohmann::json(*r.timespan_mean) : nlohmann::json(nullptr);
    j["table"].push_back(row);
  }
  j["runs"] = nlohmann::json::array();
  for (const auto& r : batch.runs) {
    nlohmann::json run{{"scenario", r.scenario},
                       {"mode", to_string(r.mode)},
                       {"seed", r.seed},
                       {"initial_theta", r.initial_theta},
                       {"outcome", to_string(r.outcome)},
                       {"timespan", r.timespan},
                       {"infeasible_steps", r.infeasible_steps},
                       {"min_clearance", std::isfinite(r.min_clearance) ? nlohmann::json(r.min_clearance)
                                                                         : nlohmann::json(nullptr)}};
    if (!r.error.empty()) run["error"] = r.error;
    j["runs"].push_back(run);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics file " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace mmp
