#include "mmp/config_io.hpp"

#include <fstream>
#include <set>

namespace mmp {

using nlohmann::json;

namespace {

class Reader {
public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown field '" + key + "'");
  }

private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Point2 point_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(where + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Point2> points_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected a list of points");
  std::vector<Point2> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(point_from_json(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

json points_to_json(const std::vector<Point2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.x(), p.y()});
  return a;
}

const char* model_name(RobotModel m) { return m == RobotModel::Shifted ? "shifted" : "standard"; }

}  // namespace

ControllerConfig controller_config_from_json(const json& j, ControllerConfig c) {
  Reader r(j, "controller");
  std::string mode = to_string(c.mode);
  r.get("mode", mode);
  c.mode = mode_from_string(mode);
  std::string model = model_name(c.model);
  r.get("model", model);
  if (model == "shifted")
    c.model = RobotModel::Shifted;
  else if (model == "standard")
    c.model = RobotModel::Standard;
  else
    throw ConfigError("controller.model: expected 'shifted' or 'standard', got '" + model + "'");
  r.get("a", c.a);
  r.get("alpha_gain", c.alpha_gain);
  r.get("gamma", c.gamma);
  r.get("rho", c.rho);
  r.get("b_range", c.b_range);
  r.get("w", c.w);
  r.get("N", c.N);
  r.get("m", c.m);
  r.get("w_goal", c.w_goal);
  r.get("w_barrier", c.w_barrier);
  r.get("hysteresis", c.hysteresis);
  r.get("v_min", c.v_min);
  r.get("v_max", c.v_max);
  r.get("omega_max", c.omega_max);
  r.get("cruise_speed", c.cruise_speed);
  r.get("goal_tolerance", c.goal_tolerance);
  r.get("dt", c.dt);
  r.get("rho_rob", c.rho_rob);
  r.get("adaptive_beta", c.adaptive_beta);
  r.get("beta", c.beta);
  r.get("beta_min", c.beta_min);
  r.get("beta_max", c.beta_max);
  r.get("beta_fallback", c.beta_fallback);
  r.get("map_resolution", c.map_resolution);
  r.get("map_margin", c.map_margin);
  r.get("boundary_max_points", c.boundary_max_points);
  r.get("boundary_spacing", c.boundary_spacing);
  r.get("tau_max", c.tau_max);
  r.get("efrs_margin", c.efrs_margin);
  r.get("kappa_spread", c.kappa_spread);
  r.get("delta_kappa", c.delta_kappa);
  r.get("refresh_divider", c.refresh_divider);
  if (const json* k = r.child("kernel")) {
    Reader kr(*k, "controller.kernel");
    kr.get("sigma", c.kernel.sigma);
    kr.get("length_scale", c.kernel.length_scale);
    kr.get("noise", c.kernel.noise);
    kr.finish();
  }
  r.finish();
  try {
    c.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("controller: ") + e.what());
  }
  return c;
}

json to_json(const ControllerConfig& c) {
  return json{{"mode", to_string(c.mode)},
              {"model", model_name(c.model)},
              {"a", c.a},
              {"alpha_gain", c.alpha_gain},
              {"gamma", c.gamma},
              {"rho", c.rho},
              {"b_range", c.b_range},
              {"w", c.w},
              {"N", c.N},
              {"m", c.m},
              {"w_goal", c.w_goal},
              {"w_barrier", c.w_barrier},
              {"hysteresis", c.hysteresis},
              {"v_min", c.v_min},
              {"v_max", c.v_max},
              {"omega_max", c.omega_max},
              {"cruise_speed", c.cruise_speed},
              {"goal_tolerance", c.goal_tolerance},
              {"dt", c.dt},
              {"rho_rob", c.rho_rob},
              {"adaptive_beta", c.adaptive_beta},
              {"beta", c.beta},
              {"beta_min", c.beta_min},
              {"beta_max", c.beta_max},
              {"beta_fallback", c.beta_fallback},
              {"map_resolution", c.map_resolution},
              {"map_margin", c.map_margin},
              {"boundary_max_points", c.boundary_max_points},
              {"boundary_spacing", c.boundary_spacing},
              {"tau_max", c.tau_max},
              {"efrs_margin", c.efrs_margin},
              {"kappa_spread", c.kappa_spread},
              {"delta_kappa", c.delta_kappa},
              {"refresh_divider", c.refresh_divider},
              {"kernel", {{"sigma", c.kernel.sigma}, {"length_scale", c.kernel.length_scale}, {"noise", c.kernel.noise}}}};
}

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig s;
  Reader r(j, "scenario");
  r.get("name", s.name);
  r.get("duration", s.duration);
  r.get("dt", s.dt);
  r.get("step_cap", s.step_cap);
  r.get("seed", s.seed);
  r.get("history_length", s.history_length);
  if (const json* t = r.child("target")) s.target = point_from_json(*t, "scenario.target");
  if (const json* st = r.child("robot_start")) {
    Reader rr(*st, "scenario.robot_start");
    rr.get("x", s.start.px);
    rr.get("y", s.start.py);
    rr.get("theta", s.start.theta);
    rr.finish();
  }
  if (const json* obs = r.child("static_obstacles")) {
    if (!obs->is_array()) throw ConfigError("scenario.static_obstacles: expected a list of polygons");
    for (std::size_t i = 0; i < obs->size(); ++i)
      s.static_obstacles.push_back(
          Polyline{points_from_json((*obs)[i], "scenario.static_obstacles[" + std::to_string(i) + "]"), true});
  }
  if (const json* peds = r.child("pedestrians")) {
    if (!peds->is_array()) throw ConfigError("scenario.pedestrians: expected a list");
    for (std::size_t i = 0; i < peds->size(); ++i) {
      const std::string where = "scenario.pedestrians[" + std::to_string(i) + "]";
      PedestrianSpec p;
      p.id = "ped" + std::to_string(i);
      Reader pr((*peds)[i], where);
      pr.get("id", p.id);
      pr.get("speed", p.speed);
      pr.get("start_delay", p.start_delay);
      pr.get("noise_sigma", p.noise_sigma);
      pr.get("radius", p.radius);
      if (const json* w = pr.child("waypoints")) p.waypoints = points_from_json(*w, where + ".waypoints");
      pr.finish();
      s.pedestrians.push_back(std::move(p));
    }
  }
  if (const json* c = r.child("controller")) s.controller = controller_config_from_json(*c);
  r.finish();
  try {
    s.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return s;
}

json to_json(const ScenarioConfig& s) {
  json obs = json::array();
  for (const auto& p : s.static_obstacles) obs.push_back(points_to_json(p.vertices));
  json peds = json::array();
  for (const auto& p : s.pedestrians)
    peds.push_back({{"id", p.id},
                    {"waypoints", points_to_json(p.waypoints)},
                    {"speed", p.speed},
                    {"start_delay", p.start_delay},
                    {"noise_sigma", p.noise_sigma},
                    {"radius", p.radius}});
  return json{{"name", s.name},
              {"duration", s.duration},
              {"dt", s.dt},
              {"step_cap", s.step_cap},
              {"seed", s.seed},
              {"history_length", s.history_length},
              {"robot_start", {{"x", s.start.px}, {"y", s.start.py}, {"theta", s.start.theta}}},
              {"target", {s.target.x(), s.target.y()}},
              {"static_obstacles", obs},
              {"pedestrians", peds},
              {"controller", to_json(s.controller)}};
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write scenario file " + path.string());
  out << to_json(config).dump(2) << '\n';
}

}  // namespace mmp
