#pragma once

#include "mmp/controller.hpp"
#include "mmp/geometry.hpp"
#include "mmp/prediction.hpp"
#include "mmp/state.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mmp {

/// Waypoint-following pedestrian with Gaussian positional noise.
struct PedestrianSpec {
  std::string id;
  std::vector<Point2> waypoints;
  double speed = 1.0;
  double start_delay = 0.0;
  double noise_sigma = 0.0;
  double radius = 0.3;

  /// Noise-free position at time t.
  Point2 nominal_position(double t) const;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::vector<Polyline> static_obstacles;
  std::vector<PedestrianSpec> pedestrians;
  RobotState start;
  Point2 target = Point2::Zero();
  double duration = 26.4;
  double dt = 0.033;
  int step_cap = 800;
  std::uint64_t seed = 0;
  /// Samples kept per pedestrian track.
  std::size_t history_length = 16;
  ControllerConfig controller;

  void validate() const;
};

enum class Outcome { Success, Collision, Timeout, Error };
const char* to_string(Outcome outcome);

struct StepRecord {
  double t = 0.0;
  RobotState state;
  ControlInput u;
  bool feasible = true;
  double min_h = 0.0;
  double clearance = 0.0;  ///< physical clearance of the robot disc (m)
  double beta = 0.0;
  Eigen::Vector2d phi = Eigen::Vector2d::Zero();
  bool has_phi = false;
  double solve_time = 0.0;
};

struct RunRecord {
  std::string scenario;
  Mode mode = Mode::CBF;
  std::uint64_t seed = 0;
  double initial_theta = 0.0;
  std::vector<StepRecord> steps;
  Outcome outcome = Outcome::Timeout;
  double timespan = 0.0;
  int infeasible_steps = 0;
  double min_clearance = 0.0;
  std::string error;
};

/// RK4 on the axle pose (x' = v cos th, y' = v sin th, th' = omega); heading wrapped.
RobotState step_unicycle(const RobotState& state, const ControlInput& u, double dt);

/// Advances each pedestrian to time t and appends the observed sample to its track.
void step_pedestrians(const ScenarioConfig& scenario, double t, std::mt19937_64& rng,
                      std::vector<ObstacleTrack>& tracks);

/// Clearance of the robot disc (radius rho_rob around the point of interest) to
/// static polygons and pedestrian discs; negative means collision.
double physical_clearance(const ScenarioConfig& scenario, const std::vector<ObstacleTrack>& tracks,
                          const Point2& xi, double rho_rob);

/// Closed-loop run: pedestrians, control cycle, unicycle step, until goal,
/// collision or the step cap.
RunRecord run_scenario(const ScenarioConfig& config, Mode mode);

struct MetricsRow {
  std::string scenario;
  Mode mode = Mode::CBF;
  int runs = 0;
  int errored = 0;
  int safety = 0;
  int success = 0;
  int infeasible_steps = 0;
  double infeasible_per_run = 0.0;
  std::optional<double> timespan_mean;  ///< over SUCCESS runs only
  double runtime_mean = 0.0;
  double runtime_std = 0.0;
};

struct BatchResult {
  std::vector<MetricsRow> table;
  std::vector<RunRecord> runs;
};

/// Initial heading for orientation index i of n (uniform over the circle).
double batch_orientation(int i, int n);

/// Every scenario x mode x orientation; orientation i also offsets the seed by i.
BatchResult run_batch(const std::vector<ScenarioConfig>& configs, const std::vector<Mode>& modes,
                      int orientations = 10);
MetricsRow aggregate(const std::string& scenario, Mode mode, const std::vector<RunRecord>& runs);

void write_trajectory_csv(const RunRecord& run, const std::filesystem::path& path);
void write_metrics_csv(const std::vector<MetricsRow>& table, const std::filesystem::path& path);
void write_metrics_json(const BatchResult& batch, const std::filesystem::path& path);

}  // namespace mmp
