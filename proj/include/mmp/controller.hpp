#pragma once

#include "mmp/barrier.hpp"
#include "mmp/geometry.hpp"
#include "mmp/gpdf.hpp"
#include "mmp/planner.hpp"
#include "mmp/prediction.hpp"
#include "mmp/qp.hpp"
#include "mmp/state.hpp"

#include <Eigen/Core>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmp {

/// CBF: physical barriers only. MCBF: adds the exit-direction (modulation) and
/// combined-barrier rows. MMP_*: same, plus predicted reachable sets as virtual obstacles.
enum class Mode { CBF, MCBF, MMP_CBF, MMP_MCBF };

const char* to_string(Mode mode);
Mode mode_from_string(std::string_view name);
bool uses_prediction(Mode mode);
bool uses_modulation(Mode mode);

struct ControllerConfig {
  Mode mode = Mode::MMP_MCBF;
  RobotModel model = RobotModel::Shifted;
  double a = 0.2;            ///< point-of-interest offset for the shifted model (m)
  double alpha_gain = 1.0;   ///< linear class-K gain (1/s)
  double gamma = 0.05;       ///< modulation lower bound (m/s)
  double rho = 5.0;          ///< log-sum-exp sharpness (1/m)
  double b_range = 2.0;      ///< active-set radius on h (m)
  double w = 0.5;            ///< augmented-barrier heading weight (m), standard model only
  int N = 60;
  int m = 2;
  double w_goal = 1.0;
  double w_barrier = 0.5;
  double hysteresis = 0.05;
  double v_min = -0.2;
  double v_max = 1.0;
  double omega_max = 1.5;
  double cruise_speed = 1.0;
  double goal_tolerance = 0.05;
  double dt = 0.033;         ///< nominal-controller sampling time (s)
  double rho_rob = 0.3;      ///< robot safety radius (m)
  bool adaptive_beta = true;
  double beta = 0.02;        ///< constant step used when adaptive_beta is false
  double beta_min = 0.005;
  double beta_max = 1.0;
  double beta_fallback = 0.02;
  double map_resolution = 0.05;
  double map_margin = 1.0;
  KernelParams kernel{};
  std::size_t boundary_max_points = 200;
  double boundary_spacing = 0.05;
  double tau_max = 4.0;      ///< prediction horizon (s)
  double efrs_margin = 0.1;
  double kappa_spread = 0.25;
  double delta_kappa = 0.0;  ///< probability-map threshold; <= 0 picks 10% of the peak
  int refresh_divider = 3;   ///< prediction/refit/beta refresh every this many cycles

  void validate() const;
  ModulationConfig modulation() const;
};

/// Everything the controller observes in one cycle.
struct WorldSnapshot {
  double time = 0.0;
  RobotState robot;
  Point2 target = Point2::Zero();
  std::vector<Polyline> static_obstacles;
  std::vector<ObstacleTrack> tracks;
  /// Optional learned predictions keyed by track id; replaces the CVM set for that track.
  std::map<std::string, ProbMapStack> probmaps;
};

struct CycleDiagnostics {
  bool feasible = true;
  bool refreshed = false;
  ControlInput u_nom;
  std::vector<std::string> active_obstacles;
  std::vector<double> h_values;  ///< per active barrier
  double min_h = 0.0;            ///< over all barriers, +inf when none
  double hbar = 0.0;
  std::vector<int> active_rows;  ///< binding QP rows
  std::vector<RowKind> active_row_kinds;
  std::optional<Eigen::VectorXd> phi;
  double beta = 0.0;
  bool beta_fallback = false;
  double d_geo = 0.0;
  int qp_iterations = 0;
  double solve_time = 0.0;  ///< wall time of the whole cycle (s)
};

struct StepOutput {
  ControlInput u;
  CycleDiagnostics diagnostics;
  QpProblem qp;
};

/// Nominal unicycle input toward the target: unit-speed direction, heading error / dt.
ControlInput nominal_control(const RobotState& state, const Point2& target, double dt,
                             const ControllerConfig& config);

/// Input matrix g(x) of the (shifted) unicycle, rows (px, py, theta).
Eigen::Matrix<double, 3, 2> input_matrix(const RobotState& state);

/// Builds the per-cycle QP. Safety rows for every barrier (virtual ones only in
/// prediction modes); modulation and combined rows only when phi is given in a
/// modulated mode. f(x) = 0 for the unicycle.
QpProblem assemble_qp(const RobotState& state, std::span<const ObstacleBarrier> barriers,
                      const std::optional<Eigen::VectorXd>& phi, const ControllerConfig& config,
                      const ControlInput& u_nom, double now = kAtFitTime);

/// Planning field over the robot state: h-bar of the given barriers, over the
/// point of interest (shifted) or over (x, y, theta) with augmented barriers (standard).
FieldFn planning_field(std::span<const ObstacleBarrier> barriers, const ControllerConfig& config,
                       const RobotState& state, double now = kAtFitTime);
Eigen::VectorXd planning_state(const RobotState& state);

/// Combined unaugmented distance field s-bar over positions.
std::function<double(const Point2&)> combined_distance(std::span<const ObstacleBarrier> barriers, double rho,
                                                       double now = kAtFitTime);

/// One robot's control loop. Holds the fitted barriers, the adaptive step size and
/// the incumbent exit direction between cycles; not thread-safe.
class Controller {
public:
  explicit Controller(ControllerConfig config);

  StepOutput step(const WorldSnapshot& world);
  void reset();

  const ControllerConfig& config() const { return config_; }
  const std::vector<ObstacleBarrier>& barriers() const { return barriers_; }
  const std::vector<Efrs>& predicted_sets() const { return efrs_; }
  /// Refits all barriers for the snapshot without running the QP.
  void refresh(const WorldSnapshot& world);

private:
  ControllerConfig config_;
  long cycle_ = 0;
  std::vector<ObstacleBarrier> static_barriers_;
  std::vector<std::size_t> static_signature_;
  std::vector<ObstacleBarrier> barriers_;
  std::vector<Efrs> efrs_;
  double beta_;
  bool beta_fallback_ = true;
  double d_geo_ = 0.0;
  std::optional<Eigen::VectorXd> incumbent_phi_;
};

/// Single stateless cycle: fresh controller, no hysteresis memory.
StepOutput control_step(const WorldSnapshot& world, const ControllerConfig& config);

}  // namespace mmp
