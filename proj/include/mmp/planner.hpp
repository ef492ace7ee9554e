#pragma once

#include "mmp/geometry.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmp {

class PlannerError : public std::runtime_error {
public:
  explicit PlannerError(const std::string& what) : std::runtime_error(what) {}
};

/// Value and gradient of a scalar field over the planning state (2D position or 3D pose).
struct FieldSample {
  double value = 0.0;
  Eigen::VectorXd gradient;
};
using FieldFn = std::function<FieldSample(const Eigen::VectorXd&)>;
/// Reward p(x) given the state and the field value there.
using RewardFn = std::function<double(const Eigen::VectorXd& x, double field_value)>;

struct ModulationConfig {
  int m = 2;           ///< candidate directions
  int N = 60;          ///< geodesic walk iterations
  double beta = 0.02;  ///< walk step (m); replaced by auto_param_select when adaptive
  double gamma = 0.05; ///< modulation lower bound (m/s)
  double w_goal = 1.0;
  double w_barrier = 0.5;
  /// Relative margin a challenger potential must beat the incumbent direction by.
  double hysteresis = 0.05;

  void validate() const;
};

struct GeodesicWalk {
  std::vector<Eigen::VectorXd> path;
  double potential = 0.0;
  Eigen::VectorXd initial_direction;
  /// Gradient vanished before N steps; the remaining steps reuse the last reward.
  bool terminated_early = false;
};

/// Orthonormal basis of the tangent space orthogonal to grad (one column per direction).
/// 2D: the counter-clockwise rotation of grad / |grad|.
Eigen::MatrixXd tangent_hyperplane(const Eigen::VectorXd& grad);

/// m directions spread uniformly over the unit sphere, with coordinates zeroed where
/// the gradient component vanishes, and each with a non-trivial tangent projection.
std::vector<Eigen::VectorXd> sample_candidates(const Eigen::VectorXd& grad, int m);

/// Iterates x <- x + beta H H^T e, e <- normalize(H H^T e), P <- P + beta p(x) for N steps.
GeodesicWalk geodesic_walk(const FieldFn& field, const Eigen::VectorXd& x0, const Eigen::VectorXd& e0,
                           double beta, int N, const RewardFn& reward);

/// p(x) = w_goal |xi(x) - target| + w_barrier * hbar(x), xi(x) being the first two coordinates.
RewardFn goal_reward(const Point2& target, double w_goal, double w_barrier);

struct PhiSelection {
  Eigen::VectorXd phi;
  int chosen = 0;
  int winner = 0;  ///< argmin before hysteresis
  bool kept_incumbent = false;
  std::vector<double> potentials;
  std::vector<Eigen::VectorXd> tangents;
  std::vector<GeodesicWalk> walks;
};

/// Exit direction: tangent projection of the candidate with the smallest walk potential.
/// Ties go to the lower index. With an incumbent, a flip needs the winner to beat the
/// incumbent's potential by config.hysteresis * |P_incumbent|.
PhiSelection select_phi(const FieldFn& field, const Eigen::VectorXd& x, const ModulationConfig& config,
                        const Point2& target, const std::optional<Eigen::VectorXd>& incumbent = std::nullopt);

struct MapSpec {
  /// Region that must be covered besides the robot and the target (active obstacles).
  Eigen::AlignedBox2d cover;
  double margin = 1.0;
  double resolution = 0.05;
  double beta_min = 0.005;
  double beta_max = 1.0;
  double beta_fallback = 0.02;
};

struct BetaSelection {
  double beta = 0.0;
  double d_geo = 0.0;
  bool fallback = false;
  int contour_count = 0;
  Polyline contour;  ///< isoline used for d_geo
};

/// Adaptive step size beta = d_geo / N from the robot's isoline of the combined
/// distance field, rasterized over spec.cover plus robot and target.
BetaSelection auto_param_select(const std::function<double(const Point2&)>& sbar, int N, const Point2& xi_rob,
                                const Point2& xi_tar, const MapSpec& spec);

ScalarGrid rasterize(const std::function<double(const Point2&)>& field, const Eigen::AlignedBox2d& box,
                     double resolution);

}  // namespace mmp
