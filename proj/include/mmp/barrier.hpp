#pragma once

#include "mmp/geometry.hpp"
#include "mmp/gpdf.hpp"
#include "mmp/state.hpp"

#include <Eigen/Core>

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mmp {

/// Physical obstacles count for collisions; virtual ones are predicted reachable sets.
enum class BarrierKind { Physical, Virtual };

struct ObstacleBarrier {
  std::string obstacle_id;
  std::shared_ptr<const GpdfModel> model;
  /// Rigid-translation estimate of the obstacle (or its reachable set) since the fit.
  Vec2 velocity_hint = Vec2::Zero();
  double last_refit_time = 0.0;
  BarrierKind kind = BarrierKind::Physical;
};

/// Query time meaning "at the barrier's own fit time" (no rigid translation).
inline constexpr double kAtFitTime = std::numeric_limits<double>::quiet_NaN();

struct BarrierQuery {
  double value = 0.0;
  Vec2 gradient_pos = Vec2::Zero();
  /// Environment-motion term grad_{x_o} h . xdot_o.
  double dhdt_env = 0.0;
  bool saturated = false;
};

/// h = GPDF distance - safety_radius. The field is translated rigidly by
/// velocity_hint * (now - last_refit_time), so grad_{x_o} h . xdot_o = -grad h . v.
/// Point in the fitted model's frame corresponding to xi at time `now`.
Point2 field_point(const ObstacleBarrier& b, const Point2& xi, double now = kAtFitTime);

BarrierQuery barrier_query(const ObstacleBarrier& b, const Point2& xi, double safety_radius = 0.0,
                           double now = kAtFitTime);

struct AugmentedQuery {
  double value = 0.0;
  /// Over (x, y, theta).
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
  double dhdt_env = 0.0;
  bool saturated = false;
};

/// h_aug = s + w grad(s) . (cos theta, sin theta), evaluated at the pose position.
/// The positional gradient is a central difference (step 1e-4 m) since it needs
/// the GPDF Hessian; the heading gradient is analytic.
AugmentedQuery augmented_barrier(const RobotState& state, const ObstacleBarrier& b, double w,
                                 double safety_radius = 0.0, double now = kAtFitTime);

/// Log-sum-exp soft minimum -(1/rho) ln(sum exp(-rho (h_i + 1))) - 1.
double combine(std::span<const double> values, double rho);

struct CombinedQuery {
  double value = 0.0;
  Eigen::VectorXd gradient;
  double dhdt_env = 0.0;
  /// Softmax weights exp(-rho (h_i + 1)) / sum_j exp(-rho (h_j + 1)).
  std::vector<double> weights;
};

CombinedQuery combine_gradient(std::span<const double> values, std::span<const Eigen::VectorXd> gradients,
                               std::span<const double> dhdt_env, double rho);
/// Combined barrier over positions for the given barriers.
CombinedQuery combine_gradient(std::span<const ObstacleBarrier> barriers, const Point2& xi, double rho,
                               double safety_radius = 0.0, double now = kAtFitTime);

/// Barriers whose h at xi is at most b_range.
std::vector<ObstacleBarrier> active_set(std::span<const ObstacleBarrier> barriers, const Point2& xi,
                                        double b_range, double safety_radius = 0.0, double now = kAtFitTime);

/// Fits a barrier from a boundary ring, with the jitter retry on SPD failure.
ObstacleBarrier make_barrier(std::string id, std::span<const Point2> boundary, const KernelParams& kernel,
                             BarrierKind kind, const Vec2& velocity_hint = Vec2::Zero(), double fit_time = 0.0);

}  // namespace mmp
