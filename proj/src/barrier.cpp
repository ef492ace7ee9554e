#include "mmp/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mmp {

Point2 field_point(const ObstacleBarrier& b, const Point2& xi, double now) {
  if (std::isnan(now)) return xi;
  return xi - b.velocity_hint * (now - b.last_refit_time);
}

BarrierQuery barrier_query(const ObstacleBarrier& b, const Point2& xi, double safety_radius, double now) {
  const GpdfSample s = b.model->evaluate(field_point(b, xi, now));
  BarrierQuery q;
  q.value = s.distance - safety_radius;
  q.gradient_pos = s.gradient;
  q.saturated = s.saturated;
  q.dhdt_env = s.saturated ? 0.0 : -s.gradient.dot(b.velocity_hint);
  return q;
}

AugmentedQuery augmented_barrier(const RobotState& state, const ObstacleBarrier& b, double w,
                                 double safety_radius, double now) {
  if (!(w > 0.0)) throw std::invalid_argument("augmented_barrier: w must be positive");
  const Vec2 heading(std::cos(state.theta), std::sin(state.theta));
  const Point2 xi = state.pose_position();

  auto h_aug = [&](const Point2& p) {
    const GpdfSample s = b.model->evaluate(field_point(b, p, now));
    return s.distance - safety_radius + w * s.gradient.dot(heading);
  };

  const GpdfSample center = b.model->evaluate(field_point(b, xi, now));
  AugmentedQuery q;
  q.value = center.distance - safety_radius + w * center.gradient.dot(heading);
  q.saturated = center.saturated;

  constexpr double kStep = 1e-4;
  const Vec2 ex(kStep, 0.0), ey(0.0, kStep);
  q.gradient.x() = (h_aug(xi + ex) - h_aug(xi - ex)) / (2.0 * kStep);
  q.gradient.y() = (h_aug(xi + ey) - h_aug(xi - ey)) / (2.0 * kStep);
  q.gradient.z() = w * center.gradient.dot(Vec2(-std::sin(state.theta), std::cos(state.theta)));
  q.dhdt_env = q.saturated ? 0.0 : -q.gradient.head<2>().dot(b.velocity_hint);
  return q;
}

double combine(std::span<const double> values, double rho) {
  if (values.empty()) throw std::invalid_argument("combine: needs at least one value");
  if (!(rho > 0.0)) throw std::invalid_argument("combine: rho must be positive");
  // Shift by the largest exponent, -rho (min h + 1), before summing.
  const double hmin = *std::min_element(values.begin(), values.end());
  double sum = 0.0;
  for (double h : values) sum += std::exp(-rho * (h - hmin));
  return -(1.0 / rho) * (std::log(sum) - rho * (hmin + 1.0)) - 1.0;
}

CombinedQuery combine_gradient(std::span<const double> values, std::span<const Eigen::VectorXd> gradients,
                               std::span<const double> dhdt_env, double rho) {
  if (values.size() != gradients.size() || values.size() != dhdt_env.size())
    throw std::invalid_argument("combine_gradient: inconsistent input sizes");
  CombinedQuery out;
  out.value = combine(values, rho);
  const double hmin = *std::min_element(values.begin(), values.end());
  out.weights.resize(values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.weights[i] = std::exp(-rho * (values[i] - hmin));
    total += out.weights[i];
  }
  out.gradient = Eigen::VectorXd::Zero(gradients.front().size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.weights[i] /= total;
    out.gradient += out.weights[i] * gradients[i];
    out.dhdt_env += out.weights[i] * dhdt_env[i];
  }
  return out;
}

CombinedQuery combine_gradient(std::span<const ObstacleBarrier> barriers, const Point2& xi, double rho,
                               double safety_radius, double now) {
  std::vector<double> values, env;
  std::vector<Eigen::VectorXd> grads;
  for (const auto& b : barriers) {
    const BarrierQuery q = barrier_query(b, xi, safety_radius, now);
    values.push_back(q.value);
    grads.emplace_back(q.gradient_pos);
    env.push_back(q.dhdt_env);
  }
  return combine_gradient(values, grads, env, rho);
}

std::vector<ObstacleBarrier> active_set(std::span<const ObstacleBarrier> barriers, const Point2& xi,
                                        double b_range, double safety_radius, double now) {
  if (!(b_range > 0.0)) throw std::invalid_argument("active_set: b_range must be positive");
  std::vector<ObstacleBarrier> out;
  for (const auto& b : barriers)
    if (barrier_query(b, xi, safety_radius, now).value <= b_range) out.push_back(b);
  return out;
}

ObstacleBarrier make_barrier(std::string id, std::span<const Point2> boundary, const KernelParams& kernel,
                             BarrierKind kind, const Vec2& velocity_hint, double fit_time) {
  ObstacleBarrier b;
  b.obstacle_id = std::move(id);
  b.model = std::make_shared<const GpdfModel>(GpdfModel::fit_with_jitter(boundary, kernel));
  b.velocity_hint = velocity_hint;
  b.last_refit_time = fit_time;
  b.kind = kind;
  return b;
}

}  // namespace mmp
