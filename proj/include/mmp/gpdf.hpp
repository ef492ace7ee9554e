#pragma once

#include "mmp/geometry.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmp {

class FitError : public std::runtime_error {
public:
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

/// Matern nu=1/2 kernel k(d) = sigma^2 exp(-d / L) with observation noise sigma_o.
struct KernelParams {
  double sigma = 1.0;
  double length_scale = 0.2;
  double noise = 0.0;

  void validate() const;
};

/// Distance, gradient and latent value from a single pass over the training set.
struct GpdfSample {
  double distance = 0.0;
  Vec2 gradient = Vec2::Zero();
  double latent = 0.0;
  /// Latent at the clamp floor: distance is capped and gradient is reported as zero.
  bool saturated = false;
};

/// Gaussian-process distance field learned from boundary points. Immutable once fit.
class GpdfModel {
public:
  /// Lower clamp on the latent mean; caps distance at L * ln(sigma^2 / kLatentFloor).
  static constexpr double kLatentFloor = 1e-12;

  /// Solves (K + sigma_o^2 I) alpha = 1 by Cholesky. Throws FitError when the
  /// Gram matrix is not numerically positive definite (e.g. repeated points, sigma_o = 0).
  static GpdfModel fit(std::span<const Point2> points, const KernelParams& kernel);

  /// fit(), retrying once with sigma_o = 1e-6 if the first factorization fails.
  static GpdfModel fit_with_jitter(std::span<const Point2> points, KernelParams kernel);

  double latent(const Point2& p) const;
  double distance(const Point2& p) const;
  Vec2 gradient(const Point2& p) const;
  GpdfSample evaluate(const Point2& p) const;

  /// Posterior variance of the latent field at p.
  double variance(const Point2& p) const;

  /// max |(K + sigma_o^2 I) alpha - 1|, recomputed from the stored points.
  double residual() const;

  const KernelParams& kernel() const { return kernel_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  std::size_t size() const { return static_cast<std::size_t>(points_.cols()); }
  std::vector<Point2> points() const;
  /// Axis-aligned bounds of the training points.
  Eigen::AlignedBox2d bounds() const { return bounds_; }

private:
  GpdfModel() = default;
  Eigen::MatrixXd gram() const;

  KernelParams kernel_;
  Eigen::Matrix2Xd points_;
  Eigen::VectorXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
  Eigen::AlignedBox2d bounds_;
};

}  // namespace mmp
