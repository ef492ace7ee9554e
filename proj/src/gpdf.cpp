#include "mmp/gpdf.hpp"

#include <algorithm>
#include <cmath>

namespace mmp {

void KernelParams::validate() const {
  if (!(sigma > 0.0)) throw FitError("kernel sigma must be positive");
  if (!(length_scale > 0.0)) throw FitError("kernel length scale must be positive");
  if (!(noise >= 0.0)) throw FitError("kernel noise must be non-negative");
}

GpdfModel GpdfModel::fit(std::span<const Point2> points, const KernelParams& kernel) {
  kernel.validate();
  if (points.empty()) throw FitError("GPDF fit needs at least one boundary point");

  GpdfModel model;
  model.kernel_ = kernel;
  model.points_.resize(2, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) throw FitError("GPDF fit received a non-finite point");
    model.points_.col(static_cast<Eigen::Index>(i)) = points[i];
    model.bounds_.extend(points[i]);
  }

  Eigen::MatrixXd k = model.gram();
  k.diagonal().array() += kernel.noise * kernel.noise;
  model.factor_.compute(k);
  if (model.factor_.info() != Eigen::Success)
    throw FitError("Gram matrix is not positive definite; retry with sigma_o jitter (e.g. 1e-6)");
  model.alpha_ = model.factor_.solve(Eigen::VectorXd::Ones(k.rows()));
  if (!model.alpha_.allFinite())
    throw FitError("GPDF weights are not finite; retry with sigma_o jitter (e.g. 1e-6)");
  return model;
}

GpdfModel GpdfModel::fit_with_jitter(std::span<const Point2> points, KernelParams kernel) {
  try {
    return fit(points, kernel);
  } catch (const FitError&) {
    kernel.noise = std::max(kernel.noise, 1e-6);
    return fit(points, kernel);
  }
}

Eigen::MatrixXd GpdfModel::gram() const {
  const Eigen::Index n = points_.cols();
  const double s2 = kernel_.sigma * kernel_.sigma;
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = s2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = s2 * std::exp(-(points_.col(i) - points_.col(j)).norm() / kernel_.length_scale);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

double GpdfModel::latent(const Point2& p) const {
  const Eigen::ArrayXd r = (points_.colwise() - p).colwise().norm().transpose().array();
  const double s2 = kernel_.sigma * kernel_.sigma;
  return s2 * ((-r / kernel_.length_scale).exp().matrix().dot(alpha_));
}

double GpdfModel::distance(const Point2& p) const {
  const double s2 = kernel_.sigma * kernel_.sigma;
  const double o = std::clamp(latent(p), kLatentFloor, s2);
  return -kernel_.length_scale * std::log(o / s2);
}

Vec2 GpdfModel::gradient(const Point2& p) const { return evaluate(p).gradient; }

GpdfSample GpdfModel::evaluate(const Point2& p) const {
  const double L = kernel_.length_scale;
  const double s2 = kernel_.sigma * kernel_.sigma;
  const Eigen::Matrix2Xd diff = (-points_).colwise() + p;  // p - p_i
  const Eigen::ArrayXd r = diff.colwise().norm().transpose().array();
  const Eigen::ArrayXd wk = (-r / L).exp() * alpha_.array();  // alpha_i exp(-r_i / L)

  GpdfSample out;
  out.latent = s2 * wk.sum();
  const double o = std::clamp(out.latent, kLatentFloor, s2);
  out.distance = -L * std::log(o / s2);
  if (out.latent <= kLatentFloor) {
    out.saturated = true;
    return out;
  }

  // d/dp k(p, p_i) = -(sigma^2 / L) exp(-r_i / L) (p - p_i) / r_i; zero at r_i ~ 0.
  const Eigen::ArrayXd scale = (r > 1e-9).select(wk / r.max(1e-300), 0.0);
  const Vec2 dlatent = -(s2 / L) * (diff * scale.matrix());
  out.gradient = (-L / out.latent) * dlatent;
  return out;
}

double GpdfModel::variance(const Point2& p) const {
  const Eigen::ArrayXd r = (points_.colwise() - p).colwise().norm().transpose().array();
  const double s2 = kernel_.sigma * kernel_.sigma;
  const Eigen::VectorXd kp = (s2 * (-r / kernel_.length_scale).exp()).matrix();
  return s2 - kp.dot(factor_.solve(kp));
}

double GpdfModel::residual() const {
  Eigen::MatrixXd k = gram();
  k.diagonal().array() += kernel_.noise * kernel_.noise;
  return (k * alpha_ - Eigen::VectorXd::Ones(alpha_.size())).cwiseAbs().maxCoeff();
}

std::vector<Point2> GpdfModel::points() const {
  std::vector<Point2> out(static_cast<std::size_t>(points_.cols()));
  for (Eigen::Index i = 0; i < points_.cols(); ++i) out[static_cast<std::size_t>(i)] = points_.col(i);
  return out;
}

}  // namespace mmp
