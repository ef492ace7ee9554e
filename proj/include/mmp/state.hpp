#pragma once

#include "mmp/geometry.hpp"

#include <Eigen/Core>

#include <cmath>

namespace mmp {

enum class RobotModel { Shifted, Standard };

/// Unicycle pose of the wheel axis. For the shifted model the controlled point of
/// interest sits `offset` metres ahead along the heading.
struct RobotState {
  double px = 0.0;
  double py = 0.0;
  double theta = 0.0;
  RobotModel model = RobotModel::Shifted;
  double offset = 0.2;

  double shift() const { return model == RobotModel::Shifted ? offset : 0.0; }
  Point2 pose_position() const { return {px, py}; }
  Point2 point_of_interest() const {
    return {px + shift() * std::cos(theta), py + shift() * std::sin(theta)};
  }
  Eigen::Vector3d vector() const { return {px, py, theta}; }
};

struct ControlInput {
  double v = 0.0;
  double omega = 0.0;

  Eigen::Vector2d vector() const { return {v, omega}; }
};

}  // namespace mmp
