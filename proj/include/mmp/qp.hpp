#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace mmp {

class QpError : public std::runtime_error {
public:
  explicit QpError(const std::string& what) : std::runtime_error(what) {}
};

enum class RowKind { Safety, Combined, Modulation, Box };

const char* to_string(RowKind kind);

/// Linear inequality a . u >= b.
struct QpRow {
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  double b = 0.0;
  RowKind kind = RowKind::Box;
  /// Index of the originating barrier for safety rows, -1 otherwise.
  int source = -1;
};

/// min |u - u_nom|^2 subject to every row.
struct QpProblem {
  Eigen::Vector2d u_nom = Eigen::Vector2d::Zero();
  std::vector<QpRow> rows;

  /// min_i (a_i . u - b_i); non-negative when u satisfies every row.
  double min_slack(const Eigen::Vector2d& u) const;
};

struct QpSolution {
  bool feasible = false;
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  /// Rows in the final active set with their Lagrange multipliers.
  std::vector<int> active;
  std::vector<double> multipliers;
  int iterations = 0;
  /// For infeasible problems: the row that could not be added.
  int blocking_row = -1;
};

/// Dual active-set solver (Goldfarb-Idnani with identity Hessian). Starts at the
/// unconstrained minimizer and adds violated rows until primal feasible.
/// Infeasibility is reported in the result; iteration-cap overruns throw QpError.
QpSolution solve_qp(const QpProblem& qp, int max_iterations = 100);

}  // namespace mmp
