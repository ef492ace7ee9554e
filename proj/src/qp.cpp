#include "mmp/qp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mmp {

const char* to_string(RowKind kind) {
  switch (kind) {
    case RowKind::Safety: return "safety";
    case RowKind::Combined: return "combined";
    case RowKind::Modulation: return "modulation";
    case RowKind::Box: return "box";
  }
  return "?";
}

double QpProblem::min_slack(const Eigen::Vector2d& u) const {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) s = std::min(s, r.a.dot(u) - r.b);
  return s;
}

QpSolution solve_qp(const QpProblem& qp, int max_iterations) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr double kViolationTol = 1e-12;
  constexpr double kZeroStep = 1e-12;

  // Work on unit-normalized rows; degenerate rows are either vacuous or contradictory.
  std::vector<Eigen::Vector2d> normal;
  std::vector<double> rhs;
  std::vector<int> origin;
  QpSolution sol;
  for (int i = 0; i < static_cast<int>(qp.rows.size()); ++i) {
    const QpRow& r = qp.rows[i];
    if (!r.a.allFinite() || !std::isfinite(r.b)) throw QpError("QP row " + std::to_string(i) + " is not finite");
    const double n = r.a.norm();
    if (n < 1e-14) {
      if (r.b > kViolationTol) {
        sol.blocking_row = i;
        return sol;
      }
      continue;
    }
    normal.push_back(r.a / n);
    rhs.push_back(r.b / n);
    origin.push_back(i);
  }

  Eigen::Vector2d x = qp.u_nom;
  std::vector<int> active;  // indices into normal/rhs
  std::vector<double> mult;
  auto slack = [&](int i) { return normal[i].dot(x) - rhs[i]; };
  auto is_active = [&](int i) { return std::find(active.begin(), active.end(), i) != active.end(); };

  int iterations = 0;
  while (true) {
    int p = -1;
    double worst = -kViolationTol;
    for (int i = 0; i < static_cast<int>(normal.size()); ++i) {
      if (is_active(i)) continue;
      const double s = slack(i);
      if (s < worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) break;

    double u_plus = 0.0;
    while (true) {
      if (++iterations > max_iterations)
        throw QpError("QP active-set iteration cap (" + std::to_string(max_iterations) + ") exceeded with " +
                      std::to_string(active.size()) + " active rows");
      const Eigen::Vector2d& np = normal[p];
      const auto q = static_cast<Eigen::Index>(active.size());
      Eigen::Vector2d z = np;
      Eigen::VectorXd r(q);
      if (q > 0) {
        Eigen::MatrixXd N(2, q);
        for (Eigen::Index k = 0; k < q; ++k) N.col(k) = normal[active[k]];
        r = (N.transpose() * N).ldlt().solve(N.transpose() * np);
        z = np - N * r;
      }

      // Partial step: largest dual step keeping active multipliers non-negative.
      double t1 = kInf;
      int drop = -1;
      for (Eigen::Index k = 0; k < q; ++k) {
        if (r(k) > kZeroStep) {
          const double ratio = mult[k] / r(k);
          if (ratio < t1) {
            t1 = ratio;
            drop = static_cast<int>(k);
          }
        }
      }
      // Full step: makes row p active.
      const double zz = z.dot(np);
      const double t2 = z.norm() > kZeroStep && zz > kZeroStep ? -slack(p) / zz : kInf;
      const double t = std::min(t1, t2);

      if (t == kInf) {
        // n_p lies in the cone of the active normals with no room to move: infeasible.
        sol.feasible = false;
        sol.blocking_row = origin[p];
        sol.iterations = iterations;
        sol.u = x;
        return sol;
      }

      for (Eigen::Index k = 0; k < q; ++k) mult[k] -= t * r(k);
      u_plus += t;
      if (t2 < kInf) x += t * z;

      if (t == t2) {
        active.push_back(p);
        mult.push_back(u_plus);
        break;
      }
      active.erase(active.begin() + drop);
      mult.erase(mult.begin() + drop);
    }
  }

  sol.feasible = true;
  sol.u = x;
  sol.iterations = iterations;
  for (std::size_t k = 0; k < active.size(); ++k) {
    sol.active.push_back(origin[active[k]]);
    // Multipliers of the original (unnormalized) rows.
    sol.multipliers.push_back(mult[k] / qp.rows[origin[active[k]]].a.norm());
  }
  return sol;
}

}  // namespace mmp
