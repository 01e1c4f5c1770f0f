#pragma once

#include <Eigen/Core>

namespace aacc {

enum class SolveStatus { kOptimal, kInfeasibleRelaxed, kFailed };

/// Dense convex QP over z = (X, U):
///   min 1/2 z' H z + q' z + const
///   s.t. eq_lhs z = eq_rhs
///        input_lower <= z[tail] <= input_upper      (hard box on U)
///        speed_lower <= speed_rows * z[tail] <= speed_upper
///
/// The box and the speed rows act on the trailing input_dim() entries of z.
/// feasible_start must satisfy the equalities and the input box; if it
/// violates the speed rows the solver relaxes them with a quadratic penalty
/// and reports kInfeasibleRelaxed.
struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  double constant = 0.0;
  Eigen::MatrixXd eq_lhs;
  Eigen::VectorXd eq_rhs;
  Eigen::VectorXd input_lower;
  Eigen::VectorXd input_upper;
  Eigen::MatrixXd speed_rows;
  Eigen::VectorXd speed_lower;
  Eigen::VectorXd speed_upper;
  Eigen::VectorXd feasible_start;

  int dim() const { return static_cast<int>(hessian.rows()); }
  int input_dim() const { return static_cast<int>(input_lower.size()); }
};

struct QpSolution {
  Eigen::VectorXd z;
  double objective = 0.0;  ///< includes QpProblem::constant
  SolveStatus status = SolveStatus::kFailed;
  double solve_time = 0.0;  ///< seconds, wall clock
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Null-space elimination of the equalities followed by a primal active-set
/// iteration on the reduced strictly convex problem.
QpSolution solve(const QpProblem& problem);

/// Penalty weight applied to relaxed speed rows.
inline constexpr double kSoftSpeedPenalty = 1e4;

}  // namespace aacc
