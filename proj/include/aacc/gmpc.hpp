#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "aacc/cv_reaction.hpp"
#include "aacc/dynamics.hpp"
#include "aacc/qp_solver.hpp"
#include "aacc/types.hpp"

namespace aacc {

/// Leader objective weights and targets.
struct EvObjective {
  double theta1 = 10.0;        ///< safety weight on (delta_x - des)^2
  double theta2 = 10.0;        ///< efficiency weight on (v_ev - des)^2
  double theta3 = 1.0;         ///< comfort weight on a_ev^2
  double delta_x_des = 25.0;   ///< desired clearance to the CV [m]
  double v_des = 18.0;         ///< desired speed [m/s]
};

struct CostTerms {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  double constant = 0.0;
};

/// Block-diagonal cost over z = (x_0..x_N, u_0..u_{N-1}): stage weights on
/// the first N states, zero terminal block, theta3 on each input. The
/// constant completes the expanded quadratic so that evaluating
/// 1/2 z'Hz + q'z + c reproduces the stage-wise objective exactly.
CostTerms build_cost(const EvObjective& obj, int n_steps);

struct EqualityConstraint {
  Eigen::MatrixXd lhs;
  Eigen::VectorXd rhs;
};

/// Stacked interaction dynamics with the follower's reaction eliminated:
/// rows pin x_0 to the measured state and each x_{n+1} to
/// A x_n + B u_n + C u_cv,n with u_cv,n = J x_n + G u_n + (response to
/// later inputs) + affine offsets.
EqualityConstraint build_dynamics_constraint(
    std::span<const LinearDynamics> dyn_seq, const ReactionLaw& law,
    const RiccatiState& riccati, const SystemState& x0);

struct BoundSet {
  Eigen::VectorXd u_min;
  Eigen::VectorXd u_max;
  Eigen::MatrixXd speed_rows;  ///< lower-triangular dt accumulation
  Eigen::VectorXd v_min;
  Eigen::VectorXd v_max;
};

/// Input box and cumulative speed-change rows keeping v_ev within
/// [0, v_lim]. Throws std::invalid_argument on inverted bounds.
BoundSet build_bounds(double a_min, double a_max, double v0_ev, double v_lim,
                      double dt, int n_steps);

struct PlanConfig {
  int horizon = 10;
  double dt = 0.1;
  double a_min = -3.5;
  double a_max = 4.0;
  double v_lim = 25.0;
  VehicleGeometry geom{};
  CvDesired cv_desired{};
};

struct PlanResult {
  Eigen::VectorXd u_ev;               ///< N accelerations
  std::vector<SystemState> x_seq;     ///< N+1 predicted states
  std::vector<CvControl> u_cv_pred;   ///< N predicted follower reactions
  double cost = 0.0;
  double solve_time = 0.0;            ///< seconds
  SolveStatus status = SolveStatus::kFailed;
};

/// Assemble the full problem for one planning cycle (used by plan and by
/// the tests that cross-check the stacked pieces).
QpProblem assemble_problem(const SystemState& x0, const StyleParams& beta,
                           const EvObjective& obj, const PlanConfig& cfg,
                           std::span<const double> warm_u_ev = {});

/// One receding-horizon cycle: follower backward pass, constraint assembly,
/// QP solve. warm_u_ev seeds the follower O-recursion (previous solution).
PlanResult plan(const SystemState& x0, const StyleParams& beta,
                const EvObjective& obj, const PlanConfig& cfg,
                std::span<const double> warm_u_ev = {});

/// Planning session holding the warm start between cycles.
class GmpcPlanner {
 public:
  explicit GmpcPlanner(const PlanConfig& cfg = {}) : cfg_(cfg) {}

  PlanResult plan(const SystemState& x0, const StyleParams& beta,
                  const EvObjective& obj);
  void reset() { warm_.resize(0); }
  const PlanConfig& config() const { return cfg_; }

 private:
  PlanConfig cfg_;
  Eigen::VectorXd warm_;
};

}  // namespace aacc
