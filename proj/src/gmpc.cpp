#include "aacc/gmpc.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include <Eigen/Dense>

namespace aacc {

CostTerms build_cost(const EvObjective& obj, int n_steps) {
  if (n_steps < 1) {
    throw std::invalid_argument("build_cost: horizon must be >= 1");
  }
  const int nx = 5 * (n_steps + 1);
  const int nz = nx + n_steps;
  Matrix5d q_ev = Matrix5d::Zero();
  q_ev(0, 0) = obj.theta1;
  q_ev(1, 1) = obj.theta2;
  Vector5d x_des = Vector5d::Zero();
  x_des(0) = obj.delta_x_des;
  x_des(1) = obj.v_des;

  CostTerms ct;
  ct.hessian = Eigen::MatrixXd::Zero(nz, nz);
  ct.linear = Eigen::VectorXd::Zero(nz);
  for (int n = 0; n < n_steps; ++n) {
    ct.hessian.block<5, 5>(5 * n, 5 * n) = q_ev;
    ct.linear.segment<5>(5 * n) = -q_ev * x_des;
    ct.hessian(nx + n, nx + n) = obj.theta3;
  }
  ct.constant = 0.5 * n_steps * x_des.dot(q_ev * x_des);
  return ct;
}

namespace {

// Dynamics with the follower reaction substituted in: per step the
// closed-loop state map, the full map from every leader input (the reaction
// at step n responds to later inputs through the value-function drift), and
// the constant offset.
struct SubstitutedDynamics {
  std::vector<Matrix5d> a_bar;               // A_n + C_n J_n
  std::vector<Eigen::MatrixXd> input_map;    // 5 x N per step
  std::vector<Vector5d> offset;              // C_n * f_total_n
  std::vector<Eigen::Vector2d> f_total;      // reaction offset per step
  Eigen::MatrixXd uev_response;              // 2N x N
};

SubstitutedDynamics substitute_reaction(std::span<const LinearDynamics> dyn_seq,
                                        const ReactionLaw& law,
                                        const RiccatiState& riccati) {
  const int n_steps = law.horizon;
  SubstitutedDynamics sd;
  sd.uev_response = build_uev_response(dyn_seq, riccati);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n_steps);
  for (int i = 0; i < n_steps; ++i) {
    w(i) = riccati.u_ev_ref[i];
  }
  sd.a_bar.resize(n_steps);
  sd.input_map.resize(n_steps);
  sd.offset.resize(n_steps);
  sd.f_total.resize(n_steps);
  for (int n = 0; n < n_steps; ++n) {
    const auto& d = dyn_seq[n];
    // law.e was produced with the warm-start inputs; strip that part so the
    // input dependence lives entirely in the response matrix.
    sd.f_total[n] = law.f[n] + law.e[n] -
                    sd.uev_response.block(2 * n, 0, 2, n_steps) * w;
    sd.a_bar[n] = d.a_d + d.c_d * law.j[n];
    Eigen::MatrixXd im = d.c_d * sd.uev_response.block(2 * n, 0, 2, n_steps);
    im.col(n) += d.b_d + d.c_d * law.g[n];
    sd.input_map[n] = im;
    sd.offset[n] = d.c_d * sd.f_total[n];
  }
  return sd;
}

std::vector<Vector5d> roll_states(const SubstitutedDynamics& sd,
                                  const SystemState& x0,
                                  const Eigen::VectorXd& u) {
  const int n_steps = static_cast<int>(sd.a_bar.size());
  std::vector<Vector5d> xs(n_steps + 1);
  xs[0] = x0.vec();
  for (int n = 0; n < n_steps; ++n) {
    xs[n + 1] = sd.a_bar[n] * xs[n] + sd.input_map[n] * u + sd.offset[n];
  }
  return xs;
}

EqualityConstraint constraint_from(const SubstitutedDynamics& sd,
                                   const SystemState& x0) {
  const int n_steps = static_cast<int>(sd.a_bar.size());
  const int nx = 5 * (n_steps + 1);
  const int nz = nx + n_steps;
  EqualityConstraint eq;
  eq.lhs = Eigen::MatrixXd::Zero(nx, nz);
  eq.rhs = Eigen::VectorXd::Zero(nx);
  eq.lhs.topLeftCorner<5, 5>().setIdentity();
  eq.rhs.head<5>() = x0.vec();
  for (int n = 0; n < n_steps; ++n) {
    const int row = 5 * (n + 1);
    eq.lhs.block<5, 5>(row, row).setIdentity();
    eq.lhs.block<5, 5>(row, 5 * n) = -sd.a_bar[n];
    eq.lhs.block(row, nx, 5, n_steps) = -sd.input_map[n];
    eq.rhs.segment<5>(row) = sd.offset[n];
  }
  return eq;
}

}  // namespace

EqualityConstraint build_dynamics_constraint(
    std::span<const LinearDynamics> dyn_seq, const ReactionLaw& law,
    const RiccatiState& riccati, const SystemState& x0) {
  if (static_cast<int>(dyn_seq.size()) != law.horizon ||
      riccati.horizon != law.horizon) {
    throw std::invalid_argument(
        "build_dynamics_constraint: horizon mismatch");
  }
  return constraint_from(substitute_reaction(dyn_seq, law, riccati), x0);
}

BoundSet build_bounds(double a_min, double a_max, double v0_ev, double v_lim,
                      double dt, int n_steps) {
  if (a_min >= a_max) {
    throw std::invalid_argument("build_bounds: inverted acceleration bounds");
  }
  if (v0_ev < 0.0 || v0_ev > v_lim) {
    throw std::invalid_argument("build_bounds: v0 outside [0, v_lim]");
  }
  BoundSet b;
  b.u_min = Eigen::VectorXd::Constant(n_steps, a_min);
  b.u_max = Eigen::VectorXd::Constant(n_steps, a_max);
  b.speed_rows = Eigen::MatrixXd::Zero(n_steps, n_steps);
  for (int i = 0; i < n_steps; ++i) {
    for (int j = 0; j <= i; ++j) {
      b.speed_rows(i, j) = dt;
    }
  }
  b.v_min = Eigen::VectorXd::Constant(n_steps, -v0_ev);
  b.v_max = Eigen::VectorXd::Constant(n_steps, v_lim - v0_ev);
  return b;
}

namespace {

struct AssembledCycle {
  QpProblem qp;
  SubstitutedDynamics sd;
  ReactionLaw law;
};

AssembledCycle assemble_cycle(const SystemState& x0, const StyleParams& beta,
                              const EvObjective& obj, const PlanConfig& cfg,
                              std::span<const double> warm_u_ev) {
  const int n_steps = cfg.horizon;
  std::vector<LinearDynamics> dyn_seq(n_steps, linearize(x0, cfg.geom, cfg.dt));
  auto [law, riccati] = backward_pass(beta, dyn_seq, cfg.cv_desired, warm_u_ev);
  AssembledCycle out;
  out.sd = substitute_reaction(dyn_seq, law, riccati);
  out.law = std::move(law);
  const CostTerms ct = build_cost(obj, n_steps);
  const EqualityConstraint eq = constraint_from(out.sd, x0);
  const BoundSet bounds =
      build_bounds(cfg.a_min, cfg.a_max, x0.v_ev, cfg.v_lim, cfg.dt, n_steps);

  QpProblem& qp = out.qp;
  qp.hessian = ct.hessian;
  qp.linear = ct.linear;
  qp.constant = ct.constant;
  qp.eq_lhs = eq.lhs;
  qp.eq_rhs = eq.rhs;
  qp.input_lower = bounds.u_min;
  qp.input_upper = bounds.u_max;
  qp.speed_rows = bounds.speed_rows;
  qp.speed_lower = bounds.v_min;
  qp.speed_upper = bounds.v_max;

  // Zero input (clamped into the box) rolled through the substituted
  // dynamics is always feasible for the equalities, the box, and the
  // cumulative speed rows.
  Eigen::VectorXd u0 = Eigen::VectorXd::Constant(
      n_steps, std::clamp(0.0, cfg.a_min, cfg.a_max));
  const auto xs = roll_states(out.sd, x0, u0);
  qp.feasible_start = Eigen::VectorXd::Zero(5 * (n_steps + 1) + n_steps);
  for (int n = 0; n <= n_steps; ++n) {
    qp.feasible_start.segment<5>(5 * n) = xs[n];
  }
  qp.feasible_start.tail(n_steps) = u0;
  return out;
}

}  // namespace

QpProblem assemble_problem(const SystemState& x0, const StyleParams& beta,
                           const EvObjective& obj, const PlanConfig& cfg,
                           std::span<const double> warm_u_ev) {
  return assemble_cycle(x0, beta, obj, cfg, warm_u_ev).qp;
}

PlanResult plan(const SystemState& x0, const StyleParams& beta,
                const EvObjective& obj, const PlanConfig& cfg,
                std::span<const double> warm_u_ev) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n_steps = cfg.horizon;
  const AssembledCycle cycle = assemble_cycle(x0, beta, obj, cfg, warm_u_ev);
  const QpSolution sol = solve(cycle.qp);

  PlanResult result;
  result.status = sol.status;
  if (sol.status != SolveStatus::kFailed) {
    result.u_ev = sol.z.tail(n_steps);
    result.x_seq.resize(n_steps + 1);
    for (int n = 0; n <= n_steps; ++n) {
      result.x_seq[n] = SystemState::from_vec(sol.z.segment<5>(5 * n));
    }
    result.u_cv_pred.resize(n_steps);
    for (int n = 0; n < n_steps; ++n) {
      const Eigen::Vector2d u_cv =
          cycle.law.j[n] * sol.z.segment<5>(5 * n) +
          cycle.law.g[n] * result.u_ev(n) +
          cycle.sd.uev_response.block(2 * n, 0, 2, n_steps) * result.u_ev +
          cycle.sd.f_total[n];
      result.u_cv_pred[n] = CvControl::from_vec(u_cv);
    }
    result.cost = sol.objective;
  }
  result.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

PlanResult GmpcPlanner::plan(const SystemState& x0, const StyleParams& beta,
                             const EvObjective& obj) {
  std::vector<double> warm;
  if (warm_.size() == cfg_.horizon) {
    warm.assign(warm_.data(), warm_.data() + warm_.size());
  }
  PlanResult res = aacc::plan(x0, beta, obj, cfg_, warm);
  if (res.status != SolveStatus::kFailed && res.u_ev.size() == cfg_.horizon) {
    // Shift the solution one step for the next cycle.
    warm_.resize(cfg_.horizon);
    for (int i = 0; i + 1 < cfg_.horizon; ++i) {
      warm_(i) = res.u_ev(i + 1);
    }
    warm_(cfg_.horizon - 1) = res.u_ev(cfg_.horizon - 1);
  } else {
    warm_.resize(0);
  }
  return res;
}

}  // namespace aacc
