#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "aacc/dynamics.hpp"
#include "aacc/types.hpp"

namespace aacc {

/// Steering carries no weight in the follower objective; a small
/// regularization keeps the control-cost block invertible.
inline constexpr double kSteerRegularization = 1e-6;

/// Value-function states of the backward pass: M_n (quadratic), O_n (linear
/// drift from the leader's announced inputs and the target offset), plus the
/// per-step solve operator W_n^{-1} C_n^T needed to re-expand the leader
/// dependence when the planner stacks the constraint.
struct RiccatiState {
  std::vector<Matrix5d> m;                             ///< size N+1, m[N] = 0
  std::vector<Vector5d> o;                             ///< size N+1, o[N] = 0
  std::vector<Eigen::Matrix<double, 2, 5>> control_solve;  ///< size N
  std::vector<double> u_ev_ref;                        ///< size N
  int horizon = 0;
};

/// Per-step affine follower feedback u_cv = J x + G u_ev + F + E.
struct ReactionLaw {
  std::vector<Eigen::Matrix<double, 2, 5>> j;
  std::vector<Eigen::Vector2d> g;
  std::vector<Eigen::Vector2d> f;  ///< desired-state feedforward
  std::vector<Eigen::Vector2d> e;  ///< propagated influence of future u_ev
  int horizon = 0;
};

/// Backward dynamic programming over the follower's finite-horizon problem
/// with stage cost (x - x_des)' Q (x - x_des) + u' R u, Q = diag(b1, 0, b2,
/// b4, b5), R = diag(b3, eps), and zero terminal cost.
///
/// u_ev_ref supplies the leader inputs the O-recursion is driven by
/// (previous plan as warm start); empty means zeros. Throws
/// std::runtime_error if the control-cost block is not invertible after
/// regularization.
std::pair<ReactionLaw, RiccatiState> backward_pass(
    const StyleParams& beta, std::span<const LinearDynamics> dyn_seq,
    const CvDesired& desired, std::span<const double> u_ev_ref = {});

/// Evaluate the follower's best response at step n. Throws
/// std::out_of_range outside [0, N).
CvControl estimate_reaction(const ReactionLaw& law, const SystemState& x,
                            const EvControl& u_ev, int n);

/// Follower state weight diag(b1, 0, b2, b4, b5).
Matrix5d follower_state_weight(const StyleParams& beta);

/// Follower control weight diag(b3, eps).
Eigen::Matrix2d follower_control_weight(const StyleParams& beta);

/// Stacked response of the follower inputs to the leader's input sequence:
/// the 2N x N matrix mapping U_EV to the part of U_CV that travels through
/// the O-chain. Row block n depends only on inputs after step n.
Eigen::MatrixXd build_uev_response(std::span<const LinearDynamics> dyn_seq,
                                   const RiccatiState& riccati);

}  // namespace aacc
