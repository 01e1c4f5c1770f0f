#include "aacc/cv_reaction.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace aacc {

Matrix5d follower_state_weight(const StyleParams& beta) {
  Matrix5d q = Matrix5d::Zero();
  q(0, 0) = beta.beta1();
  q(2, 2) = beta.beta2();
  q(3, 3) = beta.beta4();
  q(4, 4) = beta.beta5();
  return q;
}

Eigen::Matrix2d follower_control_weight(const StyleParams& beta) {
  Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
  r(0, 0) = beta.beta3();
  r(1, 1) = kSteerRegularization;
  return r;
}

std::pair<ReactionLaw, RiccatiState> backward_pass(
    const StyleParams& beta, std::span<const LinearDynamics> dyn_seq,
    const CvDesired& desired, std::span<const double> u_ev_ref) {
  const int n_steps = static_cast<int>(dyn_seq.size());
  const Matrix5d q = follower_state_weight(beta);
  const Eigen::Matrix2d r = follower_control_weight(beta);
  const Vector5d x_des = desired.vec();

  RiccatiState ric;
  ric.horizon = n_steps;
  ric.m.assign(n_steps + 1, Matrix5d::Zero());
  ric.o.assign(n_steps + 1, Vector5d::Zero());
  ric.control_solve.assign(n_steps, Eigen::Matrix<double, 2, 5>::Zero());
  ric.u_ev_ref.assign(n_steps, 0.0);
  for (int i = 0; i < static_cast<int>(u_ev_ref.size()) && i < n_steps; ++i) {
    ric.u_ev_ref[i] = u_ev_ref[i];
  }

  ReactionLaw law;
  law.horizon = n_steps;
  law.j.assign(n_steps, Eigen::Matrix<double, 2, 5>::Zero());
  law.g.assign(n_steps, Eigen::Vector2d::Zero());
  law.f.assign(n_steps, Eigen::Vector2d::Zero());
  law.e.assign(n_steps, Eigen::Vector2d::Zero());

  for (int n = n_steps - 1; n >= 0; --n) {
    const Matrix5d& a = dyn_seq[n].a_d;
    const Vector5d& b = dyn_seq[n].b_d;
    const Eigen::Matrix<double, 5, 2>& c = dyn_seq[n].c_d;
    const Matrix5d& m_next = ric.m[n + 1];
    const Vector5d& o_next = ric.o[n + 1];

    const Eigen::Matrix2d w = r + c.transpose() * m_next * c;
    const double det = w.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-300) {
      throw std::runtime_error(
          "backward_pass: singular control-cost block; check beta");
    }
    const Eigen::Matrix2d w_inv = w.inverse();
    const Eigen::Matrix<double, 2, 5> cs = w_inv * c.transpose();
    const Eigen::Matrix<double, 2, 5> cm = cs * m_next;

    law.j[n] = -cm * a;
    law.g[n] = -cm * b;
    law.f[n] = cm * x_des;
    law.e[n] = -cs * o_next;
    ric.control_solve[n] = cs;

    // Riccati update; the gain-weighted form keeps M symmetric.
    const Eigen::Matrix<double, 2, 5> cma = cm * a;
    Matrix5d m_new = q + a.transpose() * m_next * a -
                     cma.transpose() * w * cma;
    ric.m[n] = 0.5 * (m_new + m_new.transpose());

    // Linear drift: the target offset under the open dynamics plus the
    // announced leader input, filtered by the closed-loop transition.
    const Vector5d delta = (a - Matrix5d::Identity()) * x_des +
                           b * ric.u_ev_ref[n];
    const Matrix5d pi = Matrix5d::Identity() - m_next * c * cs;
    ric.o[n] = a.transpose() * (pi * (m_next * delta + o_next));
  }
  return {std::move(law), std::move(ric)};
}

CvControl estimate_reaction(const ReactionLaw& law, const SystemState& x,
                            const EvControl& u_ev, int n) {
  if (n < 0 || n >= law.horizon) {
    throw std::out_of_range("estimate_reaction: step outside horizon");
  }
  const Eigen::Vector2d u =
      law.j[n] * x.vec() + law.g[n] * u_ev.a_ev + law.f[n] + law.e[n];
  return CvControl::from_vec(u);
}

Eigen::MatrixXd build_uev_response(std::span<const LinearDynamics> dyn_seq,
                                   const RiccatiState& riccati) {
  const int n_steps = riccati.horizon;
  Eigen::MatrixXd response = Eigen::MatrixXd::Zero(2 * n_steps, n_steps);
  if (n_steps == 0) {
    return response;
  }
  // S_k = A_k^T (I - M_{k+1} C_k W_k^{-1} C_k^T): the transition of the
  // linear value-function term. Row block n collects, for each later input
  // j, -W_n^{-1} C_n^T S_{n+1} ... S_j M_{j+1} B_j.
  std::vector<Matrix5d> s(n_steps);
  for (int k = 0; k < n_steps; ++k) {
    const Matrix5d pi = Matrix5d::Identity() -
                        riccati.m[k + 1] * dyn_seq[k].c_d *
                            riccati.control_solve[k];
    s[k] = dyn_seq[k].a_d.transpose() * pi;
  }
  for (int n = 0; n < n_steps; ++n) {
    Matrix5d chain = Matrix5d::Identity();
    for (int j = n + 1; j < n_steps; ++j) {
      chain = chain * s[j];
      response.block<2, 1>(2 * n, j) =
          -riccati.control_solve[n] *
          (chain * (riccati.m[j + 1] * dyn_seq[j].b_d));
    }
  }
  return response;
}

}  // namespace aacc
