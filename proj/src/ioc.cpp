#include "aacc/ioc.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <string>

#include <Eigen/Dense>

namespace aacc {

LongFeatureGradients longitudinal_gradients(const TrajectorySample& sample,
                                            const CvDesired& desired) {
  LongFeatureGradients g;
  // Features: (delta_x - dx_des)^2, (v_cv - v_des)^2, a_cv^2.
  g.d_state(0, 0) = 2.0 * (sample.state.delta_x - desired.delta_x_des);
  g.d_state(1, 2) = 2.0 * (sample.state.v_cv - desired.v_des);
  g.d_control(2) = 2.0 * sample.u_cv.a_cv;
  return g;
}

LatFeatureGradients lateral_gradients(const TrajectorySample& sample,
                                      const CvDesired& desired) {
  LatFeatureGradients g;
  // Features: (y_cv - y_des)^2, psi_cv^2. Steering carries no feature cost.
  g.d_state(0, 0) = 2.0 * (sample.state.y_cv - desired.y_des);
  g.d_state(1, 1) = 2.0 * (sample.state.psi_cv - desired.psi_des);
  return g;
}

namespace {

// Assemble K = [I 0; -(A^T)^-1 * gradX^T, (A^T)^-1] and the stationarity
// row L = [gradU^T, c^T]; the residual constrains gamma_{n+1} = K ... gamma_0.
RecursionMatrices assemble(const Eigen::MatrixXd& a_t_inv,
                           const Eigen::MatrixXd& grad_state,
                           const Eigen::VectorXd& grad_control,
                           const Eigen::VectorXd& c) {
  const int nf = static_cast<int>(grad_state.rows());
  const int nx = static_cast<int>(grad_state.cols());
  RecursionMatrices rec;
  rec.k = Eigen::MatrixXd::Zero(nf + nx, nf + nx);
  rec.k.topLeftCorner(nf, nf).setIdentity();
  rec.k.bottomLeftCorner(nx, nf) = -a_t_inv * grad_state.transpose();
  rec.k.bottomRightCorner(nx, nx) = a_t_inv;
  rec.l_row.resize(nf + nx);
  rec.l_row.head(nf) = grad_control.transpose();
  rec.l_row.tail(nx) = c.transpose();
  return rec;
}

}  // namespace

RecursionMatrices longitudinal_recursion(const TrajectorySample& sample,
                                         const CvDesired& desired,
                                         const LongitudinalDynamics& dyn) {
  const LongFeatureGradients g = longitudinal_gradients(sample, desired);
  const Eigen::Matrix3d a_t_inv = dyn.a.transpose().inverse();
  // The EV-speed co-state is structurally unobservable: no feature weights
  // v_ev, the stationarity row reads only the v_cv co-state, and (A^T)^-1
  // never maps it into the other components. Carrying it would leave the
  // accumulator permanently rank deficient, so the recursion runs on the
  // (delta_x, v_cv) co-state block.
  Eigen::Matrix2d a_red;
  a_red << a_t_inv(0, 0), a_t_inv(0, 2), a_t_inv(2, 0), a_t_inv(2, 2);
  Eigen::MatrixXd grad_red(3, 2);
  grad_red.col(0) = g.d_state.col(0);
  grad_red.col(1) = g.d_state.col(2);
  Eigen::Vector2d c_red(dyn.c(0), dyn.c(2));
  return assemble(a_red, grad_red, g.d_control, c_red);
}

RecursionMatrices lateral_recursion(const TrajectorySample& sample,
                                    const CvDesired& desired,
                                    const LateralDynamics& dyn) {
  const LatFeatureGradients g = lateral_gradients(sample, desired);
  const Eigen::Matrix2d a_t_inv = dyn.a.transpose().inverse();
  return assemble(a_t_inv, g.d_state, g.d_control, dyn.c);
}

void recursion_step(IocState& st, const RecursionMatrices& rec) {
  st.k_chain = rec.k * st.k_chain;
  const Eigen::RowVectorXd row = rec.l_row * st.k_chain;
  st.p_accum += row.transpose() * row;
  st.n += 1;
}

std::optional<Eigen::VectorXd> solve_constrained_ls(const Eigen::MatrixXd& p,
                                                    double scale) {
  const int d = static_cast<int>(p.rows());
  // The accumulator's magnitude grows with the recursion chain; normalizing
  // leaves the constrained minimizer unchanged and keeps the conditioning
  // test meaningful.
  const double p_scale = p.lpNorm<Eigen::Infinity>();
  if (!(p_scale > 0.0) || !std::isfinite(p_scale)) {
    return std::nullopt;
  }
  const Eigen::MatrixXd pn = p / p_scale;

  // Stationarity of the Lagrangian joined with the scale constraint:
  // [2P e^T; e 0] [gamma; mult] = [0; scale]. Rank deficiency means the
  // data has not excited every direction yet; the caller keeps streaming.
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(d + 1, d + 1);
  aug.topLeftCorner(d, d) = 2.0 * pn;
  aug(d, 0) = 1.0;
  aug(0, d) = 1.0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d + 1);
  rhs(d) = scale;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(aug);
  lu.setThreshold(1e-9);
  if (lu.rank() < d + 1) {
    return std::nullopt;
  }
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) {
    return std::nullopt;
  }
  return sol.head(d);
}

StyleIdentifier::StyleIdentifier(Axis axis, const CvDesired& desired,
                                 const IdentifierOptions& opts)
    : axis_(axis),
      desired_(desired),
      opts_(opts),
      n_features_(axis == Axis::kLongitudinal ? 3 : 2),
      state_(axis == Axis::kLongitudinal ? 5 : 4) {}

std::optional<Eigen::VectorXd> StyleIdentifier::update(
    const TrajectorySample& sample, const LinearDynamics& dyn) {
  if (state_.converged) {
    return state_.frozen_beta;
  }
  const RecursionMatrices rec =
      axis_ == Axis::kLongitudinal
          ? longitudinal_recursion(sample, desired_, longitudinal_block(dyn))
          : lateral_recursion(sample, desired_, lateral_block(dyn));
  recursion_step(state_, rec);

  if (state_.n < opts_.min_samples) {
    return std::nullopt;
  }
  const auto gamma = solve_constrained_ls(state_.p_accum, opts_.scale);
  if (!gamma) {
    state_.stable_solves = 0;
    return std::nullopt;
  }
  if (state_.gamma.size() == gamma->size()) {
    // Stability across consecutive solves; near-zero components are judged
    // on an absolute scale since beta is normalized by the constraint.
    double worst = 0.0;
    for (int i = 0; i < n_features_; ++i) {
      const double denom = std::max(std::abs(state_.gamma(i)), 1.0);
      worst = std::max(worst, std::abs((*gamma)(i) - state_.gamma(i)) / denom);
    }
    state_.stable_solves = worst < opts_.tol ? state_.stable_solves + 1 : 0;
  }
  state_.gamma = *gamma;
  if (state_.stable_solves >= opts_.window) {
    state_.converged = true;
    state_.frozen_beta = state_.gamma.head(n_features_);
    return state_.frozen_beta;
  }
  return std::nullopt;
}

std::optional<Eigen::VectorXd> StyleIdentifier::estimate() const {
  if (state_.converged) {
    return state_.frozen_beta;
  }
  if (state_.gamma.size() > 0) {
    return state_.gamma.head(n_features_).eval();
  }
  return std::nullopt;
}

ReplayResult identify_trajectory_csv(std::istream& in,
                                     const CvDesired& desired) {
  ReplayResult out;
  DualStyleIdentifier ident(desired);
  const VehicleGeometry geom;
  std::string line;
  std::getline(in, line);  // header
  double prev_t = 0.0;
  double dt = 0.1;
  while (std::getline(in, line)) {
    double t, dx, v_ev, v_cv, y, psi, a_cv, df, a_ev;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &t,
                    &dx, &v_ev, &v_cv, &y, &psi, &a_cv, &df, &a_ev) != 9) {
      continue;
    }
    if (out.samples == 1 && t > prev_t) {
      dt = t - prev_t;
    }
    prev_t = t;
    const SystemState x{dx, v_ev, v_cv, y, psi};
    const LinearDynamics dyn = linearize(x, geom, dt);
    ident.update(TrajectorySample{x, CvControl{a_cv, df}, EvControl{a_ev},
                                  out.samples},
                 dyn);
    ++out.samples;
  }
  out.longitudinal_converged = ident.longitudinal().converged();
  out.lateral_converged = ident.lateral().converged();
  if (auto b = ident.longitudinal().estimate()) {
    out.beta_long = Eigen::Vector3d(*b);
  }
  if (auto b = ident.lateral().estimate()) {
    out.beta_lat = Eigen::Vector2d(*b);
  }
  return out;
}

DualStyleIdentifier::DualStyleIdentifier(const CvDesired& desired,
                                         const IdentifierOptions& opts)
    : long_(StyleIdentifier::Axis::kLongitudinal, desired, opts),
      lat_(StyleIdentifier::Axis::kLateral, desired, opts) {}

std::optional<StyleParams> DualStyleIdentifier::update(
    const TrajectorySample& sample, const LinearDynamics& dyn) {
  const auto bl = long_.update(sample, dyn);
  const auto bt = lat_.update(sample, dyn);
  if (long_.converged() && lat_.converged()) {
    StyleParams sp;
    sp.beta_long = *long_.estimate();
    sp.beta_lat = *lat_.estimate();
    return sp;
  }
  (void)bl;
  (void)bt;
  return std::nullopt;
}

}  // namespace aacc
