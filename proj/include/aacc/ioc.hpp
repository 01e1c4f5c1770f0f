#pragma once

#include <iosfwd>
#include <optional>

#include <Eigen/Core>

#include "aacc/dynamics.hpp"
#include "aacc/types.hpp"

namespace aacc {

/// One observed step of the competing vehicle's trajectory.
struct TrajectorySample {
  SystemState state;
  CvControl u_cv;
  EvControl u_ev;
  int n = 0;
};

/// Per-feature gradients of the longitudinal running-cost features
/// (safety, efficiency, comfort) w.r.t. (delta_x, v_ev, v_cv) and a_cv.
/// Rows index features.
struct LongFeatureGradients {
  Eigen::Matrix3d d_state = Eigen::Matrix3d::Zero();
  Eigen::Vector3d d_control = Eigen::Vector3d::Zero();
};

/// Per-feature gradients of the lateral features (lane-change request,
/// smoothness) w.r.t. (y_cv, psi_cv) and delta_f.
struct LatFeatureGradients {
  Eigen::Matrix2d d_state = Eigen::Matrix2d::Zero();
  Eigen::Vector2d d_control = Eigen::Vector2d::Zero();
};

LongFeatureGradients longitudinal_gradients(const TrajectorySample& sample,
                                            const CvDesired& desired);
LatFeatureGradients lateral_gradients(const TrajectorySample& sample,
                                      const CvDesired& desired);

/// Recursion blocks for one sample: the augmented transition K over
/// gamma = (beta, lambda) and the stationarity residual row L such that
/// L * K_chain * gamma_0 = 0 on exactly optimal data.
struct RecursionMatrices {
  Eigen::MatrixXd k;
  Eigen::RowVectorXd l_row;
};

RecursionMatrices longitudinal_recursion(const TrajectorySample& sample,
                                         const CvDesired& desired,
                                         const LongitudinalDynamics& dyn);
RecursionMatrices lateral_recursion(const TrajectorySample& sample,
                                    const CvDesired& desired,
                                    const LateralDynamics& dyn);

/// Accumulated identification state for one axis.
struct IocState {
  Eigen::MatrixXd k_chain;  ///< K_n * K_{n-1} * ... * K_0
  Eigen::MatrixXd p_accum;  ///< sum of (L K)^T (L K), PSD
  int n = 0;
  Eigen::VectorXd gamma;        ///< latest solved gamma_0 (empty before)
  int stable_solves = 0;
  bool converged = false;
  Eigen::VectorXd frozen_beta;  ///< beta block frozen at convergence

  explicit IocState(int dim = 0)
      : k_chain(Eigen::MatrixXd::Identity(dim, dim)),
        p_accum(Eigen::MatrixXd::Zero(dim, dim)) {}
};

/// Accumulate one sample: chain <- K * chain, p += (L chain)^T (L chain).
void recursion_step(IocState& st, const RecursionMatrices& rec);

/// Minimize gamma' P gamma subject to gamma(0) = scale, via the augmented
/// stationarity system. Returns nullopt while the system is rank deficient
/// (insufficient excitation).
std::optional<Eigen::VectorXd> solve_constrained_ls(const Eigen::MatrixXd& p,
                                                    double scale);

struct IdentifierOptions {
  double scale = 1.0;     ///< value pinned to the leading beta component
  int min_samples = 10;   ///< samples before the first solve
  int window = 10;        ///< consecutive stable solves for convergence
  double tol = 1e-3;      ///< per-component stable-change tolerance
};

/// Streaming identifier for one axis (longitudinal or lateral).
class StyleIdentifier {
 public:
  enum class Axis { kLongitudinal, kLateral };

  StyleIdentifier(Axis axis, const CvDesired& desired,
                  const IdentifierOptions& opts = {});

  /// Feed one sample; returns the frozen beta block once converged.
  std::optional<Eigen::VectorXd> update(const TrajectorySample& sample,
                                        const LinearDynamics& dyn);

  bool converged() const { return state_.converged; }
  /// Best current beta block (frozen or latest solve), if any.
  std::optional<Eigen::VectorXd> estimate() const;
  const IocState& state() const { return state_; }
  int feature_count() const { return n_features_; }

 private:
  Axis axis_;
  CvDesired desired_;
  IdentifierOptions opts_;
  int n_features_;
  IocState state_;
};

/// Offline identification over a replayed trajectory CSV with columns
/// (t, delta_x, v_ev, v_cv, y_cv, psi_cv, a_cv, delta_f, a_ev).
struct ReplayResult {
  int samples = 0;
  bool longitudinal_converged = false;
  bool lateral_converged = false;
  std::optional<Eigen::Vector3d> beta_long;
  std::optional<Eigen::Vector2d> beta_lat;
};

ReplayResult identify_trajectory_csv(std::istream& in,
                                     const CvDesired& desired = {});

/// Runs the longitudinal and lateral identifiers side by side and composes
/// full StyleParams once both have converged.
class DualStyleIdentifier {
 public:
  explicit DualStyleIdentifier(const CvDesired& desired,
                               const IdentifierOptions& opts = {});

  std::optional<StyleParams> update(const TrajectorySample& sample,
                                    const LinearDynamics& dyn);

  const StyleIdentifier& longitudinal() const { return long_; }
  const StyleIdentifier& lateral() const { return lat_; }
  bool longitudinal_converged() const { return long_.converged(); }
  std::optional<Eigen::VectorXd> longitudinal_estimate() const {
    return long_.estimate();
  }

 private:
  StyleIdentifier long_;
  StyleIdentifier lat_;
};

}  // namespace aacc
