#pragma once

#include <Eigen/Core>

namespace aacc {

using Vector5d = Eigen::Matrix<double, 5, 1>;
using Matrix5d = Eigen::Matrix<double, 5, 5>;

/// Joint EV-CV interaction state: (delta_x, v_ev, v_cv, y_cv, psi_cv).
///
/// delta_x = x_cv - x_ev, positive while the competing vehicle is ahead.
/// y_cv is the lateral offset from the reference line (EV lane centerline),
/// psi_cv the CV yaw angle in radians.
struct SystemState {
  double delta_x = 0.0;  ///< longitudinal EV->CV distance [m]
  double v_ev = 0.0;     ///< EV speed [m/s]
  double v_cv = 0.0;     ///< CV speed [m/s]
  double y_cv = 0.0;     ///< CV lateral position [m]
  double psi_cv = 0.0;   ///< CV yaw angle [rad]

  Vector5d vec() const {
    return (Vector5d() << delta_x, v_ev, v_cv, y_cv, psi_cv).finished();
  }
  static SystemState from_vec(const Vector5d& v) {
    return SystemState{v(0), v(1), v(2), v(3), v(4)};
  }
};

/// EV control input: longitudinal acceleration only.
struct EvControl {
  double a_ev = 0.0;  ///< [m/s^2]
};

/// CV control input: longitudinal acceleration and front steering angle.
struct CvControl {
  double a_cv = 0.0;     ///< [m/s^2]
  double delta_f = 0.0;  ///< [rad]

  Eigen::Vector2d vec() const { return {a_cv, delta_f}; }
  static CvControl from_vec(const Eigen::Vector2d& v) { return {v(0), v(1)}; }
};

/// Bicycle-model geometry: gravity center to rear/front axle distances.
struct VehicleGeometry {
  double l_r = 2.0;  ///< [m]
  double l_f = 2.0;  ///< [m]

  double wheelbase() const { return l_r + l_f; }
};

/// Reference targets of the CV's assumed objective.
struct CvDesired {
  double delta_x_des = 25.0;  ///< desired longitudinal clearance to EV [m]
  double v_des = 18.0;        ///< desired speed [m/s]
  double y_des = 0.0;         ///< target lane centerline [m]
  double psi_des = 0.0;       ///< [rad]

  // Full-state target as in the follower problem; the v_ev slot carries no
  // cost weight and is set to zero.
  Vector5d vec() const {
    return (Vector5d() << delta_x_des, 0.0, v_des, y_des, psi_des).finished();
  }
};

/// Identified driving-style weights, split into the longitudinal triple
/// (safety, efficiency, comfort) and the lateral pair (lane-change request,
/// smoothness). The leading component of each block is pinned to the
/// identification scale factor.
struct StyleParams {
  Eigen::Vector3d beta_long{1.0, 1.0, 1.0};  ///< (beta1, beta2, beta3)
  Eigen::Vector2d beta_lat{1.0, 0.1};        ///< (beta4, beta5)

  double beta1() const { return beta_long(0); }
  double beta2() const { return beta_long(1); }
  double beta3() const { return beta_long(2); }
  double beta4() const { return beta_lat(0); }
  double beta5() const { return beta_lat(1); }
};

}  // namespace aacc
