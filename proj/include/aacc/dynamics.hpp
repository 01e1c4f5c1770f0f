#pragma once

#include <Eigen/Core>

#include "aacc/types.hpp"

namespace aacc {

/// Discrete-time linear interaction model x+ = a_d x + b_d u_ev + c_d u_cv.
struct LinearDynamics {
  Matrix5d a_d = Matrix5d::Identity();
  Vector5d b_d = Vector5d::Zero();
  Eigen::Matrix<double, 5, 2> c_d = Eigen::Matrix<double, 5, 2>::Zero();
  double dt = 0.1;
};

/// Longitudinal sub-model over (delta_x, v_ev, v_cv) with a_cv as input.
struct LongitudinalDynamics {
  Eigen::Matrix3d a;
  Eigen::Vector3d b;  ///< a_ev column
  Eigen::Vector3d c;  ///< a_cv column
  double dt;
};

/// Lateral sub-model over (y_cv, psi_cv) with delta_f as input.
struct LateralDynamics {
  Eigen::Matrix2d a;
  Eigen::Vector2d c;  ///< delta_f column
  double dt;
};

/// Continuous-time matrices of xdot = A x + B u_ev + C u_cv, linearized
/// about the current CV speed with psi = phi = 0.
///
/// Row layout follows SystemState. The y_cv row couples psi with coefficient
/// v_cv; steering enters y_cv with v_cv*l_r/(l_r+l_f) and psi_cv with
/// v_cv/(l_r+l_f), both obtained by differentiating the kinematic bicycle
/// model at the reference point.
void continuous_matrices(const SystemState& state, const VehicleGeometry& geom,
                         Matrix5d& a, Vector5d& b,
                         Eigen::Matrix<double, 5, 2>& c);

/// Forward-Euler discretization: a_d = I + A dt, b_d = B dt, c_d = C dt.
/// Throws std::invalid_argument for dt <= 0.
LinearDynamics discretize(const Matrix5d& a, const Vector5d& b,
                          const Eigen::Matrix<double, 5, 2>& c, double dt);

/// Convenience: continuous_matrices + discretize at the given state.
LinearDynamics linearize(const SystemState& state, const VehicleGeometry& geom,
                         double dt);

/// One linear step x+ = a_d x + b_d u_ev + c_d u_cv.
SystemState step_linear(const LinearDynamics& dyn, const SystemState& state,
                        const EvControl& u_ev, const CvControl& u_cv);

/// One nonlinear step of the joint state with fixed-step RK4 over the
/// kinematic bicycle model (CV) and the longitudinal point model (EV).
/// Speeds are floored at zero after integration.
SystemState step_nonlinear(const SystemState& state, const EvControl& u_ev,
                           const CvControl& u_cv, double dt,
                           const VehicleGeometry& geom);

/// Slip angle phi = atan(l_r/(l_r+l_f) * tan(delta_f)).
double slip_angle(double delta_f, const VehicleGeometry& geom);

/// Single-vehicle bicycle kinematics used by the scenario engine.
struct BicycleState {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double psi = 0.0;
};

/// RK4 step of (x, y, v, psi) under (a, delta_f); v floored at zero.
BicycleState step_bicycle(const BicycleState& s, double accel, double delta_f,
                          double dt, const VehicleGeometry& geom);

/// Extract the longitudinal block (rows/cols delta_x, v_ev, v_cv).
LongitudinalDynamics longitudinal_block(const LinearDynamics& dyn);

/// Extract the lateral block (rows/cols y_cv, psi_cv).
LateralDynamics lateral_block(const LinearDynamics& dyn);

}  // namespace aacc
