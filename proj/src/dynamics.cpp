#include "aacc/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace aacc {

double slip_angle(double delta_f, const VehicleGeometry& geom) {
  return std::atan(geom.l_r / geom.wheelbase() * std::tan(delta_f));
}

void continuous_matrices(const SystemState& state, const VehicleGeometry& geom,
                         Matrix5d& a, Vector5d& b,
                         Eigen::Matrix<double, 5, 2>& c) {
  const double v = state.v_cv;
  a.setZero();
  a(0, 1) = -1.0;  // d(delta_x)/dt = v_cv - v_ev
  a(0, 2) = 1.0;
  a(3, 4) = v;  // ydot = v_cv * psi in the small-angle regime

  b.setZero();
  b(1) = 1.0;

  c.setZero();
  c(2, 0) = 1.0;                          // a_cv drives v_cv
  c(3, 1) = v * geom.l_r / geom.wheelbase();  // steering through slip angle
  c(4, 1) = v / geom.wheelbase();
}

LinearDynamics discretize(const Matrix5d& a, const Vector5d& b,
                          const Eigen::Matrix<double, 5, 2>& c, double dt) {
  if (dt <= 0.0) {
    throw std::invalid_argument("discretize: dt must be positive");
  }
  LinearDynamics dyn;
  dyn.a_d = Matrix5d::Identity() + a * dt;
  dyn.b_d = b * dt;
  dyn.c_d = c * dt;
  dyn.dt = dt;
  return dyn;
}

LinearDynamics linearize(const SystemState& state, const VehicleGeometry& geom,
                         double dt) {
  Matrix5d a;
  Vector5d b;
  Eigen::Matrix<double, 5, 2> c;
  continuous_matrices(state, geom, a, b, c);
  return discretize(a, b, c, dt);
}

SystemState step_linear(const LinearDynamics& dyn, const SystemState& state,
                        const EvControl& u_ev, const CvControl& u_cv) {
  const Vector5d next =
      dyn.a_d * state.vec() + dyn.b_d * u_ev.a_ev + dyn.c_d * u_cv.vec();
  return SystemState::from_vec(next);
}

namespace {

Vector5d interaction_rhs(const Vector5d& x, double a_ev, double a_cv,
                         double delta_f, const VehicleGeometry& geom) {
  const double v_ev = x(1);
  const double v_cv = x(2);
  const double psi = x(4);
  const double phi = slip_angle(delta_f, geom);
  Vector5d dxdt;
  dxdt(0) = v_cv * std::cos(psi + phi) - v_ev;
  dxdt(1) = a_ev;
  dxdt(2) = a_cv;
  dxdt(3) = v_cv * std::sin(psi + phi);
  dxdt(4) = v_cv / geom.l_r * std::sin(phi);
  return dxdt;
}

}  // namespace

SystemState step_nonlinear(const SystemState& state, const EvControl& u_ev,
                           const CvControl& u_cv, double dt,
                           const VehicleGeometry& geom) {
  if (dt <= 0.0) {
    throw std::invalid_argument("step_nonlinear: dt must be positive");
  }
  const Vector5d x0 = state.vec();
  const auto f = [&](const Vector5d& x) {
    return interaction_rhs(x, u_ev.a_ev, u_cv.a_cv, u_cv.delta_f, geom);
  };
  const Vector5d k1 = f(x0);
  const Vector5d k2 = f(x0 + 0.5 * dt * k1);
  const Vector5d k3 = f(x0 + 0.5 * dt * k2);
  const Vector5d k4 = f(x0 + dt * k3);
  Vector5d x1 = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  x1(1) = std::max(0.0, x1(1));
  x1(2) = std::max(0.0, x1(2));
  return SystemState::from_vec(x1);
}

BicycleState step_bicycle(const BicycleState& s, double accel, double delta_f,
                          double dt, const VehicleGeometry& geom) {
  const double phi = slip_angle(delta_f, geom);
  const auto f = [&](const Eigen::Vector4d& z) {
    Eigen::Vector4d d;
    d(0) = z(2) * std::cos(z(3) + phi);
    d(1) = z(2) * std::sin(z(3) + phi);
    d(2) = accel;
    d(3) = z(2) / geom.l_r * std::sin(phi);
    return d;
  };
  Eigen::Vector4d z0(s.x, s.y, s.v, s.psi);
  const Eigen::Vector4d k1 = f(z0);
  const Eigen::Vector4d k2 = f(z0 + 0.5 * dt * k1);
  const Eigen::Vector4d k3 = f(z0 + 0.5 * dt * k2);
  const Eigen::Vector4d k4 = f(z0 + dt * k3);
  Eigen::Vector4d z1 = z0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  BicycleState out{z1(0), z1(1), std::max(0.0, z1(2)), z1(3)};
  return out;
}

LongitudinalDynamics longitudinal_block(const LinearDynamics& dyn) {
  LongitudinalDynamics out;
  out.a = dyn.a_d.topLeftCorner<3, 3>();
  out.b = dyn.b_d.head<3>();
  out.c = dyn.c_d.col(0).head<3>();
  out.dt = dyn.dt;
  return out;
}

LateralDynamics lateral_block(const LinearDynamics& dyn) {
  LateralDynamics out;
  out.a = dyn.a_d.bottomRightCorner<2, 2>();
  out.c = dyn.c_d.col(1).tail<2>();
  out.dt = dyn.dt;
  return out;
}

}  // namespace aacc
