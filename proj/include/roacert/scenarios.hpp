#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "roacert/errors.hpp"
#include "roacert/linalg.hpp"
#include "roacert/plant.hpp"

namespace roacert {

inline double sat(double u, double u_max) { return std::copysign(std::min(std::abs(u), u_max), u); }

/// Inverted pendulum, theta'' = (m g l sin(theta) - mu theta' + sat(u)) / (m l^2),
/// forward Euler with step dt. State x = [theta; theta'].
struct PendulumParams {
  double m = 0.15, l = 0.5, mu = 0.5, g = 9.81, u_max = 0.7, dt = 0.02;

  void validate() const {
    if (!(m > 0 && l > 0 && g > 0 && mu >= 0 && u_max > 0 && dt > 0))
      throw ParameterError("pendulum: parameters must be positive (mu >= 0)");
  }
};

inline VectorXd pendulum_step(const PendulumParams& p, const VectorXd& x, double u) {
  const double ml2 = p.m * p.l * p.l;
  VectorXd n(2);
  n(0) = x(0) + p.dt * x(1);
  n(1) = x(1) + p.dt * (p.g / p.l * std::sin(x(0)) - p.mu / ml2 * x(1) + sat(u, p.u_max) / ml2);
  return n;
}

/// Uncertain-plant form with p = [theta; u], q = [theta - sin(theta); sat(u)].
inline LtiPlant pendulum_plant(const PendulumParams& p) {
  p.validate();
  const double ml2 = p.m * p.l * p.l, dt = p.dt;
  LtiPlant g;
  g.A.resize(2, 2);
  g.A << 1.0, dt, dt * p.g / p.l, 1.0 - dt * p.mu / ml2;
  g.B1.resize(2, 2);
  g.B1 << 0.0, 0.0, -dt * p.g / p.l, dt / ml2;
  g.B2 = MatrixXd::Zero(2, 1);
  g.C.resize(2, 2);
  g.C << 1.0, 0.0, 0.0, 0.0;
  g.D1 = MatrixXd::Zero(2, 2);
  g.D2.resize(2, 1);
  g.D2 << 0.0, 1.0;
  g.validate();
  return g;
}

/// Linearization about the upright position without saturation.
inline LtiPlant pendulum_linearized(const PendulumParams& p) {
  p.validate();
  const double ml2 = p.m * p.l * p.l, dt = p.dt;
  MatrixXd A(2, 2), B(2, 1);
  A << 1.0, dt, dt * p.g / p.l, 1.0 - dt * p.mu / ml2;
  B << 0.0, dt / ml2;
  return LtiPlant::nominal(A, B);
}

/// Lateral vehicle dynamics, state [e; e'; e_theta; e_theta'], steering input,
/// zero road curvature, forward Euler with step dt.
struct VehicleParams {
  double U = 28.0, C_af = -1.232e5, C_ar = -1.042e5, m = 1670.0, I_z = 2100.0, a = 0.99, b = 1.7;
  double u_max = std::numbers::pi / 6.0, dt = 0.02;

  void validate() const {
    if (!(U > 0 && m > 0 && I_z > 0 && a > 0 && b > 0 && u_max > 0 && dt > 0))
      throw ParameterError("vehicle: parameters must be positive");
  }
};

inline void vehicle_continuous(const VehicleParams& p, MatrixXd& Ac, MatrixXd& Bc) {
  const double s = p.C_af + p.C_ar, d = p.a * p.C_af - p.b * p.C_ar, q = p.a * p.a * p.C_af + p.b * p.b * p.C_ar;
  Ac.resize(4, 4);
  Ac << 0, 1, 0, 0,
        0, s / (p.m * p.U), -s / p.m, d / (p.m * p.U),
        0, 0, 0, 1,
        0, d / (p.I_z * p.U), -d / p.I_z, q / (p.I_z * p.U);
  Bc.resize(4, 1);
  Bc << 0, -p.C_af / p.m, 0, -p.a * p.C_af / p.I_z;
}

inline VectorXd vehicle_step(const VehicleParams& p, const VectorXd& x, double u_applied) {
  MatrixXd Ac, Bc;
  vehicle_continuous(p, Ac, Bc);
  return x + p.dt * (Ac * x + Bc * u_applied);
}

/// p = [u; u_sat], q = [sat(u); Delta(u_sat)], u_pert = sat(u) + Delta(sat(u)).
inline LtiPlant vehicle_plant(const VehicleParams& p) {
  p.validate();
  MatrixXd Ac, Bc;
  vehicle_continuous(p, Ac, Bc);
  LtiPlant g;
  g.A = MatrixXd::Identity(4, 4) + p.dt * Ac;
  g.B1.resize(4, 2);
  g.B1 << p.dt * Bc, p.dt * Bc;
  g.B2 = MatrixXd::Zero(4, 1);
  g.C = MatrixXd::Zero(2, 4);
  g.D1.resize(2, 2);
  g.D1 << 0, 0, 1, 0;
  g.D2.resize(2, 1);
  g.D2 << 1, 0;
  g.validate();
  return g;
}

inline LtiPlant vehicle_linearized(const VehicleParams& p) {
  p.validate();
  MatrixXd Ac, Bc;
  vehicle_continuous(p, Ac, Bc);
  return LtiPlant::nominal(MatrixXd::Identity(4, 4) + p.dt * Ac, p.dt * Bc);
}

}  // namespace roacert
