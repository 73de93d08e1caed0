#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "via/damping.hpp"

namespace via {

/// Point-mass pendulum driven by an ideal variable impedance actuator: the
/// joint torque is k(u2) * (u1 - q) with the damper in parallel,
///
///   m l^2 qddot + b qdot = k(u2) (u1 - q) - d(u3) qdot,   k(u2) = k_max u2.
struct PendulumParams {
  double mass = 1.0;           // kg
  double length = 1.0;         // m
  double friction = 0.01;      // N*m*s/rad, joint viscous friction
  double max_stiffness = 200.0;  // N*m/rad
  double u1_min = -std::numbers::pi / 2;  // rad
  double u1_max = std::numbers::pi / 2;   // rad

  double inertia() const { return mass * length * length; }  // kg*m^2

  void validate() const {
    if (!(mass > 0.0)) throw std::invalid_argument("pendulum mass must be > 0");
    if (!(length > 0.0)) throw std::invalid_argument("pendulum length must be > 0");
    if (!(max_stiffness > 0.0)) throw std::invalid_argument("max_stiffness must be > 0");
    if (!(friction >= 0.0)) throw std::invalid_argument("friction must be >= 0");
    if (!(u1_min < u1_max)) throw std::invalid_argument("empty u1 range");
  }
};

/// Pendulum plant bound to a braking scheme. State is (q, qdot); controls
/// are (u1 equilibrium [rad], u2 stiffness [0,1], u3 damping [0,1]).
class PendulumPlant {
 public:
  PendulumPlant(const PendulumParams& params, const BrakingScheme& scheme,
                const DampingModuleParams& damping)
      : params_(params), scheme_(scheme), damping_(damping) {
    params_.validate();
  }

  int state_size() const { return 2; }
  int control_size() const { return 3; }

  Eigen::VectorXd deriv(const Eigen::VectorXd& x, const Eigen::Vector3d& u) const {
    const double qdot = x[1];
    const double torque = spring_torque(x, u) - (damping(x, u) + params_.friction) * qdot;
    Eigen::VectorXd dx(2);
    dx << qdot, torque / params_.inertia();
    return dx;
  }

  double stiffness(const Eigen::VectorXd&, const Eigen::Vector3d& u) const {
    return params_.max_stiffness * u[1];
  }

  double spring_torque(const Eigen::VectorXd& x, const Eigen::Vector3d& u) const {
    return stiffness(x, u) * (u[0] - x[0]);
  }

  double damping(const Eigen::VectorXd& x, const Eigen::Vector3d& u) const {
    return damping_from_u(scheme_, damping_, u[2], stiffness(x, u), params_.inertia());
  }

  double regen_power(const Eigen::VectorXd& x, const Eigen::Vector3d& u) const {
    return regen_power_from_u(scheme_, damping_, u[2], x[1]);
  }

  Eigen::Vector3d control_lower() const { return {params_.u1_min, 0.0, 0.0}; }
  Eigen::Vector3d control_upper() const { return {params_.u1_max, 1.0, 1.0}; }

  Eigen::Vector3d clamp_control(const Eigen::Vector3d& u) const {
    return u.cwiseMax(control_lower()).cwiseMin(control_upper());
  }

  Eigen::VectorXd rest_state(double q0 = 0.0) const {
    Eigen::VectorXd x(2);
    x << q0, 0.0;
    return x;
  }

  const PendulumParams& params() const { return params_; }
  const BrakingScheme& scheme() const { return scheme_; }
  const DampingModuleParams& damping_params() const { return damping_; }

 private:
  PendulumParams params_;
  BrakingScheme scheme_;
  DampingModuleParams damping_;
};

}  // namespace via
