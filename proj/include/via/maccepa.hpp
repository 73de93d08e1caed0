#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "via/damping.hpp"

namespace via {

/// MACCEPA with a variable damping motor on the joint. Equilibrium and spring
/// pretension are set by two servomotors; the damping motor brakes the joint
/// directly. State is (q, qdot, theta1, theta2, theta1dot, theta2dot).
struct MaccepaParams {
  double length_b = 0.036;    // m, lever arm from joint to the spring anchor
  double length_c = 0.135;    // m, joint to the fixed spring attachment
  double drum_radius = 0.015; // m, winding drum adjusting pretension
  double spring_constant = 394.0;  // N/m, linear spring
  double inertia = 0.0015;    // kg*m^2, link inertia
  double friction = 0.0023;   // N*m*s/rad, joint viscous friction
  double servo_bandwidth = 30.0;  // 1/s, critically damped servo pole
  double external_torque = 0.0;   // N*m, load torque on the joint
  double u1_min = -std::numbers::pi / 3;  // rad, equilibrium command
  double u1_max = std::numbers::pi / 3;
  double u2_min = 0.0;                    // rad, pretension command
  double u2_max = std::numbers::pi / 3;

  void validate() const {
    if (!(length_b > 0.0 && length_c > 0.0))
      throw std::invalid_argument("linkage lengths must be > 0");
    if (length_b == length_c)
      throw std::invalid_argument("linkage lengths must differ");
    if (!(drum_radius > 0.0)) throw std::invalid_argument("drum_radius must be > 0");
    if (!(spring_constant > 0.0)) throw std::invalid_argument("spring_constant must be > 0");
    if (!(inertia > 0.0)) throw std::invalid_argument("inertia must be > 0");
    if (!(servo_bandwidth > 0.0)) throw std::invalid_argument("servo_bandwidth must be > 0");
    if (!(friction >= 0.0)) throw std::invalid_argument("friction must be >= 0");
    if (!(u1_min < u1_max) || !(u2_min < u2_max))
      throw std::invalid_argument("empty command range");
  }
};

/// Distance between the moving spring anchor and the fixed attachment.
/// Bounded below by |C - B| > 0, so the torque expression never divides by
/// zero.
inline double maccepa_anchor_distance(double q, double theta1, const MaccepaParams& p) {
  const double b = p.length_b;
  const double c = p.length_c;
  return std::sqrt(b * b + c * c - 2.0 * b * c * std::cos(theta1 - q));
}

/// Spring torque on the joint:
///
///   tau_s = kappa B C sin(th1 - q) (1 + (r th2 - |C - B|) / A(q, th1))
///
/// Pretension r*th2 is expected to be non-negative; slightly negative values
/// (a slack spring probed by finite differences) are still well defined.
inline double maccepa_spring_torque(double q, double theta1, double theta2,
                                    const MaccepaParams& p) {
  const double deflection = theta1 - q;
  const double a = maccepa_anchor_distance(q, theta1, p);
  const double pretension = p.drum_radius * theta2 - std::abs(p.length_c - p.length_b);
  return p.spring_constant * p.length_b * p.length_c * std::sin(deflection) *
         (1.0 + pretension / a);
}

/// Joint stiffness: the derivative of the spring torque with respect to the
/// joint deflection (th1 - q), derived analytically from the torque above.
///
///   k = kappa B C cos(phi) (1 + P/A) - kappa B^2 C^2 sin^2(phi) P / A^3,
///
/// with phi = th1 - q, P = r th2 - |C - B| and A the anchor distance.
inline double maccepa_stiffness(double q, double theta1, double theta2,
                                const MaccepaParams& p) {
  const double b = p.length_b;
  const double c = p.length_c;
  const double phi = theta1 - q;
  const double a = maccepa_anchor_distance(q, theta1, p);
  const double pretension = p.drum_radius * theta2 - std::abs(c - b);
  const double kappa_bc = p.spring_constant * b * c;
  const double sin_phi = std::sin(phi);
  return kappa_bc * std::cos(phi) * (1.0 + pretension / a) -
         kappa_bc * b * c * sin_phi * sin_phi * pretension / (a * a * a);
}

/// MACCEPA plant bound to a braking scheme. Controls are (u1 equilibrium
/// servo command [rad], u2 pretension servo command [rad], u3 damping [0,1]).
class MaccepaPlant {
 public:
  MaccepaPlant(const MaccepaParams& params, const BrakingScheme& scheme,
               const DampingModuleParams& damping)
      : params_(params), scheme_(scheme), damping_(damping) {
    params_.validate();
  }

  int state_size() const { return 6; }
  int control_size() const { return 3; }

  Eigen::VectorXd deriv(const Eigen::VectorXd& x, const Eigen::Vector3d& u) const {
    const double qdot = x[1];
    const double beta = params_.servo_bandwidth;
    const double torque = spring_torque(x, u) -
                          (damping(x, u) + params_.friction) * qdot -
                          params_.external_torque;
    Eigen::VectorXd dx(6);
    dx[0] = qdot;
    dx[1] = torque / params_.inertia;
    dx[2] = x[4];
    dx[3] = x[5];
    // Servos track their commands as critically damped second-order systems.
    dx[4] = beta * beta * (u[0] - x[2]) - 2.0 * beta * x[4];
    dx[5] = beta * beta * (u[1] - x[3]) - 2.0 * beta * x[5];
    return dx;
  }

  double stiffness(const Eigen::VectorXd& x, const Eigen::Vector3d&) const {
    return maccepa_stiffness(x[0], x[2], x[3], params_);
  }

  double spring_torque(const Eigen::VectorXd& x, const Eigen::Vector3d&) const {
    return maccepa_spring_torque(x[0], x[2], x[3], params_);
  }

  double damping(const Eigen::VectorXd& x, const Eigen::Vector3d& u) const {
    if (scheme_.kind() == BrakingScheme::Kind::CriticallyDamped) {
      return damping_from_u(scheme_, damping_, u[2], stiffness(x, u), params_.inertia);
    }
    return damping_from_u(scheme_, damping_, u[2]);
  }

  double regen_power(const Eigen::VectorXd& x, const Eigen::Vector3d& u) const {
    return regen_power_from_u(scheme_, damping_, u[2], x[1]);
  }

  Eigen::Vector3d control_lower() const { return {params_.u1_min, params_.u2_min, 0.0}; }
  Eigen::Vector3d control_upper() const { return {params_.u1_max, params_.u2_max, 1.0}; }

  Eigen::Vector3d clamp_control(const Eigen::Vector3d& u) const {
    return u.cwiseMax(control_lower()).cwiseMin(control_upper());
  }

  Eigen::VectorXd rest_state(double q0 = 0.0) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
    x[0] = q0;
    return x;
  }

  const MaccepaParams& params() const { return params_; }
  const BrakingScheme& scheme() const { return scheme_; }
  const DampingModuleParams& damping_params() const { return damping_; }

 private:
  MaccepaParams params_;
  BrakingScheme scheme_;
  DampingModuleParams damping_;
};

}  // namespace via
