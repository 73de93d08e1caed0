#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <concepts>
#include <stdexcept>
#include <vector>

#include "via/integrate.hpp"
#include "via/trajectory.hpp"

namespace via {

/// Anything that exposes continuous dynamics plus the instantaneous actuator
/// quantities recorded along a trajectory.
template <typename T>
concept Plant = requires(const T& p, const Eigen::VectorXd& x, const Eigen::Vector3d& u) {
  { p.state_size() } -> std::convertible_to<int>;
  { p.deriv(x, u) } -> std::convertible_to<Eigen::VectorXd>;
  { p.damping(x, u) } -> std::convertible_to<double>;
  { p.regen_power(x, u) } -> std::convertible_to<double>;
  { p.spring_torque(x, u) } -> std::convertible_to<double>;
  { p.stiffness(x, u) } -> std::convertible_to<double>;
  { p.clamp_control(u) } -> std::convertible_to<Eigen::Vector3d>;
};

/// Integrate the plant under a piecewise-constant control sequence spread
/// uniformly over [0, t_f]. Each control is held for t_f / controls.size()
/// seconds, which must be an integer number of RK4 steps.
template <Plant P>
Trajectory simulate(const P& plant, const std::vector<Eigen::Vector3d>& controls,
                    const Eigen::VectorXd& x0, double t_f, double dt = 1e-3) {
  if (controls.empty()) throw std::invalid_argument("simulate: empty control sequence");
  if (!(t_f > 0.0)) throw std::invalid_argument("simulate: t_f must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be > 0");
  if (x0.size() != plant.state_size()) {
    throw std::invalid_argument("simulate: state size mismatch");
  }
  const double hold = t_f / static_cast<double>(controls.size());
  const double steps_exact = hold / dt;
  const int steps_per_hold = static_cast<int>(std::lround(steps_exact));
  if (steps_per_hold < 1 || std::abs(steps_exact - steps_per_hold) > 1e-9 * steps_exact) {
    throw std::invalid_argument(
        "simulate: control hold interval must be an integer number of dt steps");
  }

  Trajectory traj;
  traj.dt = dt;
  traj.control_hold = hold;
  traj.samples.reserve(controls.size() * steps_per_hold + 1);

  const auto deriv = [&plant](const Eigen::VectorXd& x, const Eigen::Vector3d& u) {
    return plant.deriv(x, u);
  };
  const auto record = [&](double t, const Eigen::VectorXd& x, const Eigen::Vector3d& u) {
    traj.samples.push_back({t, x, u, plant.damping(x, u), plant.regen_power(x, u),
                            plant.spring_torque(x, u), plant.stiffness(x, u)});
  };

  Eigen::VectorXd x = x0;
  long step = 0;
  record(0.0, x, plant.clamp_control(controls.front()));
  for (size_t k = 0; k < controls.size(); ++k) {
    const Eigen::Vector3d u = plant.clamp_control(controls[k]);
    for (int i = 0; i < steps_per_hold; ++i) {
      x = rk4_step(deriv, x, u, dt);
      ++step;
      record(static_cast<double>(step) * dt, x, u);
    }
  }
  return traj;
}

}  // namespace via
