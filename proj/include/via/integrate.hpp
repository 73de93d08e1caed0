#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "via/errors.hpp"

namespace via {

/// One classical fourth-order Runge-Kutta step of xdot = f(x, u) with the
/// control held constant over the step.
template <typename Deriv>
Eigen::VectorXd rk4_step(Deriv&& f, const Eigen::VectorXd& x, const Eigen::Vector3d& u,
                         double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("rk4_step: dt must be > 0");
  }
  const Eigen::VectorXd k1 = f(x, u);
  const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1, u);
  const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2, u);
  const Eigen::VectorXd k4 = f(x + dt * k3, u);
  Eigen::VectorXd next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw IntegrationDiverged("rk4_step produced a non-finite state");
  }
  return next;
}

}  // namespace via
