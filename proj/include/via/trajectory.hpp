#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "via/csv.hpp"

namespace via {

/// One integrator-rate sample of a simulated run. `damping` and
/// `regen_power` are the instantaneous module outputs under the held command
/// and the current joint velocity; `spring_torque` is the actuator torque
/// acting on the link.
struct TrajectorySample {
  double t = 0.0;                 // s
  Eigen::VectorXd state;          // (q, qdot[, theta1, theta2, theta1dot, theta2dot])
  Eigen::Vector3d control;        // (u1, u2, u3), already clamped
  double damping = 0.0;           // N*m*s/rad
  double regen_power = 0.0;       // W
  double spring_torque = 0.0;     // N*m
  double stiffness = 0.0;         // N*m/rad, instantaneous
};

/// Uniformly sampled trajectory with zero-order-hold controls.
struct Trajectory {
  double dt = 0.0;            // integrator step, s
  double control_hold = 0.0;  // control period, s
  std::vector<TrajectorySample> samples;

  double duration() const { return samples.empty() ? 0.0 : samples.back().t; }
  bool has_servo_states() const {
    return !samples.empty() && samples.front().state.size() >= 6;
  }
};

/// Write a trajectory as CSV. Plants without servo motors omit the theta
/// columns.
inline void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  const bool servo = traj.has_servo_states();
  std::vector<std::string> header;
  std::string units;
  if (servo) {
    units =
        "t [s], q [rad], qdot [rad/s], theta1 [rad], theta2 [rad], theta1dot [rad/s], "
        "theta2dot [rad/s], u1 [rad], u2 [rad], u3 [-], d [N*m*s/rad], p_rege [W], "
        "tau_s [N*m]";
    header = {"t",  "q",  "qdot", "theta1", "theta2", "theta1dot", "theta2dot",
              "u1", "u2", "u3",   "d",      "p_rege", "tau_s"};
  } else {
    units =
        "t [s], q [rad], qdot [rad/s], u1 [rad], u2 [-], u3 [-], d [N*m*s/rad], "
        "p_rege [W], tau_s [N*m]";
    header = {"t", "q", "qdot", "u1", "u2", "u3", "d", "p_rege", "tau_s"};
  }
  CsvWriter csv(path, units, header);
  for (const auto& s : traj.samples) {
    std::vector<double> row{s.t, s.state[0], s.state[1]};
    if (servo) {
      row.insert(row.end(), {s.state[2], s.state[3], s.state[4], s.state[5]});
    }
    row.insert(row.end(), {s.control[0], s.control[1], s.control[2], s.damping,
                           s.regen_power, s.spring_torque});
    csv.row(row);
  }
}

}  // namespace via
