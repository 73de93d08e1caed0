#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "via/trajectory.hpp"

namespace via {

/// Energy and task-performance summary of one trajectory.
struct EnergyReport {
  double mechanical_work = 0.0;   // E [J], actuator work on the link
  double regenerated = 0.0;       // E_rege [J]
  double net = 0.0;               // E_net = E - E_rege [J]
  double regen_ratio = 0.0;       // eta = E_rege / E, 0 when E <= 0
  double overshoot = 0.0;         // rad, max excursion beyond the target
  double settling_time = 0.0;     // s, inf when the band is never held
  double reach_error = 0.0;       // rad, |q(t_f) - q*|
};

/// Total mechanical work of the actuator spring on the link: the trapezoidal
/// integral of tau_s * qdot over the trajectory.
inline double mechanical_work(const Trajectory& traj) {
  if (traj.samples.size() < 2) return 0.0;
  double total = 0.0;
  double prev = traj.samples.front().spring_torque * traj.samples.front().state[1];
  for (size_t i = 1; i < traj.samples.size(); ++i) {
    const double cur = traj.samples[i].spring_torque * traj.samples[i].state[1];
    total += 0.5 * (prev + cur) * (traj.samples[i].t - traj.samples[i - 1].t);
    prev = cur;
  }
  return total;
}

/// Harvested energy: trapezoidal integral of the recorded regeneration power.
inline double regenerated_energy(const Trajectory& traj) {
  if (traj.samples.size() < 2) return 0.0;
  double total = 0.0;
  for (size_t i = 1; i < traj.samples.size(); ++i) {
    total += 0.5 * (traj.samples[i - 1].regen_power + traj.samples[i].regen_power) *
             (traj.samples[i].t - traj.samples[i - 1].t);
  }
  return total;
}

struct PerformanceMetrics {
  double overshoot = 0.0;
  double settling_time = 0.0;
  double reach_error = 0.0;
};

/// Overshoot, settling time and final reach error of a rest-to-target motion.
/// Settling time is the first instant after which |q - q*| stays inside the
/// band; infinity marks a trajectory that never settles.
inline PerformanceMetrics performance_metrics(const Trajectory& traj, double q_star,
                                              double band = 0.02) {
  if (!(band > 0.0)) throw std::invalid_argument("settling band must be > 0");
  if (traj.samples.empty()) throw std::invalid_argument("empty trajectory");

  PerformanceMetrics m;
  const double direction = q_star >= 0.0 ? 1.0 : -1.0;
  for (const auto& s : traj.samples) {
    m.overshoot = std::max(m.overshoot, direction * (s.state[0] - q_star));
  }
  m.overshoot = std::max(m.overshoot, 0.0);

  m.settling_time = std::numeric_limits<double>::infinity();
  for (size_t i = traj.samples.size(); i-- > 0;) {
    if (std::abs(traj.samples[i].state[0] - q_star) >= band) {
      break;  // last out-of-band sample found
    }
    m.settling_time = traj.samples[i].t;
  }

  m.reach_error = std::abs(traj.samples.back().state[0] - q_star);
  return m;
}

inline EnergyReport make_energy_report(const Trajectory& traj, double q_star,
                                       double band = 0.02) {
  EnergyReport r;
  r.mechanical_work = mechanical_work(traj);
  r.regenerated = regenerated_energy(traj);
  r.net = r.mechanical_work - r.regenerated;
  r.regen_ratio = r.mechanical_work > 0.0 ? r.regenerated / r.mechanical_work : 0.0;
  const PerformanceMetrics m = performance_metrics(traj, q_star, band);
  r.overshoot = m.overshoot;
  r.settling_time = m.settling_time;
  r.reach_error = m.reach_error;
  return r;
}

}  // namespace via
