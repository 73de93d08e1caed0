#pragma once

/// Virtual damping test rig: two identical geared DC motors coupled 1:1, one
/// driven from a DC supply, the other braking through the four-switch
/// damping circuit. The switch network chops at the PWM rate, so within one
/// period the damper circuit walks through at most three resistive modes
/// (load bypassed / through the load / open). Each mode segment has linear
/// shaft dynamics and is propagated in closed form, which keeps a full run
/// to steady state cheap and exact up to the mode averaging itself.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "via/damping.hpp"
#include "via/errors.hpp"

namespace via {

struct RigParams {
  double supply_voltage = 10.0;     // V; sign sets the drive direction
  double gear_ratio = 20.0;         // both motors share the gearhead
  double torque_constant = 0.0212;  // N*m/A (back-EMF constant in V*s/rad)
  double motor_resistance = 21.2;   // ohm
  double load_resistance = 25.0;    // ohm
  double pwm_frequency = 10e3;      // Hz
  double crossover_input = 0.5;     // u_r of the duty-cycle law
  // Both rotors and the gear pair reflected to the output shaft. The paper
  // rig leaves this unspecified; the default matches a small geared motor
  // pair and only sets how fast the rig settles.
  double shaft_inertia = 5e-4;      // kg*m^2
  double noise_std = 0.0;           // relative sigma of the meter readings
  bool ideal_coupling = true;       // lossless 1:1 spur-gear link

  void validate() const {
    if (supply_voltage == 0.0) throw std::invalid_argument("supply_voltage must be nonzero");
    if (!(gear_ratio > 0.0)) throw std::invalid_argument("gear_ratio must be > 0");
    if (!(torque_constant > 0.0)) throw std::invalid_argument("torque_constant must be > 0");
    if (!(motor_resistance > 0.0)) throw std::invalid_argument("motor_resistance must be > 0");
    if (!(load_resistance >= 0.0)) throw std::invalid_argument("load_resistance must be >= 0");
    if (!(pwm_frequency >= 1e3))
      throw std::invalid_argument("pwm_frequency must be >= 1 kHz to dominate the mechanics");
    if (!(shaft_inertia > 0.0)) throw std::invalid_argument("shaft_inertia must be > 0");
    if (!(noise_std >= 0.0)) throw std::invalid_argument("noise_std must be >= 0");
    if (!(crossover_input > 0.0 && crossover_input < 1.0))
      throw std::invalid_argument("crossover_input must lie in (0, 1)");
  }

  DampingModuleParams damping_params() const {
    return DampingModuleParams::from_motor(gear_ratio, torque_constant, motor_resistance,
                                           load_resistance, crossover_input);
  }
};

/// Cycle-level meter readings at steady state. The damper current is
/// reported both as the cycle mean (which the damping estimate needs) and as
/// the cycle RMS; the load current is the RMS reading an RMS meter would
/// show, plus its mean for reference. The load current is rectified by the
/// steering switches and therefore never negative.
struct MeasurementSet {
  double driver_current = 0.0;      // I1, cycle mean [A]
  double damper_current = 0.0;      // I2, cycle mean [A]
  double damper_current_rms = 0.0;  // [A]
  double load_current = 0.0;        // Ir, cycle RMS [A]
  double load_current_mean = 0.0;   // [A]
  double shaft_speed = 0.0;         // cycle mean of omega [rad/s]
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Drive the rig at damping command u until the shaft speed settles, then
/// report cycle-averaged meter readings. Multiplicative Gaussian noise of
/// relative width `rig.noise_std` is applied per meter when enabled; a fixed
/// seed gives a fixed reading.
inline MeasurementSet run_rig(const RigParams& rig, double u, double duration,
                              std::uint64_t seed = 0) {
  rig.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");
  const auto dmp = rig.damping_params();
  const DutyCycles dc = duty_cycles_from_u(u, dmp);

  const double nk = rig.gear_ratio * rig.torque_constant;
  const double v = rig.supply_voltage;
  const double j = rig.shaft_inertia;
  const double r_m = rig.motor_resistance;
  const double r_l = rig.load_resistance;
  const double period = 1.0 / rig.pwm_frequency;

  // Phase boundaries where a chopping switch can change state.
  double lo = std::min(dc.regen_duty, dc.dynamic_duty);
  double hi = std::max(dc.regen_duty, dc.dynamic_duty);
  const double edges[4] = {0.0, lo, hi, 1.0};

  double omega = 0.0;
  double prev_cycle_mean = std::numeric_limits<double>::quiet_NaN();
  const long max_cycles = static_cast<long>(std::ceil(duration / period));

  double int_omega = 0.0, int_i1 = 0.0, int_i2 = 0.0, int_i2_sq = 0.0;
  double int_ir = 0.0, int_ir_sq = 0.0;
  bool steady = false;

  for (long cycle = 0; cycle < max_cycles && !steady; ++cycle) {
    int_omega = int_i1 = int_i2 = int_i2_sq = int_ir = int_ir_sq = 0.0;
    for (int seg = 0; seg < 3; ++seg) {
      const double p0 = edges[seg];
      const double p1 = edges[seg + 1];
      const double tau = (p1 - p0) * period;
      if (tau <= 0.0) continue;

      const int direction = omega > 0.0 ? 1 : (omega < 0.0 ? -1 : 0);
      const SwitchState sw = switch_selection(direction, dc, p0);
      const bool series_closed = direction >= 0 ? sw.s1 : sw.s2;
      const bool load_bypassed = direction >= 0 ? sw.s2 : sw.s1;
      const bool conducting = direction != 0 && series_closed;
      const double r_c = load_bypassed ? r_m : r_m + r_l;

      // J d(omega)/dt = nk (V - nk omega)/Rm - nk^2 omega / Rc  (if conducting)
      const double a = nk * v / (j * r_m);
      const double b =
          nk * nk / (j * r_m) + (conducting ? nk * nk / (j * r_c) : 0.0);
      const double omega_ss = a / b;
      const double decay = std::exp(-b * tau);
      const double e1 = (1.0 - decay) / b;
      const double e2 = (1.0 - decay * decay) / (2.0 * b);
      const double dev = omega - omega_ss;
      const double seg_int_omega = omega_ss * tau + dev * e1;
      const double seg_int_omega_sq =
          omega_ss * omega_ss * tau + 2.0 * omega_ss * dev * e1 + dev * dev * e2;

      int_omega += seg_int_omega;
      int_i1 += (v * tau - nk * seg_int_omega) / r_m;
      if (conducting) {
        const double seg_i2 = nk * seg_int_omega / r_c;
        const double seg_i2_sq = nk * nk * seg_int_omega_sq / (r_c * r_c);
        int_i2 += seg_i2;
        int_i2_sq += seg_i2_sq;
        if (!load_bypassed) {
          int_ir += std::abs(seg_i2);  // rectified into the load
          int_ir_sq += seg_i2_sq;
        }
      }
      omega = omega_ss + dev * decay;
    }

    const double cycle_mean = int_omega / period;
    if (std::isfinite(prev_cycle_mean)) {
      const double scale = std::max(std::abs(cycle_mean), 1e-12);
      steady = std::abs(cycle_mean - prev_cycle_mean) < 1e-6 * scale;
    }
    prev_cycle_mean = cycle_mean;
  }
  if (!steady) {
    throw NoSteadyState("rig speed still drifting after the allotted duration");
  }

  MeasurementSet ms;
  ms.shaft_speed = int_omega / period;
  ms.driver_current = int_i1 / period;
  ms.damper_current = int_i2 / period;
  ms.damper_current_rms = std::sqrt(int_i2_sq / period);
  ms.load_current = std::sqrt(int_ir_sq / period);
  ms.load_current_mean = int_ir / period;

  if (rig.noise_std > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, rig.noise_std);
    const double e_driver = 1.0 + gauss(rng);
    const double e_damper = 1.0 + gauss(rng);
    const double e_load = 1.0 + gauss(rng);
    ms.driver_current *= e_driver;
    ms.damper_current *= e_damper;
    ms.damper_current_rms *= e_damper;
    ms.load_current *= std::abs(e_load);
    ms.load_current_mean *= std::abs(e_load);
  }
  return ms;
}

/// Damping estimate from the meter readings:
///
///   d = n^2 kt^2 I2 / (Vbb - I1 Rm)
///
/// The denominator is the geared back-EMF nk*omega; a non-positive value
/// (relative to the drive direction) means the rig stalled.
inline double estimate_damping(const MeasurementSet& ms, const RigParams& rig) {
  const double denom = rig.supply_voltage - ms.driver_current * rig.motor_resistance;
  const double sign = rig.supply_voltage > 0.0 ? 1.0 : -1.0;
  if (!(sign * denom > 0.0)) {
    throw MeasurementInvalid("stalled rig: back-EMF estimate is not positive");
  }
  const double nk2 =
      rig.gear_ratio * rig.gear_ratio * rig.torque_constant * rig.torque_constant;
  return nk2 * ms.damper_current / denom;
}

/// Speed-normalised regeneration power estimate:
///
///   P / omega^2 = n^2 kt^2 Ir^2 Rl / (Vbb - I1 Rm)^2
inline double estimate_regen_power(const MeasurementSet& ms, const RigParams& rig) {
  const double denom = rig.supply_voltage - ms.driver_current * rig.motor_resistance;
  const double sign = rig.supply_voltage > 0.0 ? 1.0 : -1.0;
  if (!(sign * denom > 0.0)) {
    throw MeasurementInvalid("stalled rig: back-EMF estimate is not positive");
  }
  const double nk2 =
      rig.gear_ratio * rig.gear_ratio * rig.torque_constant * rig.torque_constant;
  return nk2 * ms.load_current * ms.load_current * rig.load_resistance / (denom * denom);
}

struct SweepPoint {
  double u = 0.0;
  int repetition = 0;
  double damping = 0.0;           // N*m*s/rad
  double regen_power_norm = 0.0;  // W*s^2/rad^2
};

struct SweepSummaryRow {
  double u = 0.0;
  double damping_mean = 0.0;
  double regen_power_mean = 0.0;
};

struct SweepTable {
  std::vector<SweepPoint> points;
  std::vector<SweepSummaryRow> summary;
};

/// Repeat run_rig + estimators over a command grid. Every run draws from its
/// own seed stream, so the table is reproducible for a fixed master seed and
/// independent of evaluation order.
inline SweepTable sweep(const RigParams& rig, const std::vector<double>& u_values,
                        int repetitions, double duration, std::uint64_t seed = 0) {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  SweepTable table;
  table.points.reserve(u_values.size() * static_cast<size_t>(repetitions));
  for (size_t ui = 0; ui < u_values.size(); ++ui) {
    double d_sum = 0.0;
    double p_sum = 0.0;
    for (int rep = 0; rep < repetitions; ++rep) {
      const std::uint64_t run_seed =
          detail::mix_seed(seed, ui * 1000003ULL + static_cast<std::uint64_t>(rep));
      const MeasurementSet ms = run_rig(rig, u_values[ui], duration, run_seed);
      SweepPoint point;
      point.u = u_values[ui];
      point.repetition = rep;
      point.damping = estimate_damping(ms, rig);
      point.regen_power_norm = estimate_regen_power(ms, rig);
      d_sum += point.damping;
      p_sum += point.regen_power_norm;
      table.points.push_back(point);
    }
    table.summary.push_back(
        {u_values[ui], d_sum / repetitions, p_sum / repetitions});
  }
  return table;
}

}  // namespace via
