#pragma once

/// Variable damping module built on the braking effect of a geared DC motor.
///
/// Three braking modes are modelled, all driven by PWM switch duty cycles:
///
///   dynamic:       d = d1 * Dd                   (short circuit, heat only)
///   regenerative:  d = d2 * Dr                   (current routed into a load)
///                  P = alpha * d2 * qdot^2 * Dr
///   hybrid:        d = d2 * Dr + alpha * d1 * Dd
///                  P = alpha * d2 * qdot^2 * (Dr - Dd)
///
/// with the module constants
///
///   d1    = n^2 kt^2 / Rm          max damping, short-circuited motor
///   d2    = n^2 kt^2 / (Rm + Rl)   max damping through the load
///   alpha = Rl / (Rm + Rl)         fraction of braking power reaching the load
///
/// A single command u in [0, 1] maps onto the two duty cycles through a
/// crossover point u_r: below u_r only the regenerative switch chops, above
/// it the regenerative switch stays closed and the bypass switch blends in
/// dynamic braking. With u_r = d2/d1 the combined damping is exactly linear
/// in u while regeneration peaks at u = u_r and vanishes at u = 1.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace via {

namespace detail {

inline void require_unit_interval(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error(std::string(name) + " must lie in [0, 1], got " +
                            std::to_string(x));
  }
}

inline void require_positive(double x, const char* name) {
  if (!(x > 0.0)) {
    throw std::invalid_argument(std::string(name) + " must be > 0, got " +
                                std::to_string(x));
  }
}

}  // namespace detail

/// Motor and circuit constants of the damping module. The damping bounds and
/// the load power fraction are derived once at construction and kept exact;
/// all braking formulas use them directly.
class DampingModuleParams {
 public:
  /// Build from physical motor constants. The back-EMF constant equals the
  /// torque constant (SI units) and is stored alongside it.
  static DampingModuleParams from_motor(double gear_ratio, double torque_constant,
                                        double motor_resistance, double load_resistance,
                                        double crossover = 0.5) {
    detail::require_positive(gear_ratio, "gear_ratio");
    detail::require_positive(torque_constant, "torque_constant");
    detail::require_positive(motor_resistance, "motor_resistance");
    if (!(load_resistance >= 0.0)) {
      throw std::invalid_argument("load_resistance must be >= 0");
    }
    const double nk2 = gear_ratio * gear_ratio * torque_constant * torque_constant;
    DampingModuleParams p;
    p.gear_ratio_ = gear_ratio;
    p.torque_constant_ = torque_constant;
    p.motor_resistance_ = motor_resistance;
    p.load_resistance_ = load_resistance;
    p.max_dynamic_damping_ = nk2 / motor_resistance;
    p.max_regen_damping_ = nk2 / (motor_resistance + load_resistance);
    p.load_power_fraction_ = load_resistance / (motor_resistance + load_resistance);
    p.set_crossover(crossover);
    return p;
  }

  /// Build from the aggregate damping bounds of an idealised module:
  /// `d_max` is the short-circuit bound, `load_power_fraction` the share of
  /// braking power that reaches the load. Equivalent unit-gear motor
  /// constants are synthesised so both construction routes expose the same
  /// fields.
  static DampingModuleParams from_limits(double d_max, double load_power_fraction,
                                         double crossover = 0.5) {
    detail::require_positive(d_max, "d_max");
    if (!(load_power_fraction >= 0.0 && load_power_fraction < 1.0)) {
      throw std::invalid_argument("load_power_fraction must lie in [0, 1)");
    }
    DampingModuleParams p;
    p.gear_ratio_ = 1.0;
    p.torque_constant_ = 1.0;
    p.motor_resistance_ = 1.0 / d_max;
    p.load_resistance_ =
        load_power_fraction * p.motor_resistance_ / (1.0 - load_power_fraction);
    p.max_dynamic_damping_ = d_max;
    p.max_regen_damping_ = d_max * (1.0 - load_power_fraction);
    p.load_power_fraction_ = load_power_fraction;
    p.set_crossover(crossover);
    return p;
  }

  double gear_ratio() const { return gear_ratio_; }
  double torque_constant() const { return torque_constant_; }     // N*m/A
  double back_emf_constant() const { return torque_constant_; }   // V*s/rad, equal by construction
  double motor_resistance() const { return motor_resistance_; }   // ohm
  double load_resistance() const { return load_resistance_; }     // ohm

  /// Max damping with the load bypassed (pure dynamic braking). N*m*s/rad.
  double max_dynamic_damping() const { return max_dynamic_damping_; }
  /// Max damping with all current through the load (pure regenerative). N*m*s/rad.
  double max_regen_damping() const { return max_regen_damping_; }
  /// Max damping of the hybrid blend; identical to the dynamic bound.
  double max_hybrid_damping() const { return max_dynamic_damping_; }
  /// Share of braking power delivered to the load, in [0, 1).
  double load_power_fraction() const { return load_power_fraction_; }
  /// Command value where the duty-cycle law hands over from regenerative
  /// chopping to dynamic blending.
  double crossover() const { return crossover_; }

 private:
  DampingModuleParams() = default;

  void set_crossover(double crossover) {
    if (!(crossover > 0.0 && crossover < 1.0)) {
      throw std::invalid_argument("crossover must lie in (0, 1)");
    }
    crossover_ = crossover;
  }

  double gear_ratio_ = 0.0;
  double torque_constant_ = 0.0;
  double motor_resistance_ = 0.0;
  double load_resistance_ = 0.0;
  double max_dynamic_damping_ = 0.0;
  double max_regen_damping_ = 0.0;
  double load_power_fraction_ = 0.0;
  double crossover_ = 0.5;
};

/// PWM commands for the two chopping switches.
struct DutyCycles {
  double regen_duty = 0.0;    ///< series regenerative switch (S1)
  double dynamic_duty = 0.0;  ///< load-bypass switch (S2); full bypass = pure dynamic braking
};

/// Instantaneous closed/open state of the four-switch circuit. S1 and S2 chop
/// at the PWM rate; S3 and S4 steer the motor current so it always enters the
/// storage element at its positive terminal.
struct SwitchState {
  bool s1 = false;
  bool s2 = false;
  bool s3 = false;
  bool s4 = false;
};

/// Damping scheme under which a plant is simulated or optimised.
class BrakingScheme {
 public:
  enum class Kind { Dynamic, Regenerative, Hybrid, FixedDamping, CriticallyDamped };

  static BrakingScheme dynamic() { return BrakingScheme(Kind::Dynamic, 0.0); }
  static BrakingScheme regenerative() { return BrakingScheme(Kind::Regenerative, 0.0); }
  static BrakingScheme hybrid() { return BrakingScheme(Kind::Hybrid, 0.0); }

  static BrakingScheme fixed_damping(double d) {
    if (!(d >= 0.0)) throw std::invalid_argument("fixed damping must be >= 0");
    return BrakingScheme(Kind::FixedDamping, d);
  }

  static BrakingScheme critically_damped(double damping_ratio = 1.0) {
    detail::require_positive(damping_ratio, "damping_ratio");
    return BrakingScheme(Kind::CriticallyDamped, damping_ratio);
  }

  Kind kind() const { return kind_; }

  double fixed_value() const {
    if (kind_ != Kind::FixedDamping)
      throw std::logic_error("fixed_value() on a non-fixed scheme");
    return value_;
  }

  double damping_ratio() const {
    if (kind_ != Kind::CriticallyDamped)
      throw std::logic_error("damping_ratio() on a non-critical scheme");
    return value_;
  }

  const char* name() const {
    switch (kind_) {
      case Kind::Dynamic: return "dynamic";
      case Kind::Regenerative: return "regenerative";
      case Kind::Hybrid: return "hybrid";
      case Kind::FixedDamping: return "fixed";
      case Kind::CriticallyDamped: return "critical";
    }
    return "?";
  }

 private:
  BrakingScheme(Kind kind, double value) : kind_(kind), value_(value) {}

  Kind kind_;
  double value_;
};

/// Map the scalar damping command u in [0, 1] onto the two duty cycles.
/// Below the crossover only the regenerative switch chops; above it the
/// regenerative switch is held closed and the bypass switch takes over.
inline DutyCycles duty_cycles_from_u(double u, const DampingModuleParams& p) {
  detail::require_unit_interval(u, "u");
  const double ur = p.crossover();
  if (u <= ur) {
    return DutyCycles{u / ur, 0.0};
  }
  return DutyCycles{1.0, (u - ur) / (1.0 - ur)};
}

/// Damping coefficient of pure dynamic braking at bypass duty `dynamic_duty`.
inline double damping_dynamic(const DampingModuleParams& p, double dynamic_duty) {
  detail::require_unit_interval(dynamic_duty, "dynamic_duty");
  return p.max_dynamic_damping() * dynamic_duty;
}

/// Damping coefficient of pure regenerative braking at duty `regen_duty`.
inline double damping_regenerative(const DampingModuleParams& p, double regen_duty) {
  detail::require_unit_interval(regen_duty, "regen_duty");
  return p.max_regen_damping() * regen_duty;
}

/// Power harvested into the load under pure regenerative braking. Always
/// non-negative and even in the joint velocity.
inline double regen_power_regenerative(const DampingModuleParams& p, double regen_duty,
                                       double qdot) {
  detail::require_unit_interval(regen_duty, "regen_duty");
  return p.load_power_fraction() * p.max_regen_damping() * qdot * qdot * regen_duty;
}

/// Damping coefficient of the hybrid blend.
inline double damping_hybrid(const DampingModuleParams& p, const DutyCycles& dc) {
  detail::require_unit_interval(dc.regen_duty, "regen_duty");
  detail::require_unit_interval(dc.dynamic_duty, "dynamic_duty");
  return p.max_regen_damping() * dc.regen_duty +
         p.load_power_fraction() * p.max_hybrid_damping() * dc.dynamic_duty;
}

/// Power harvested into the load under hybrid braking. The bypass duty eats
/// into the harvesting window, so the pair must satisfy Dr >= Dd (always the
/// case under the coupled duty-cycle law).
inline double regen_power_hybrid(const DampingModuleParams& p, const DutyCycles& dc,
                                 double qdot) {
  detail::require_unit_interval(dc.regen_duty, "regen_duty");
  detail::require_unit_interval(dc.dynamic_duty, "dynamic_duty");
  if (dc.dynamic_duty > dc.regen_duty) {
    throw std::domain_error("inconsistent duty pair: dynamic_duty > regen_duty");
  }
  return p.load_power_fraction() * p.max_regen_damping() * qdot * qdot *
         (dc.regen_duty - dc.dynamic_duty);
}

/// Damping coefficient as a function of the scalar command u under the given
/// scheme. The critically damped scheme ignores u and instead enforces a
/// damping ratio against the instantaneous stiffness and inertia, which must
/// then be supplied.
inline double damping_from_u(const BrakingScheme& scheme, const DampingModuleParams& p,
                             double u, std::optional<double> stiffness = std::nullopt,
                             std::optional<double> inertia = std::nullopt) {
  detail::require_unit_interval(u, "u");
  switch (scheme.kind()) {
    case BrakingScheme::Kind::Dynamic:
      return damping_dynamic(p, u);
    case BrakingScheme::Kind::Regenerative:
      return damping_regenerative(p, u);
    case BrakingScheme::Kind::Hybrid:
      return damping_hybrid(p, duty_cycles_from_u(u, p));
    case BrakingScheme::Kind::FixedDamping:
      return scheme.fixed_value();
    case BrakingScheme::Kind::CriticallyDamped: {
      if (!stiffness || !inertia) {
        throw std::invalid_argument(
            "critically damped scheme needs instantaneous stiffness and inertia");
      }
      // Stiffness can transiently drop below zero on a slack spring; floor it.
      const double k = std::max(*stiffness, 0.0);
      return 2.0 * scheme.damping_ratio() * std::sqrt(k * *inertia);
    }
  }
  throw std::logic_error("unreachable scheme kind");
}

/// Regenerated power as a function of the scalar command u. Only the
/// regenerative and hybrid schemes harvest; the baselines dissipate all
/// braking energy as heat.
inline double regen_power_from_u(const BrakingScheme& scheme, const DampingModuleParams& p,
                                 double u, double qdot) {
  detail::require_unit_interval(u, "u");
  switch (scheme.kind()) {
    case BrakingScheme::Kind::Regenerative:
      return regen_power_regenerative(p, u, qdot);
    case BrakingScheme::Kind::Hybrid:
      return regen_power_hybrid(p, duty_cycles_from_u(u, p), qdot);
    case BrakingScheme::Kind::Dynamic:
    case BrakingScheme::Kind::FixedDamping:
    case BrakingScheme::Kind::CriticallyDamped:
      return 0.0;
  }
  throw std::logic_error("unreachable scheme kind");
}

/// Instantaneous switch configuration at a given PWM phase in [0, 1).
///
/// For forward motor current S4 conducts and S1/S2 follow the regenerative
/// and bypass duty cycles; for reverse current S3 conducts and the duty
/// roles of S1/S2 are exchanged, so the load always sees current in the same
/// direction. A switch with duty D is closed while phase < D. Zero current
/// direction leaves every switch open (coast).
inline SwitchState switch_selection(int current_direction, const DutyCycles& dc,
                                    double phase) {
  if (!(phase >= 0.0 && phase < 1.0)) {
    throw std::domain_error("phase must lie in [0, 1)");
  }
  detail::require_unit_interval(dc.regen_duty, "regen_duty");
  detail::require_unit_interval(dc.dynamic_duty, "dynamic_duty");
  SwitchState s;
  if (current_direction == 0) {
    return s;  // no current path; coast
  }
  if (current_direction > 0) {
    s.s4 = true;
    s.s1 = phase < dc.regen_duty;
    s.s2 = phase < dc.dynamic_duty;
  } else {
    s.s3 = true;
    s.s1 = phase < dc.dynamic_duty;
    s.s2 = phase < dc.regen_duty;
  }
  return s;
}

}  // namespace via
