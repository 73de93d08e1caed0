#include "via/switch_sim.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using via::BrakingScheme;
using via::MeasurementSet;
using via::RigParams;

RigParams QuietRig() {
  RigParams rig;
  rig.noise_std = 0.0;
  return rig;
}

constexpr double kDuration = 1.5;  // s, comfortably past 20 mechanical time constants

TEST(RunRig, OpenCircuitAtZeroCommand) {
  const auto rig = QuietRig();
  const auto ms = via::run_rig(rig, 0.0, kDuration);
  const double free_speed =
      rig.supply_voltage / (rig.gear_ratio * rig.torque_constant);
  EXPECT_NEAR(ms.shaft_speed, free_speed, 1e-3 * free_speed);
  EXPECT_NEAR(ms.damper_current, 0.0, 1e-12);
  EXPECT_NEAR(ms.load_current, 0.0, 1e-12);
  EXPECT_NEAR(via::estimate_damping(ms, rig), 0.0, 1e-12);
}

TEST(RunRig, FullBypassShortsTheLoad) {
  const auto rig = QuietRig();
  const auto ms = via::run_rig(rig, 1.0, kDuration);
  // Driver and damper see the same winding resistance, so the shaft settles
  // at half the free-run speed.
  const double free_speed =
      rig.supply_voltage / (rig.gear_ratio * rig.torque_constant);
  EXPECT_NEAR(ms.shaft_speed, 0.5 * free_speed, 1e-3 * free_speed);
  EXPECT_NEAR(ms.load_current, 0.0, 1e-12);
  EXPECT_GT(ms.damper_current, 0.0);
}

TEST(RunRig, LoadCurrentPeaksAtCrossover) {
  const auto rig = QuietRig();
  const double at_03 = via::estimate_regen_power(via::run_rig(rig, 0.3, kDuration), rig);
  const double at_05 = via::estimate_regen_power(via::run_rig(rig, 0.5, kDuration), rig);
  const double at_07 = via::estimate_regen_power(via::run_rig(rig, 0.7, kDuration), rig);
  EXPECT_GT(at_05, at_03);
  EXPECT_GT(at_05, at_07);
}

TEST(RunRig, LoadCurrentIsAFractionOfDamperCurrent) {
  const auto rig = QuietRig();
  for (double u : {0.1, 0.3, 0.5, 0.8, 1.0}) {
    const auto ms = via::run_rig(rig, u, kDuration);
    EXPECT_LE(ms.load_current, ms.damper_current_rms + 1e-12);
    EXPECT_LE(ms.load_current_mean, std::abs(ms.damper_current) + 1e-12);
  }
}

// Round trip against the analytic module: the cycle-averaged damping
// estimate must track damping_from_u within 2 % at 10 kHz.
TEST(Estimators, DampingRoundTrip) {
  const auto rig = QuietRig();
  const auto dmp = rig.damping_params();
  for (int i = 0; i <= 10; ++i) {
    const double u = i / 10.0;
    const auto ms = via::run_rig(rig, u, kDuration);
    const double estimated = via::estimate_damping(ms, rig);
    const double analytic = via::damping_from_u(BrakingScheme::hybrid(), dmp, u);
    if (analytic == 0.0) {
      EXPECT_NEAR(estimated, 0.0, 1e-9);
    } else {
      EXPECT_NEAR(estimated, analytic, 0.01 * analytic) << "u = " << u;
    }
  }
}

TEST(Estimators, RegenPowerMatchesAnalyticCurve) {
  const auto rig = QuietRig();
  const auto dmp = rig.damping_params();
  for (int i = 0; i <= 10; ++i) {
    const double u = i / 10.0;
    const auto ms = via::run_rig(rig, u, kDuration);
    const double estimated = via::estimate_regen_power(ms, rig);
    const auto dc = via::duty_cycles_from_u(u, dmp);
    const double analytic = dmp.load_power_fraction() * dmp.max_regen_damping() *
                            (dc.regen_duty - dc.dynamic_duty);
    if (analytic == 0.0) {
      EXPECT_NEAR(estimated, 0.0, 1e-9);
    } else {
      EXPECT_NEAR(estimated, analytic, 0.02 * analytic) << "u = " << u;
    }
  }
}

TEST(Estimators, MonotoneDampingOverSweepGrid) {
  const auto rig = QuietRig();
  double prev = -1.0;
  for (int i = 0; i <= 10; ++i) {
    const auto ms = via::run_rig(rig, i / 10.0, kDuration);
    const double d = via::estimate_damping(ms, rig);
    EXPECT_GT(d, prev);
    prev = d;
  }
}

TEST(Estimators, StalledRigRejected) {
  const auto rig = QuietRig();
  MeasurementSet ms;
  ms.driver_current = rig.supply_voltage / rig.motor_resistance;  // zero back-EMF
  EXPECT_THROW(via::estimate_damping(ms, rig), via::MeasurementInvalid);
  EXPECT_THROW(via::estimate_regen_power(ms, rig), via::MeasurementInvalid);
}

// Power books must balance: mechanical braking power equals winding loss
// plus load power within the cycle-averaging error.
TEST(RunRig, EnergyConservationPerCycle) {
  const auto rig = QuietRig();
  const double nk = rig.gear_ratio * rig.torque_constant;
  for (double u : {0.2, 0.5, 0.8}) {
    const auto ms = via::run_rig(rig, u, kDuration);
    const double mechanical = nk * ms.damper_current * ms.shaft_speed;
    const double electrical =
        ms.damper_current_rms * ms.damper_current_rms * rig.motor_resistance +
        ms.load_current * ms.load_current * rig.load_resistance;
    EXPECT_NEAR(mechanical, electrical, 0.01 * electrical) << "u = " << u;
  }
}

// Reversing the drive direction must still push current into the load the
// same way round (the steering switches rectify it).
TEST(RunRig, DirectionReversalKeepsLoadCurrentPositive) {
  const auto forward_rig = QuietRig();
  auto reversed_rig = QuietRig();
  reversed_rig.supply_voltage = -reversed_rig.supply_voltage;
  const auto forward = via::run_rig(forward_rig, 0.4, kDuration);
  const auto reversed = via::run_rig(reversed_rig, 0.4, kDuration);
  EXPECT_LT(reversed.shaft_speed, 0.0);
  EXPECT_GE(reversed.load_current, 0.0);
  EXPECT_GE(reversed.load_current_mean, 0.0);
  EXPECT_NEAR(via::estimate_damping(reversed, reversed_rig),
              via::estimate_damping(forward, forward_rig), 1e-6);
  EXPECT_NEAR(reversed.load_current, forward.load_current, 1e-9);
}

// The mode averaging error shrinks as the PWM rate grows.
TEST(RunRig, CycleAverageConvergesWithPwmFrequency) {
  auto rig = QuietRig();
  const auto dmp = rig.damping_params();
  const double analytic = via::damping_from_u(BrakingScheme::hybrid(), dmp, 0.3);
  const auto gap_at = [&](double freq) {
    rig.pwm_frequency = freq;
    const auto ms = via::run_rig(rig, 0.3, kDuration);
    return std::abs(via::estimate_damping(ms, rig) - analytic) / analytic;
  };
  const double coarse = gap_at(1e3);
  const double fine = gap_at(10e3);
  EXPECT_LT(fine, 0.02);
  EXPECT_LT(fine, coarse);
}

TEST(RunRig, NoSteadyStateWithinTinyBudget) {
  const auto rig = QuietRig();
  EXPECT_THROW(via::run_rig(rig, 0.5, 5.0 / rig.pwm_frequency), via::NoSteadyState);
}

TEST(RunRig, NoiseIsSeededAndDeterministic) {
  auto rig = QuietRig();
  rig.noise_std = 0.01;
  const auto a = via::run_rig(rig, 0.5, kDuration, 1234);
  const auto b = via::run_rig(rig, 0.5, kDuration, 1234);
  const auto c = via::run_rig(rig, 0.5, kDuration, 99);
  EXPECT_DOUBLE_EQ(a.damper_current, b.damper_current);
  EXPECT_DOUBLE_EQ(a.load_current, b.load_current);
  EXPECT_NE(a.damper_current, c.damper_current);
}

TEST(Sweep, EmitsFullTable) {
  auto rig = QuietRig();
  rig.noise_std = 0.01;
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  const auto table = via::sweep(rig, grid, 10, kDuration, 7);
  EXPECT_EQ(table.points.size(), 110u);
  EXPECT_EQ(table.summary.size(), 11u);
  const auto again = via::sweep(rig, grid, 10, kDuration, 7);
  for (size_t i = 0; i < table.points.size(); ++i) {
    EXPECT_DOUBLE_EQ(table.points[i].damping, again.points[i].damping);
  }
}

TEST(Sweep, ZeroNoiseRepetitionsIdentical) {
  const auto rig = QuietRig();
  const auto table = via::sweep(rig, {0.5}, 5, kDuration, 3);
  for (const auto& point : table.points) {
    EXPECT_DOUBLE_EQ(point.damping, table.points.front().damping);
    EXPECT_DOUBLE_EQ(point.regen_power_norm, table.points.front().regen_power_norm);
  }
}

// Both command endpoints harvest nothing: the circuit is open at u = 0 and
// fully bypassed at u = 1.
TEST(Sweep, EndpointsHarvestNothing) {
  const auto rig = QuietRig();
  const auto table = via::sweep(rig, {0.0, 1.0}, 1, kDuration, 0);
  ASSERT_EQ(table.summary.size(), 2u);
  EXPECT_NEAR(table.summary[0].regen_power_mean, 0.0, 1e-9);
  EXPECT_NEAR(table.summary[1].regen_power_mean, 0.0, 1e-9);
}

// Mean damping curve is piecewise linear with a slope change at the
// crossover (the rig resistances put d2/d1 away from u_r = 0.5).
TEST(Sweep, MeanDampingPiecewiseLinear) {
  const auto rig = QuietRig();
  std::vector<double> grid;
  for (int i = 0; i <= 8; ++i) grid.push_back(i / 8.0);
  const auto table = via::sweep(rig, grid, 1, kDuration, 0);
  const auto d_at = [&](double u) {
    for (const auto& row : table.summary) {
      if (std::abs(row.u - u) < 1e-12) return row.damping_mean;
    }
    throw std::logic_error("grid point missing");
  };
  EXPECT_NEAR(d_at(0.25), 0.5 * (d_at(0.0) + d_at(0.5)), 0.01 * d_at(0.5));
  EXPECT_NEAR(d_at(0.75), 0.5 * (d_at(0.5) + d_at(1.0)), 0.01 * d_at(1.0));
  const double slope_lo = (d_at(0.5) - d_at(0.0)) / 0.5;
  const double slope_hi = (d_at(1.0) - d_at(0.5)) / 0.5;
  EXPECT_GT(std::abs(slope_hi - slope_lo), 0.05 * slope_lo);
}

}  // namespace
