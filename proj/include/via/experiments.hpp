#pragma once

/// End-to-end experiment runners behind the CLI subcommands: the five-scheme
/// reaching comparison on either plant, the virtual rig sweep, and the
/// analytic duty/damping/power curves. All outputs are plain CSV with a
/// units comment, deterministic for a fixed config and seed.

#include <cstdint>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "via/config.hpp"
#include "via/csv.hpp"
#include "via/energy.hpp"
#include "via/errors.hpp"
#include "via/ilqr.hpp"
#include "via/maccepa.hpp"
#include "via/pendulum.hpp"
#include "via/simulate.hpp"
#include "via/switch_sim.hpp"
#include "via/trajectory.hpp"

namespace via {

struct ReachSetup {
  enum class PlantKind { Pendulum, Maccepa };

  PlantKind plant_kind = PlantKind::Pendulum;
  PendulumParams pendulum;
  MaccepaParams maccepa;
  DampingModuleParams damping = DampingModuleParams::from_limits(50.0, 0.5, 0.5);
  CostSpec cost;
  SolverOptions solver;
  double dt = 1e-3;
  std::vector<std::string> schemes;
  double fixed_damping = 0.0;           // baseline constant, N*m*s/rad
  double critical_zeta = 1.0;
  std::optional<double> fixed_u1;       // pin the equilibrium command
  std::optional<double> critical_u2;    // pin the stiffness command of the critical baseline
  double band = 0.02;                   // rad, settling band
  double q0 = 0.0;                      // rad, start angle
};

struct SchemeRun {
  std::string name;
  IlqrResult solve;
  Trajectory trajectory;
  EnergyReport report;
  bool used_solver = true;
};

inline DampingModuleParams parse_damping_params(Config& cfg) {
  const double u_r = cfg.get_double("damping.u_r", 0.5);
  if (cfg.has("damping.d_max")) {
    return DampingModuleParams::from_limits(cfg.get_double("damping.d_max"),
                                            cfg.get_double("damping.alpha"), u_r);
  }
  return DampingModuleParams::from_motor(
      cfg.get_double("damping.gear_ratio"), cfg.get_double("damping.torque_constant"),
      cfg.get_double("damping.motor_resistance"), cfg.get_double("damping.load_resistance"),
      u_r);
}

inline ReachSetup parse_reach_setup(
    Config& cfg, const std::optional<std::vector<std::string>>& schemes_override = {}) {
  ReachSetup s;
  const std::string plant = cfg.get_string("plant");
  if (plant == "pendulum") {
    s.plant_kind = ReachSetup::PlantKind::Pendulum;
  } else if (plant == "maccepa") {
    s.plant_kind = ReachSetup::PlantKind::Maccepa;
  } else {
    throw ConfigError("unknown plant: " + plant);
  }

  s.schemes = cfg.has("schemes") ? cfg.get_string_list("schemes")
                                 : std::vector<std::string>{};
  if (schemes_override) s.schemes = *schemes_override;
  if (s.schemes.empty()) throw ConfigError("scheme list is empty");

  if (s.plant_kind == ReachSetup::PlantKind::Pendulum) {
    s.pendulum.mass = cfg.get_double("pendulum.mass", s.pendulum.mass);
    s.pendulum.length = cfg.get_double("pendulum.length", s.pendulum.length);
    s.pendulum.friction = cfg.get_double("pendulum.friction", s.pendulum.friction);
    s.pendulum.max_stiffness =
        cfg.get_double("pendulum.max_stiffness", s.pendulum.max_stiffness);
    s.pendulum.u1_min = cfg.get_double("pendulum.u1_min", s.pendulum.u1_min);
    s.pendulum.u1_max = cfg.get_double("pendulum.u1_max", s.pendulum.u1_max);
    s.pendulum.validate();
  } else {
    s.maccepa.length_b = cfg.get_double("maccepa.length_b", s.maccepa.length_b);
    s.maccepa.length_c = cfg.get_double("maccepa.length_c", s.maccepa.length_c);
    s.maccepa.drum_radius = cfg.get_double("maccepa.drum_radius", s.maccepa.drum_radius);
    s.maccepa.spring_constant =
        cfg.get_double("maccepa.spring_constant", s.maccepa.spring_constant);
    s.maccepa.inertia = cfg.get_double("maccepa.inertia", s.maccepa.inertia);
    s.maccepa.friction = cfg.get_double("maccepa.friction", s.maccepa.friction);
    s.maccepa.servo_bandwidth =
        cfg.get_double("maccepa.servo_bandwidth", s.maccepa.servo_bandwidth);
    s.maccepa.external_torque =
        cfg.get_double("maccepa.external_torque", s.maccepa.external_torque);
    s.maccepa.validate();
  }

  s.damping = parse_damping_params(cfg);

  s.cost.w1 = cfg.get_double("cost.w1", s.cost.w1);
  s.cost.w2 = cfg.get_double("cost.w2", s.cost.w2);
  s.cost.w3 = cfg.get_double("cost.w3", s.cost.w3);
  s.cost.w4 = cfg.get_double("cost.w4", s.cost.w4);
  s.cost.q_star = cfg.get_double("cost.q_star");
  s.cost.t_f = cfg.get_double("cost.t_f", s.cost.t_f);
  s.cost.control_freq = cfg.get_double("cost.control_freq", s.cost.control_freq);
  s.cost.validate();

  if (cfg.has("task.fixed_u1")) s.fixed_u1 = cfg.get_double("task.fixed_u1");
  if (cfg.has("task.critical_u2")) s.critical_u2 = cfg.get_double("task.critical_u2");
  s.critical_zeta = cfg.get_double("task.critical_zeta", 1.0);
  s.band = cfg.get_double("task.band", 0.02);
  s.q0 = cfg.get_double("task.q0", 0.0);
  const bool wants_fixed =
      std::find(s.schemes.begin(), s.schemes.end(), "fixed") != s.schemes.end();
  if (wants_fixed || cfg.has("task.fixed_damping")) {
    s.fixed_damping = cfg.get_double("task.fixed_damping");
  }

  s.solver.max_iterations = cfg.get_int("solver.max_iterations", 200);
  s.solver.tolerance = cfg.get_double("solver.tolerance", 1e-6);
  s.solver.lambda_init = cfg.get_double("solver.lambda_init", s.solver.lambda_init);
  s.solver.armijo_ratio = cfg.get_double("solver.armijo_ratio", s.solver.armijo_ratio);
  s.solver.backtrack_factor =
      cfg.get_double("solver.backtrack_factor", s.solver.backtrack_factor);
  s.solver.max_backtracks = cfg.get_int("solver.max_backtracks", s.solver.max_backtracks);
  s.solver.fd_step = cfg.get_double("solver.fd_step", 1e-6);
  s.dt = cfg.get_double("sim.dt", 1e-3);

  cfg.require_all_consumed();
  return s;
}

inline BrakingScheme scheme_from_name(const std::string& name, const ReachSetup& setup) {
  if (name == "dynamic") return BrakingScheme::dynamic();
  if (name == "regenerative") return BrakingScheme::regenerative();
  if (name == "hybrid") return BrakingScheme::hybrid();
  if (name == "fixed") return BrakingScheme::fixed_damping(setup.fixed_damping);
  if (name == "critical") return BrakingScheme::critically_damped(setup.critical_zeta);
  throw ConfigError("unknown scheme: " + name);
}

template <Plant P>
SchemeRun run_scheme(const P& plant, const ReachSetup& setup, const std::string& name) {
  const ReachingProblem<P> problem(plant, setup.cost, setup.dt);
  SolverOptions opts = setup.solver;
  opts.u_lower = plant.control_lower();
  opts.u_upper = plant.control_upper();
  if (setup.fixed_u1) {
    opts.u_lower[0] = opts.u_upper[0] = *setup.fixed_u1;
  }
  const bool damping_command_active =
      name == "dynamic" || name == "regenerative" || name == "hybrid";
  if (!damping_command_active) {
    opts.u_lower[2] = opts.u_upper[2] = 0.0;  // u3 has no effect on these baselines
  }
  if (name == "critical" && setup.critical_u2) {
    opts.u_lower[1] = opts.u_upper[1] = *setup.critical_u2;
  }

  Eigen::VectorXd u_mid(3);
  for (int i = 0; i < 3; ++i) u_mid[i] = 0.5 * (opts.u_lower[i] + opts.u_upper[i]);

  SchemeRun run;
  run.name = name;
  const Eigen::VectorXd x0 = plant.rest_state(setup.q0);
  const std::vector<Eigen::VectorXd> u_init(problem.horizon(), u_mid);

  if ((opts.u_upper - opts.u_lower).cwiseAbs().maxCoeff() == 0.0) {
    // Every channel pinned: a closed-form baseline, nothing to optimise.
    run.used_solver = false;
    run.solve.controls = u_init;
    double cost = 0.0;
    if (!detail::rollout(problem, x0, u_init, run.solve.states, cost)) {
      throw IntegrationDiverged("baseline rollout diverged for scheme " + name);
    }
    run.solve.cost = cost;
    run.solve.cost_history = {cost};
    run.solve.converged = true;
  } else {
    run.solve = ilqr_solve(problem, x0, u_init, opts);
  }

  std::vector<Eigen::Vector3d> controls;
  controls.reserve(run.solve.controls.size());
  for (const auto& u : run.solve.controls) {
    controls.emplace_back(u[0], u[1], u[2]);
  }
  run.trajectory = simulate(plant, controls, x0, setup.cost.t_f, setup.dt);
  run.report = make_energy_report(run.trajectory, setup.cost.q_star, setup.band);
  return run;
}

/// Run every requested scheme; the solves are independent and run in
/// parallel, results come back in the order the schemes were listed.
inline std::vector<SchemeRun> run_reach(const ReachSetup& setup) {
  if (setup.schemes.empty()) throw ConfigError("scheme list is empty");
  std::vector<std::future<SchemeRun>> futures;
  futures.reserve(setup.schemes.size());
  for (const auto& name : setup.schemes) {
    const BrakingScheme scheme = scheme_from_name(name, setup);  // validate up front
    futures.push_back(std::async(std::launch::async, [&setup, scheme, name]() {
      if (setup.plant_kind == ReachSetup::PlantKind::Pendulum) {
        const PendulumPlant plant(setup.pendulum, scheme, setup.damping);
        return run_scheme(plant, setup, name);
      }
      const MaccepaPlant plant(setup.maccepa, scheme, setup.damping);
      return run_scheme(plant, setup, name);
    }));
  }
  std::vector<SchemeRun> runs;
  runs.reserve(futures.size());
  for (auto& f : futures) runs.push_back(f.get());
  return runs;
}

inline void write_controls_csv(const IlqrResult& result, double control_hold,
                               const std::filesystem::path& path) {
  CsvWriter csv(path, "t [s], u1 [rad], u2 [rad or -], u3 [-]", {"t", "u1", "u2", "u3"});
  for (size_t k = 0; k < result.controls.size(); ++k) {
    const auto& u = result.controls[k];
    csv.row({static_cast<double>(k) * control_hold, u[0], u[1], u[2]});
  }
}

inline void write_iterations_csv(const IlqrResult& result,
                                 const std::filesystem::path& path) {
  CsvWriter csv(path, "iter [-], J [cost]", {"iter", "J"});
  for (size_t i = 0; i < result.cost_history.size(); ++i) {
    csv.row({static_cast<double>(i), result.cost_history[i]});
  }
}

inline void write_comparison_csv(const std::vector<SchemeRun>& runs,
                                 const std::filesystem::path& path) {
  CsvWriter csv(path,
                "scheme [-], E [J], E_rege [J], E_net [J], eta_percent [%], "
                "overshoot [rad], settling_time [s], reach_error [rad]",
                {"scheme", "E", "E_rege", "E_net", "eta_percent", "overshoot",
                 "settling_time", "reach_error"});
  for (const auto& run : runs) {
    csv.row({run.name, CsvWriter::format(run.report.mechanical_work),
             CsvWriter::format(run.report.regenerated), CsvWriter::format(run.report.net),
             CsvWriter::format(100.0 * run.report.regen_ratio),
             CsvWriter::format(run.report.overshoot),
             CsvWriter::format(run.report.settling_time),
             CsvWriter::format(run.report.reach_error)});
  }
}

/// Plot-ready panels: per-sample position, stiffness and damping columns for
/// every scheme plus the energy summary bars.
inline void write_reach_panels(const std::vector<SchemeRun>& runs,
                               const std::filesystem::path& out) {
  if (runs.empty()) return;
  const auto& t_samples = runs.front().trajectory.samples;
  const auto panel = [&](const std::string& file, const std::string& unit,
                         auto&& value_of) {
    std::vector<std::string> header{"t"};
    for (const auto& run : runs) header.push_back(run.name);
    CsvWriter csv(out / file, "t [s], per-scheme " + unit, header);
    for (size_t i = 0; i < t_samples.size(); ++i) {
      std::vector<double> row{t_samples[i].t};
      for (const auto& run : runs) row.push_back(value_of(run.trajectory.samples[i]));
      csv.row(row);
    }
  };
  panel("panel_position.csv", "q [rad]",
        [](const TrajectorySample& s) { return s.state[0]; });
  panel("panel_stiffness.csv", "k [N*m/rad]",
        [](const TrajectorySample& s) { return s.stiffness; });
  panel("panel_damping.csv", "d [N*m*s/rad]",
        [](const TrajectorySample& s) { return s.damping; });

  CsvWriter energy(out / "panel_energy.csv",
                   "scheme [-], E [J], E_rege [J], E_net [J], eta_percent [%]",
                   {"scheme", "E", "E_rege", "E_net", "eta_percent"});
  for (const auto& run : runs) {
    energy.row({run.name, CsvWriter::format(run.report.mechanical_work),
                CsvWriter::format(run.report.regenerated),
                CsvWriter::format(run.report.net),
                CsvWriter::format(100.0 * run.report.regen_ratio)});
  }
}

inline void write_reach_artifacts(const std::vector<SchemeRun>& runs,
                                  const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  for (const auto& run : runs) {
    write_trajectory_csv(run.trajectory, out / ("traj_" + run.name + ".csv"));
    write_controls_csv(run.solve, run.trajectory.control_hold,
                       out / ("controls_" + run.name + ".csv"));
    write_iterations_csv(run.solve, out / ("iters_" + run.name + ".csv"));
  }
  write_comparison_csv(runs, out / "comparison.csv");
  write_reach_panels(runs, out);
}

struct SweepSetup {
  RigParams rig;
  std::vector<double> u_values;
  int repetitions = 10;
  double duration = 1.5;  // s
  std::uint64_t seed = 0;
};

inline SweepSetup parse_sweep_setup(Config& cfg) {
  SweepSetup s;
  s.rig.supply_voltage = cfg.get_double("rig.supply_voltage", s.rig.supply_voltage);
  s.rig.gear_ratio = cfg.get_double("rig.gear_ratio", s.rig.gear_ratio);
  s.rig.torque_constant = cfg.get_double("rig.torque_constant", s.rig.torque_constant);
  s.rig.motor_resistance = cfg.get_double("rig.motor_resistance", s.rig.motor_resistance);
  s.rig.load_resistance = cfg.get_double("rig.load_resistance", s.rig.load_resistance);
  s.rig.pwm_frequency = cfg.get_double("rig.pwm_frequency", s.rig.pwm_frequency);
  s.rig.crossover_input = cfg.get_double("rig.u_r", s.rig.crossover_input);
  s.rig.shaft_inertia = cfg.get_double("rig.shaft_inertia", s.rig.shaft_inertia);
  s.rig.noise_std = cfg.get_double("rig.noise_std", s.rig.noise_std);
  s.rig.ideal_coupling = cfg.get_bool("rig.ideal_coupling", s.rig.ideal_coupling);
  s.rig.validate();

  if (cfg.has("sweep.u_values")) {
    s.u_values = cfg.get_double_list("sweep.u_values");
  } else {
    const double u_min = cfg.get_double("sweep.u_min", 0.0);
    const double u_max = cfg.get_double("sweep.u_max", 1.0);
    const int count = cfg.get_int("sweep.u_count", 11);
    if (count < 2 || !(u_max > u_min)) throw ConfigError("bad sweep grid");
    for (int i = 0; i < count; ++i) {
      s.u_values.push_back((u_min * (count - 1 - i) + u_max * i) / (count - 1));
    }
  }
  for (double u : s.u_values) {
    if (!(u >= 0.0 && u <= 1.0)) throw ConfigError("sweep u values must lie in [0, 1]");
  }
  s.repetitions = cfg.get_int("sweep.repetitions", 10);
  s.duration = cfg.get_double("sweep.duration", 1.5);
  s.seed = cfg.get_seed("sweep.seed", 0);
  cfg.require_all_consumed();
  return s;
}

inline void write_sweep_artifacts(const SweepTable& table,
                                  const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  CsvWriter points(out / "sweep_points.csv",
                   "u [-], rep [-], d_est [N*m*s/rad], p_norm_est [W*s^2/rad^2]",
                   {"u", "rep", "d_est", "p_norm_est"});
  for (const auto& p : table.points) {
    points.row({p.u, static_cast<double>(p.repetition), p.damping, p.regen_power_norm});
  }
  CsvWriter summary(out / "sweep_summary.csv",
                    "u [-], d_mean [N*m*s/rad], p_mean [W*s^2/rad^2]",
                    {"u", "d_mean", "p_mean"});
  for (const auto& row : table.summary) {
    summary.row({row.u, row.damping_mean, row.regen_power_mean});
  }
}

struct CurvesSetup {
  DampingModuleParams damping = DampingModuleParams::from_limits(50.0, 0.5, 0.5);
  int samples = 1000;   // grid intervals over u in [0, 1]
  double qdot = 1.0;    // rad/s used for the power curve
};

inline CurvesSetup parse_curves_setup(Config& cfg) {
  CurvesSetup s;
  s.damping = parse_damping_params(cfg);
  s.samples = cfg.get_int("curves.samples", 1000);
  s.qdot = cfg.get_double("curves.qdot", 1.0);
  if (s.samples < 2) throw ConfigError("curves.samples must be >= 2");
  cfg.require_all_consumed();
  return s;
}

inline void write_curves_artifacts(const CurvesSetup& setup,
                                   const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  CsvWriter duty(out / "duty_cycles.csv", "u [-], D_r [-], D_d [-]", {"u", "D_r", "D_d"});
  CsvWriter power(out / "damping_power.csv",
                  "u [-], d [N*m*s/rad], p_rege [W at the configured speed]",
                  {"u", "d", "p_rege"});
  const auto hybrid = BrakingScheme::hybrid();
  for (int i = 0; i <= setup.samples; ++i) {
    const double u = static_cast<double>(i) / setup.samples;
    const DutyCycles dc = duty_cycles_from_u(u, setup.damping);
    duty.row({u, dc.regen_duty, dc.dynamic_duty});
    power.row({u, damping_from_u(hybrid, setup.damping, u),
               regen_power_from_u(hybrid, setup.damping, u, setup.qdot)});
  }
}

/// CLI entry points. Exit codes: 0 success, 2 config error, 3 solver
/// non-convergence (artifacts still written), 4 simulation failure.
inline int cmd_reach(Config& cfg, const std::filesystem::path& out,
                     const std::optional<std::vector<std::string>>& schemes_override = {}) {
  try {
    const ReachSetup setup = parse_reach_setup(cfg, schemes_override);
    const auto runs = run_reach(setup);
    write_reach_artifacts(runs, out);
    for (const auto& run : runs) {
      if (!run.solve.converged) {
        std::cerr << "scheme " << run.name << " did not converge\n";
        return 3;
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::logic_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return 4;
  }
}

inline int cmd_sweep(Config& cfg, const std::filesystem::path& out,
                     std::optional<std::uint64_t> seed_override = {}) {
  try {
    SweepSetup setup = parse_sweep_setup(cfg);
    if (seed_override) setup.seed = *seed_override;
    const SweepTable table =
        sweep(setup.rig, setup.u_values, setup.repetitions, setup.duration, setup.seed);
    write_sweep_artifacts(table, out);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::logic_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return 4;
  }
}

inline int cmd_curves(Config& cfg, const std::filesystem::path& out) {
  try {
    const CurvesSetup setup = parse_curves_setup(cfg);
    write_curves_artifacts(setup, out);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::logic_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace via
