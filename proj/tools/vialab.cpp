#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "via/config.hpp"
#include "via/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Variable impedance actuator damping and energy regeneration lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string schemes_csv;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "RNG seed override")
        ->each([&](const std::string&) { seed_given = true; });
  };

  CLI::App* reach = app.add_subcommand(
      "reach", "scheme-comparison reaching study (trajectories, energy report)");
  add_common(reach);
  reach->add_option("--schemes", schemes_csv,
                    "comma-separated scheme list overriding the config");

  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "virtual circuit sweep over the damping command");
  add_common(sweep_cmd);

  CLI::App* curves = app.add_subcommand(
      "curves", "analytic duty-cycle and damping/power curves");
  add_common(curves);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  via::Config cfg = [&]() {
    try {
      return via::Config::from_file(config_path);
    } catch (const via::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      std::exit(2);
    }
  }();

  const std::filesystem::path out(out_dir);
  if (reach->parsed()) {
    std::optional<std::vector<std::string>> override_list;
    if (!schemes_csv.empty()) {
      std::vector<std::string> names;
      std::string item;
      std::istringstream in(schemes_csv);
      while (std::getline(in, item, ',')) {
        if (!item.empty()) names.push_back(item);
      }
      override_list = names;
    }
    return via::cmd_reach(cfg, out, override_list);
  }
  if (sweep_cmd->parsed()) {
    return via::cmd_sweep(cfg, out,
                          seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt);
  }
  return via::cmd_curves(cfg, out);
}
