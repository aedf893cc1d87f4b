#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qrobust/errors.hpp"
#include "qrobust/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qrobust: robust consumption-investment optimization on binomial lattices"};
  app.require_subcommand(1);

  std::string config_path;
  std::string outdir;
  std::uint64_t seed = 0;
  bool seed_given = false;

  CLI::App* run = app.add_subcommand("run", "Run one scenario file and emit CSV results");
  run->add_option("--config", config_path, "Path to the key = value scenario file")
      ->required();
  run->add_option("--outdir", outdir, "Output directory for result.csv and detail files")
      ->required();
  run->add_option("--seed", seed, "Override the scenario seed")
      ->each([&](const std::string&) { seed_given = true; });
  run->footer(qrobust::config_reference());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    qrobust::ScenarioConfig cfg = qrobust::parse_config(config_path);
    if (seed_given) cfg.seed = seed;
    qrobust::run_scenario(cfg, outdir);
  } catch (const qrobust::ConvergenceError& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return 2;
  } catch (const qrobust::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
