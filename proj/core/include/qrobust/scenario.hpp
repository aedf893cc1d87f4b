#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "qrobust/lattice.hpp"
#include "qrobust/optimal.hpp"
#include "qrobust/qcalc.hpp"
#include "qrobust/utility.hpp"

namespace qrobust {

// Batch scenario: market, preferences, problem mode, and numerics, read
// from a line-oriented `key = value` file. Unknown keys are errors.
struct ScenarioConfig {
  std::string mode;  // inner | oracle-compare | entropy | max-principle |
                     // optimize | example-nc | convergence

  double horizon = 1.0;
  int steps = 5;
  double sigma = 0.2;
  double drift = 0.1;

  double q = 2.0;
  double gamma = 1.0;
  bool experimental_q = false;
  double p0 = 0.5;

  double x = 1.0;

  double zeta_min = 0.5;
  double zeta_max = 2.0;
  double c_max = 0.02;
  std::uint64_t seed = 1;

  std::size_t grid_points = 2001;
  double fb_tolerance = 1e-10;
  int max_iterations = 200;
  std::string adjoint_density = "theta";

  void validate() const;
  QParams qparams() const;
  UtilitySpec utility() const;
  LatticeModel lattice() const;
  AdjointKernel kernel() const;
};

ScenarioConfig parse_config(const std::string& path);
ScenarioConfig parse_config_text(std::string_view text);

// Full key reference printed by --help.
std::string config_reference();

// Random problem instance given as smooth functionals of the Brownian
// path, so the same instance refines consistently across lattice
// resolutions: zeta = mid + amp tanh(w1 B_T + b1) per leaf and
// c = c_lo + (c_hi - c_lo) (1 + tanh(w2 B_t + b2))/2 per node.
struct PathInstance {
  double mid = 1.0, amp = 0.5;
  double w1 = 0.5, b1 = 0.0;
  double c_lo = 0.0, c_hi = 0.0;
  double w2 = 0.5, b2 = 0.0;

  std::vector<double> zeta(const LatticeModel& m) const;
  AdaptedProcess consumption_rate(const LatticeModel& m) const;
};

PathInstance draw_instance(const ScenarioConfig& cfg, std::mt19937_64& rng);

// Runs the configured mode and writes result.csv plus the mode's detail
// files into outdir. Throws ConfigError on validation problems and
// ConvergenceError when a solver gives up.
void run_scenario(const ScenarioConfig& cfg, const std::string& outdir);

}  // namespace qrobust
