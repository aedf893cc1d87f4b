#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qrobust {

// Discrete binomial market with zero interest rate and a single risky
// asset. Brownian increments are +-sqrt(dt) with probability 1/2 each, and
// processes live on the non-recombining tree of paths.
struct LatticeModel {
  double horizon = 1.0;  // T
  int steps = 1;         // N
  double dt = 1.0;       // T / N
  double sigma = 1.0;
  double drift = 0.0;    // b
  double theta = 0.0;    // b / sigma
  double sqrt_dt = 1.0;

  std::uint64_t leaf_count() const { return std::uint64_t{1} << steps; }
  // Increment on the given branch bit (0 = up, 1 = down).
  double increment(int bit) const { return bit == 0 ? sqrt_dt : -sqrt_dt; }
};

// Path-indexed storage cap: beyond 2^22 leaves exhaustive enumeration stops
// being a desk-scale computation.
inline constexpr int kMaxPathSteps = 22;

LatticeModel build_lattice(double horizon, int steps, double sigma, double drift);

// One real per tree node. Level k holds 2^k values and the node id is the
// path word; children of (k, id) are (k+1, 2id) on the up branch and
// (k+1, 2id+1) on the down branch. Node processes occupy steps 0..N,
// integrand processes steps 0..N-1 (one value per node, multiplying the
// next increment).
class AdaptedProcess {
 public:
  AdaptedProcess() = default;

  static AdaptedProcess node(const LatticeModel& m, double fill = 0.0);
  static AdaptedProcess integrand(const LatticeModel& m, double fill = 0.0);

  bool empty() const { return levels_.empty(); }
  int last_step() const { return static_cast<int>(levels_.size()) - 1; }
  std::uint64_t width(int step) const { return levels_[step].size(); }

  double at(int step, std::uint64_t node) const { return levels_[step][node]; }
  double& at(int step, std::uint64_t node) { return levels_[step][node]; }

  std::span<const double> level(int step) const { return levels_[step]; }
  std::span<double> level(int step) { return levels_[step]; }

 private:
  explicit AdaptedProcess(int level_count, double fill);
  std::vector<std::vector<double>> levels_;
};

// Mean over one tree level under the reference measure (all paths equally
// likely).
double level_mean(std::span<const double> level);

// Brownian value at a node: sqrt(dt) * (#up - #down) along the path word.
double brownian_at(const LatticeModel& m, int step, std::uint64_t node);

// Integrand of the exact two-branch martingale decomposition of the next
// level: z = (up - down) / (2 sqrt(dt)).
inline double martingale_integrand(const LatticeModel& m, double up, double down) {
  return (up - down) / (2.0 * m.sqrt_dt);
}

// Consumption rate per node (steps 0..N-1) plus terminal wealth per leaf.
struct Strategy {
  AdaptedProcess consumption;
  std::vector<double> terminal;
};

Strategy make_strategy(const LatticeModel& m, double consumption_rate, double terminal_wealth);
void validate_strategy(const LatticeModel& m, const Strategy& s);

// Multiplicative density with per-step factor (1 + kernel * dB); the
// state-price density is the kernel = -theta case.
AdaptedProcess exponential_density(const LatticeModel& m, double kernel);

// State-price density E(-theta . B). One-step factors must stay positive:
// |theta| sqrt(dt) < 1, otherwise the step size is too coarse.
AdaptedProcess pricing_density(const LatticeModel& m);

// Forward wealth dynamics X_{k+1} = X_k + pi sigma (theta dt + dB) - c dt.
AdaptedProcess wealth_forward(const LatticeModel& m, double x0,
                              const AdaptedProcess& consumption,
                              const AdaptedProcess& pi);

struct Replication {
  double x0 = 0.0;
  AdaptedProcess pi;      // steps 0..N-1
  AdaptedProcess wealth;  // steps 0..N, backward-priced
};

// Backward pricing under the martingale measure: X_k = E~[X_{k+1}] + c_k dt,
// with pi matching the martingale part of each step. X_0 is the replication
// cost E~[xi + int c dt].
Replication replicate(const LatticeModel& m, const Strategy& s);

}  // namespace qrobust
