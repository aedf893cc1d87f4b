#include "qrobust/lattice.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qrobust {

LatticeModel build_lattice(double horizon, int steps, double sigma, double drift) {
  if (!(horizon > 0.0)) throw std::invalid_argument("build_lattice: horizon must be positive");
  if (steps < 1) throw std::invalid_argument("build_lattice: steps must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("build_lattice: sigma must be positive");
  LatticeModel m;
  m.horizon = horizon;
  m.steps = steps;
  m.dt = horizon / steps;
  m.sigma = sigma;
  m.drift = drift;
  m.theta = drift / sigma;
  m.sqrt_dt = std::sqrt(m.dt);
  return m;
}

AdaptedProcess::AdaptedProcess(int level_count, double fill) {
  levels_.resize(level_count);
  for (int k = 0; k < level_count; ++k)
    levels_[k].assign(std::uint64_t{1} << k, fill);
}

AdaptedProcess AdaptedProcess::node(const LatticeModel& m, double fill) {
  if (m.steps > kMaxPathSteps)
    throw std::invalid_argument("AdaptedProcess: path-indexed storage capped at N <= " +
                                std::to_string(kMaxPathSteps) + ", got N = " +
                                std::to_string(m.steps));
  return AdaptedProcess(m.steps + 1, fill);
}

AdaptedProcess AdaptedProcess::integrand(const LatticeModel& m, double fill) {
  if (m.steps > kMaxPathSteps)
    throw std::invalid_argument("AdaptedProcess: path-indexed storage capped at N <= " +
                                std::to_string(kMaxPathSteps) + ", got N = " +
                                std::to_string(m.steps));
  return AdaptedProcess(m.steps, fill);
}

double level_mean(std::span<const double> level) {
  double sum = 0.0;
  for (double v : level) sum += v;
  return sum / static_cast<double>(level.size());
}

double brownian_at(const LatticeModel& m, int step, std::uint64_t node) {
  // Down moves are the set bits of the path word.
  const int downs = std::popcount(node);
  return m.sqrt_dt * static_cast<double>(step - 2 * downs);
}

Strategy make_strategy(const LatticeModel& m, double consumption_rate, double terminal_wealth) {
  Strategy s;
  s.consumption = AdaptedProcess::integrand(m, consumption_rate);
  s.terminal.assign(m.leaf_count(), terminal_wealth);
  return s;
}

void validate_strategy(const LatticeModel& m, const Strategy& s) {
  if (s.consumption.last_step() != m.steps - 1)
    throw std::invalid_argument("strategy: consumption must be an integrand process");
  if (s.terminal.size() != m.leaf_count())
    throw std::invalid_argument("strategy: terminal must have one value per leaf");
  for (int k = 0; k < m.steps; ++k)
    for (double c : s.consumption.level(k))
      if (!(c >= 0.0)) throw std::invalid_argument("strategy: consumption must be nonnegative");
  for (double xi : s.terminal)
    if (!(xi >= 0.0)) throw std::invalid_argument("strategy: terminal wealth must be nonnegative");
}

AdaptedProcess exponential_density(const LatticeModel& m, double kernel) {
  const double up = 1.0 + kernel * m.sqrt_dt;
  const double down = 1.0 - kernel * m.sqrt_dt;
  if (!(up > 0.0) || !(down > 0.0))
    throw std::domain_error("exponential_density: |kernel| sqrt(dt) >= 1, refine N");
  AdaptedProcess d = AdaptedProcess::node(m);
  d.at(0, 0) = 1.0;
  for (int k = 0; k < m.steps; ++k) {
    auto cur = d.level(k);
    auto next = d.level(k + 1);
    for (std::uint64_t id = 0; id < cur.size(); ++id) {
      next[2 * id] = cur[id] * up;
      next[2 * id + 1] = cur[id] * down;
    }
  }
  return d;
}

AdaptedProcess pricing_density(const LatticeModel& m) {
  return exponential_density(m, -m.theta);
}

AdaptedProcess wealth_forward(const LatticeModel& m, double x0,
                              const AdaptedProcess& consumption,
                              const AdaptedProcess& pi) {
  if (pi.last_step() != m.steps - 1 || consumption.last_step() != m.steps - 1)
    throw std::invalid_argument("wealth_forward: consumption and pi must be integrand processes");
  AdaptedProcess x = AdaptedProcess::node(m);
  x.at(0, 0) = x0;
  for (int k = 0; k < m.steps; ++k) {
    auto cur = x.level(k);
    auto next = x.level(k + 1);
    for (std::uint64_t id = 0; id < cur.size(); ++id) {
      const double exposure = pi.at(k, id) * m.sigma;
      const double drained = cur[id] + exposure * m.theta * m.dt - consumption.at(k, id) * m.dt;
      next[2 * id] = drained + exposure * m.sqrt_dt;
      next[2 * id + 1] = drained - exposure * m.sqrt_dt;
    }
  }
  return x;
}

Replication replicate(const LatticeModel& m, const Strategy& s) {
  validate_strategy(m, s);
  const double up_factor = 1.0 - m.theta * m.sqrt_dt;
  const double down_factor = 1.0 + m.theta * m.sqrt_dt;
  if (!(up_factor > 0.0) || !(down_factor > 0.0))
    throw std::domain_error("replicate: |theta| sqrt(dt) >= 1, refine N");

  Replication r;
  r.wealth = AdaptedProcess::node(m);
  r.pi = AdaptedProcess::integrand(m);
  auto leaves = r.wealth.level(m.steps);
  for (std::uint64_t id = 0; id < leaves.size(); ++id) leaves[id] = s.terminal[id];

  for (int k = m.steps - 1; k >= 0; --k) {
    auto cur = r.wealth.level(k);
    auto next = r.wealth.level(k + 1);
    for (std::uint64_t id = 0; id < cur.size(); ++id) {
      const double xu = next[2 * id];
      const double xd = next[2 * id + 1];
      cur[id] = 0.5 * (up_factor * xu + down_factor * xd) + s.consumption.at(k, id) * m.dt;
      r.pi.at(k, id) = martingale_integrand(m, xu, xd) / m.sigma;
    }
  }
  r.x0 = r.wealth.at(0, 0);
  return r;
}

}  // namespace qrobust
