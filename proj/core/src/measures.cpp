#include "qrobust/measures.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qrobust {

MeasureChange density_from_eta(const LatticeModel& m, const AdaptedProcess& eta) {
  if (eta.last_step() != m.steps - 1)
    throw std::invalid_argument("density_from_eta: eta must be an integrand process");
  MeasureChange mc;
  mc.eta = eta;
  mc.density = AdaptedProcess::node(m);
  mc.density.at(0, 0) = 1.0;
  for (int k = 0; k < m.steps; ++k) {
    auto cur = mc.density.level(k);
    auto next = mc.density.level(k + 1);
    for (std::uint64_t id = 0; id < cur.size(); ++id) {
      const double e = eta.at(k, id);
      const double up = 1.0 + e * m.sqrt_dt;
      const double down = 1.0 - e * m.sqrt_dt;
      if (!(up > 0.0) || !(down > 0.0))
        throw std::domain_error("density_from_eta: branch factor <= 0 at step " +
                                std::to_string(k) + ", node " + std::to_string(id) +
                                " (measure not equivalent)");
      next[2 * id] = cur[id] * up;
      next[2 * id + 1] = cur[id] * down;
    }
  }
  return mc;
}

double tsallis_entropy(const LatticeModel& m, const MeasureChange& mc, const QParams& p) {
  return conditional_tsallis_entropy(m, mc, p, 0, 0);
}

double conditional_tsallis_entropy(const LatticeModel& m, const MeasureChange& mc,
                                   const QParams& p, int step, std::uint64_t node) {
  p.validate();
  if (step < 0 || step > m.steps)
    throw std::invalid_argument("conditional_tsallis_entropy: step out of range");
  if (step == m.steps) return 0.0;
  const double d_node = mc.density.at(step, node);
  auto leaves = mc.density.level(m.steps);
  const int depth = m.steps - step;
  const std::uint64_t first = node << depth;
  const std::uint64_t count = std::uint64_t{1} << depth;
  double sum = 0.0;
  for (std::uint64_t i = 0; i < count; ++i) {
    const double ratio = leaves[first + i] / d_node;
    sum += std::pow(ratio, p.q) * ln_q(ratio, p);
  }
  return sum / static_cast<double>(count);
}

double entropy_quadratic_identity_gap(const LatticeModel& m, const MeasureChange& mc,
                                      const QParams& p) {
  p.validate();
  double quad = 0.0;
  for (int k = 0; k < m.steps; ++k) {
    auto eta = mc.eta.level(k);
    auto dens = mc.density.level(k);
    double level_sum = 0.0;
    for (std::uint64_t id = 0; id < eta.size(); ++id)
      level_sum += eta[id] * eta[id] * std::pow(dens[id], p.q);
    quad += level_sum / static_cast<double>(eta.size());
  }
  quad *= 0.5 * p.q * m.dt;
  return tsallis_entropy(m, mc, p) - quad;
}

namespace {

// Branch factors of a constant-eta density step; throws when the measure
// stops being equivalent.
void constant_eta_factors(const LatticeModel& m, double eta, double& up, double& down) {
  up = 1.0 + eta * m.sqrt_dt;
  down = 1.0 - eta * m.sqrt_dt;
  if (!(up > 0.0) || !(down > 0.0))
    throw std::domain_error("constant_eta: |eta| sqrt(dt) >= 1, refine N");
}

}  // namespace

double constant_eta_entropy(const LatticeModel& m, double eta, const QParams& p) {
  p.validate();
  double a, b;
  constant_eta_factors(m, eta, a, b);
  const double log_a = std::log(a);
  const double log_b = std::log(b);
  const int n = m.steps;
  // Binomial weight over up-move counts, C(N,u) 2^-N, built by recurrence.
  double weight = std::pow(0.5, n);
  double sum = 0.0;
  for (int u = 0; u <= n; ++u) {
    const double log_density = u * log_a + (n - u) * log_b;
    const double density = std::exp(log_density);
    sum += weight * std::pow(density, p.q) * ln_q(density, p);
    if (u < n) weight *= static_cast<double>(n - u) / static_cast<double>(u + 1);
  }
  return sum;
}

double constant_eta_quadratic_identity_gap(const LatticeModel& m, double eta,
                                           const QParams& p) {
  p.validate();
  double a, b;
  constant_eta_factors(m, eta, a, b);
  // E[(D_k)^q] = r^k with r = E[d^q] for one i.i.d. step.
  const double r = 0.5 * (std::pow(a, p.q) + std::pow(b, p.q));
  double geometric = 0.0;
  double r_pow = 1.0;
  for (int k = 0; k < m.steps; ++k) {
    geometric += r_pow;
    r_pow *= r;
  }
  const double quad = 0.5 * p.q * eta * eta * m.dt * geometric;
  return constant_eta_entropy(m, eta, p) - quad;
}

}  // namespace qrobust
