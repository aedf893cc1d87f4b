#include "qrobust/robust.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qrobust {

std::vector<double> default_eta_grid(const LatticeModel& m, std::size_t points,
                                     double span_fraction) {
  if (points < 3) throw std::invalid_argument("default_eta_grid: need at least 3 points");
  if (!(span_fraction > 0.0) || !(span_fraction < 1.0))
    throw std::invalid_argument("default_eta_grid: span fraction must lie in (0, 1)");
  const double width = span_fraction / m.sqrt_dt;
  std::vector<double> grid(points);
  const double denom = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = width * (2.0 * static_cast<double>(i) - denom) / denom;
  return grid;
}

namespace {

void check_inner_inputs(const LatticeModel& m, std::span<const double> zeta,
                        const AdaptedProcess& utility, const QParams& p) {
  p.validate();
  if (zeta.size() != m.leaf_count())
    throw std::invalid_argument("inner problem: zeta must have one value per leaf");
  if (utility.last_step() != m.steps - 1)
    throw std::invalid_argument("inner problem: utility must be an integrand process");
  for (std::uint64_t id = 0; id < zeta.size(); ++id)
    if (!(zeta[id] >= 0.0))
      throw std::domain_error("inner problem: zeta must be nonnegative");
}

}  // namespace

InnerValue inner_dp_grid(const LatticeModel& m, std::span<const double> zeta,
                         const AdaptedProcess& utility, const QParams& p,
                         std::span<const double> eta_grid) {
  check_inner_inputs(m, zeta, utility, p);
  if (eta_grid.empty()) throw std::invalid_argument("inner_dp_grid: empty grid");

  // One-step branch densities and their entropy contribution per grid point.
  const std::size_t gn = eta_grid.size();
  std::vector<double> du_q(gn), dd_q(gn), penalty(gn);
  for (std::size_t i = 0; i < gn; ++i) {
    const double du = 1.0 + eta_grid[i] * m.sqrt_dt;
    const double dd = 1.0 - eta_grid[i] * m.sqrt_dt;
    if (!(du > 0.0) || !(dd > 0.0))
      throw std::invalid_argument("inner_dp_grid: grid leaves the equivalence interval");
    du_q[i] = std::pow(du, p.q);
    dd_q[i] = std::pow(dd, p.q);
    penalty[i] = 0.5 * (du_q[i] * ln_q(du, p) + dd_q[i] * ln_q(dd, p)) / p.gamma;
  }

  InnerValue out;
  out.value = AdaptedProcess::node(m);
  out.optimal_eta = AdaptedProcess::integrand(m);
  auto leaves = out.value.level(m.steps);
  for (std::uint64_t id = 0; id < leaves.size(); ++id) leaves[id] = zeta[id];

  for (int k = m.steps - 1; k >= 0; --k) {
    auto cur = out.value.level(k);
    auto next = out.value.level(k + 1);
    for (std::uint64_t id = 0; id < cur.size(); ++id) {
      const double vu = next[2 * id];
      const double vd = next[2 * id + 1];
      double best = std::numeric_limits<double>::infinity();
      double best_eta = 0.0;
      for (std::size_t i = 0; i < gn; ++i) {
        const double val = 0.5 * (du_q[i] * vu + dd_q[i] * vd) + penalty[i];
        if (val < best) {
          best = val;
          best_eta = eta_grid[i];
        }
      }
      cur[id] = utility.at(k, id) * m.dt + best;
      out.optimal_eta.at(k, id) = best_eta;
    }
  }
  out.value0 = out.value.at(0, 0);
  return out;
}

InnerValue inner_closed_form(const LatticeModel& m, std::span<const double> zeta,
                             const AdaptedProcess& utility, const QParams& p) {
  check_inner_inputs(m, zeta, utility, p);
  if (p.q <= 1.0)
    throw std::invalid_argument(
        "inner_closed_form: the per-step minimizer is only valid for q > 1 "
        "(for 0 < q < 1 the one-step objective can lose convexity)");

  InnerValue out;
  out.value = AdaptedProcess::node(m);
  out.optimal_eta = AdaptedProcess::integrand(m);
  auto leaves = out.value.level(m.steps);
  for (std::uint64_t id = 0; id < leaves.size(); ++id) leaves[id] = zeta[id];

  for (int k = m.steps - 1; k >= 0; --k) {
    auto cur = out.value.level(k);
    auto next = out.value.level(k + 1);
    for (std::uint64_t id = 0; id < cur.size(); ++id) {
      const double eu = exp_q(-p.gamma * next[2 * id], p);
      const double ed = exp_q(-p.gamma * next[2 * id + 1], p);
      const double mean = 0.5 * (eu + ed);
      cur[id] = utility.at(k, id) * m.dt - ln_q(mean, p) / p.gamma;
      // d* = e / mean on each branch; recover eta from d* = 1 + eta dB.
      out.optimal_eta.at(k, id) = (eu - ed) / (2.0 * mean * m.sqrt_dt);
    }
  }
  out.value0 = out.value.at(0, 0);
  return out;
}

double evaluate_objective(const LatticeModel& m, std::span<const double> zeta,
                          const AdaptedProcess& utility, const QParams& p,
                          const MeasureChange& mc) {
  check_inner_inputs(m, zeta, utility, p);

  auto leaf_density = mc.density.level(m.steps);
  double terminal = 0.0;
  for (std::uint64_t id = 0; id < leaf_density.size(); ++id)
    terminal += std::pow(leaf_density[id], p.q) * zeta[id];
  terminal /= static_cast<double>(leaf_density.size());

  double running = 0.0;
  for (int k = 0; k < m.steps; ++k) {
    auto dens = mc.density.level(k);
    auto util = utility.level(k);
    double level_sum = 0.0;
    for (std::uint64_t id = 0; id < dens.size(); ++id)
      level_sum += std::pow(dens[id], p.q) * util[id];
    running += level_sum / static_cast<double>(dens.size());
  }
  running *= m.dt;

  return terminal + running + tsallis_entropy(m, mc, p) / p.gamma;
}

}  // namespace qrobust
