#include "qrobust/optimal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qrobust/errors.hpp"
#include "qrobust/measures.hpp"

namespace qrobust {

double adjoint_kernel_value(const LatticeModel& m, AdjointKernel kernel) {
  return kernel == AdjointKernel::Theta ? -m.theta : -m.sigma * m.theta;
}

AdaptedProcess consumption_utility(const LatticeModel& m, const UtilitySpec& us,
                                   const AdaptedProcess& consumption) {
  AdaptedProcess out = AdaptedProcess::integrand(m);
  for (int k = 0; k < m.steps; ++k) {
    auto c = consumption.level(k);
    auto u = out.level(k);
    for (std::uint64_t id = 0; id < c.size(); ++id) u[id] = us.u(c[id]);
  }
  return out;
}

std::vector<double> terminal_g(const UtilitySpec& us, const QParams& p,
                               std::span<const double> terminal_wealth) {
  std::vector<double> g(terminal_wealth.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = g_value(us, p, terminal_wealth[i]);
  return g;
}

BsdeSolution solve_at_strategy(const LatticeModel& m, const QParams& p,
                               const UtilitySpec& us, const Strategy& s) {
  validate_strategy(m, s);
  const std::vector<double> terminal = terminal_g(us, p, s.terminal);
  const AdaptedProcess utility = consumption_utility(m, us, s.consumption);
  return solve_transformed(m, terminal, utility, p);
}

AdjointPair adjoints(const LatticeModel& m, const QParams& p, const UtilitySpec& us,
                     const AdaptedProcess& consumption, const AdaptedProcess& ybar,
                     AdjointKernel kernel) {
  p.validate();
  us.validate();
  AdjointPair pair;
  pair.gamma_proc = AdaptedProcess::node(m);
  pair.gamma_proc.at(0, 0) = 1.0;
  for (int k = 0; k < m.steps; ++k) {
    auto cur = pair.gamma_proc.level(k);
    auto next = pair.gamma_proc.level(k + 1);
    for (std::uint64_t id = 0; id < cur.size(); ++id) {
      const double rate = p.gamma * p.q * std::pow(ybar.at(k, id), p.q - 1.0) *
                          us.u(consumption.at(k, id));
      const double factor = std::exp(-rate * m.dt);
      next[2 * id] = cur[id] * factor;
      next[2 * id + 1] = cur[id] * factor;
    }
  }
  pair.wealth_adj = exponential_density(m, adjoint_kernel_value(m, kernel));
  return pair;
}

double ResidualStats::max_rel() const {
  return std::max(terminal_max, consumption_max);
}

namespace {

// A candidate is interior when xi > 0 everywhere and c is either interior
// or identically zero (the u == 0 branch, where the consumption condition
// is vacuous). Returns whether consumption residuals apply.
bool require_interior(const LatticeModel& m, const Strategy& s) {
  validate_strategy(m, s);
  bool any_zero = false, any_positive = false;
  for (int k = 0; k < m.steps; ++k)
    for (double c : s.consumption.level(k)) (c > 0.0 ? any_positive : any_zero) = true;
  if (any_zero && any_positive)
    throw std::domain_error("max principle: candidate consumption must be interior (> 0)");
  for (double xi : s.terminal)
    if (!(xi > 0.0))
      throw std::domain_error("max principle: candidate terminal wealth must be interior (> 0)");
  return any_positive;
}

// Worst-case density at a candidate via the closed form
// D0_k = (Ybar_k / Ybar_0) Gamma_k^{1/q}.
AdaptedProcess worst_case_density(const LatticeModel& m, const QParams& p,
                                  const AdaptedProcess& ybar,
                                  const AdaptedProcess& gamma_proc) {
  AdaptedProcess d = AdaptedProcess::node(m);
  const double ybar0 = ybar.at(0, 0);
  for (int k = 0; k <= m.steps; ++k) {
    auto level = d.level(k);
    for (std::uint64_t id = 0; id < level.size(); ++id)
      level[id] = ybar.at(k, id) / ybar0 * std::pow(gamma_proc.at(k, id), 1.0 / p.q);
  }
  return d;
}

}  // namespace

ResidualStats max_principle_residuals(const LatticeModel& m, const QParams& p,
                                      const UtilitySpec& us, const Strategy& candidate,
                                      double v, AdjointKernel kernel) {
  if (!(v < 0.0)) throw std::invalid_argument("max principle: v must be negative");
  const bool with_consumption = require_interior(m, candidate);

  const BsdeSolution sol = solve_at_strategy(m, p, us, candidate);
  const AdjointPair adj = adjoints(m, p, us, candidate.consumption, sol.value, kernel);
  const AdaptedProcess d0 = worst_case_density(m, p, sol.value, adj.gamma_proc);
  const AdaptedProcess& dtilde = adj.wealth_adj;
  const double ybar0_q = std::pow(sol.value.at(0, 0), p.q);

  ResidualStats stats;
  // Terminal condition, leaf by leaf.
  {
    auto leaves_d0 = d0.level(m.steps);
    double sum = 0.0;
    for (std::uint64_t id = 0; id < leaves_d0.size(); ++id) {
      const double lhs = -p.gamma * ybar0_q * std::pow(leaves_d0[id], p.q) *
                         us.du(candidate.terminal[id]);
      const double rhs = v * dtilde.at(m.steps, id);
      const double rel = std::abs(lhs / rhs - 1.0);
      stats.terminal_max = std::max(stats.terminal_max, rel);
      sum += rel;
    }
    stats.terminal_mean = sum / static_cast<double>(leaves_d0.size());
  }
  // Consumption condition, node by node (vacuous on the u == 0 branch).
  if (with_consumption) {
    double sum = 0.0;
    std::uint64_t count = 0;
    for (int k = 0; k < m.steps; ++k) {
      auto level_d0 = d0.level(k);
      for (std::uint64_t id = 0; id < level_d0.size(); ++id) {
        const double lhs = -p.gamma * ybar0_q * std::pow(level_d0[id], p.q) *
                           us.du(candidate.consumption.at(k, id));
        const double rhs = v * dtilde.at(k, id);
        const double rel = std::abs(lhs / rhs - 1.0);
        stats.consumption_max = std::max(stats.consumption_max, rel);
        sum += rel;
        ++count;
      }
    }
    stats.consumption_mean = sum / static_cast<double>(count);
  }
  // The adjoint form Gamma_N g'(xi) = v H_N, evaluated on its own route.
  {
    for (std::uint64_t id = 0; id < m.leaf_count(); ++id) {
      const double lhs = adj.gamma_proc.at(m.steps, id) *
                         g_prime(us, p, candidate.terminal[id]);
      const double rhs = v * adj.wealth_adj.at(m.steps, id);
      stats.remark_gap = std::max(stats.remark_gap, std::abs(lhs / rhs - 1.0));
    }
  }
  return stats;
}

double consumption_formula_gap(const LatticeModel& m, const QParams& p,
                               const UtilitySpec& us, const Strategy& candidate,
                               double v, AdjointKernel kernel) {
  if (!(v < 0.0)) throw std::invalid_argument("consumption_formula_gap: v must be negative");
  require_interior(m, candidate);

  const BsdeSolution sol = solve_at_strategy(m, p, us, candidate);
  const AdjointPair adj = adjoints(m, p, us, candidate.consumption, sol.value, kernel);

  // Multiplicative lattice density from eta = Zbar / Ybar.
  AdaptedProcess eta = AdaptedProcess::integrand(m);
  for (int k = 0; k < m.steps; ++k)
    for (std::uint64_t id = 0; id < eta.width(k); ++id)
      eta.at(k, id) = sol.integrand.at(k, id) / sol.value.at(k, id);
  const MeasureChange mult = density_from_eta(m, eta);

  const double ybar0 = sol.value.at(0, 0);
  double gap = 0.0;
  for (int k = 0; k < m.steps; ++k) {
    for (std::uint64_t id = 0; id < eta.width(k); ++id) {
      const double via_density =
          us.inv_du(-v / p.gamma * std::pow(ybar0 * mult.density.at(k, id), -p.q) *
                    adj.wealth_adj.at(k, id));
      const double via_adjoints =
          us.inv_du(-v / p.gamma * adj.wealth_adj.at(k, id) *
                    std::pow(sol.value.at(k, id), -p.q) / adj.gamma_proc.at(k, id));
      gap = std::max(gap, std::abs(via_density / via_adjoints - 1.0));
    }
  }
  return gap;
}

FbSolution solve_fb_system(const LatticeModel& m, const QParams& p, const UtilitySpec& us,
                           double v, const FbOptions& opts) {
  p.validate();
  us.validate();
  if (!(v < 0.0)) throw std::invalid_argument("solve_fb_system: v must be negative");

  FbSolution fb;
  fb.strategy.consumption = AdaptedProcess::integrand(m);
  fb.strategy.terminal.assign(m.leaf_count(), 1.0);

  // Fixed point state: Ybar == 1, Gamma == 1 to start; H never changes.
  AdaptedProcess ybar = AdaptedProcess::node(m, 1.0);
  AdaptedProcess gamma_proc = AdaptedProcess::node(m, 1.0);
  const AdaptedProcess wealth_adj =
      exponential_density(m, adjoint_kernel_value(m, opts.kernel));

  double ybar0_prev = 1.0;
  BsdeSolution sol;
  std::ostringstream trace;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const bool damped = it > opts.damping_after;
    // (a) strategy from the inverse marginals
    if (!opts.no_consumption) {
      for (int k = 0; k < m.steps; ++k) {
        for (std::uint64_t id = 0; id < fb.strategy.consumption.width(k); ++id) {
          const double arg = -v / p.gamma * wealth_adj.at(k, id) *
                             std::pow(ybar.at(k, id), -p.q) / gamma_proc.at(k, id);
          const double cand = us.inv_du(arg);
          double& c = fb.strategy.consumption.at(k, id);
          c = damped ? c + opts.damping * (cand - c) : cand;
        }
      }
    }
    for (std::uint64_t id = 0; id < m.leaf_count(); ++id) {
      const double cand =
          inv_g_prime(us, p, v * wealth_adj.at(m.steps, id) / gamma_proc.at(m.steps, id));
      double& xi = fb.strategy.terminal[id];
      xi = damped ? xi + opts.damping * (cand - xi) : cand;
    }
    // (b) re-solve the transformed BSDE at the strategy
    sol = solve_at_strategy(m, p, us, fb.strategy);
    ybar = sol.value;
    // (c) refresh Gamma
    gamma_proc = adjoints(m, p, us, fb.strategy.consumption, ybar, opts.kernel).gamma_proc;

    const double ybar0 = ybar.at(0, 0);
    const double change = std::abs(ybar0 - ybar0_prev);
    if (it > 1 && change <= opts.tol) {
      fb.ybar = sol;
      fb.adjoint.gamma_proc = gamma_proc;
      fb.adjoint.wealth_adj = wealth_adj;
      fb.iterations = it;
      return fb;
    }
    ybar0_prev = ybar0;
    if (it > opts.max_iterations - 5)
      trace << "it " << it << ": Ybar0 = " << ybar0 << ", change = " << change << "; ";
  }
  throw ConvergenceError("solve_fb_system: no fixed point after " +
                         std::to_string(opts.max_iterations) +
                         " iterations (v = " + std::to_string(v) + "): " + trace.str());
}

namespace {

double replication_cost(const LatticeModel& m, const Strategy& s) {
  return replicate(m, s).x0;
}

}  // namespace

OptimizationReport shoot_for_budget(const LatticeModel& m, const QParams& p,
                                    const UtilitySpec& us, double x,
                                    const ShootOptions& opts) {
  if (!(x > 0.0)) throw std::invalid_argument("shoot_for_budget: x must be positive");

  auto cost_at = [&](double v) {
    return replication_cost(m, solve_fb_system(m, p, us, v, opts.fb).strategy);
  };

  // X0(v) is increasing in v on (-inf, 0): bracket by geometric expansion
  // from v = -1.
  double v_lo = -1.0, v_hi = -1.0;
  double cost = cost_at(-1.0);
  int expansions = 0;
  if (cost < x) {
    while (cost < x) {
      if (++expansions > opts.max_expansions)
        throw ConvergenceError("shoot_for_budget: bracket expansion failed (v -> 0)");
      v_lo = v_hi;
      v_hi *= 0.5;
      cost = cost_at(v_hi);
    }
  } else {
    while (cost > x) {
      if (++expansions > opts.max_expansions)
        throw ConvergenceError("shoot_for_budget: bracket expansion failed (v -> -inf)");
      v_hi = v_lo;
      v_lo *= 2.0;
      cost = cost_at(v_lo);
    }
  }

  OptimizationReport report;
  double v_mid = 0.5 * (v_lo + v_hi);
  for (int it = 1; it <= opts.max_bisections; ++it) {
    v_mid = 0.5 * (v_lo + v_hi);
    const FbSolution fb = solve_fb_system(m, p, us, v_mid, opts.fb);
    const double x0 = replication_cost(m, fb.strategy);
    report.iterations = it;
    if (std::abs(x0 - x) <= opts.budget_rel_tol * x) {
      report.v_star = v_mid;
      report.strategy = fb.strategy;
      report.x0 = x0;
      report.ybar0 = fb.ybar.value.at(0, 0);
      report.y0 = -ln_q(report.ybar0, p) / p.gamma;
      report.residuals = max_principle_residuals(m, p, us, fb.strategy, v_mid, opts.fb.kernel);
      return report;
    }
    if (x0 < x)
      v_lo = v_mid;
    else
      v_hi = v_mid;
  }
  throw ConvergenceError("shoot_for_budget: budget not met after " +
                         std::to_string(opts.max_bisections) + " bisections (last v = " +
                         std::to_string(v_mid) + ")");
}

NoConsumptionReport no_consumption_example(const LatticeModel& m, const QParams& p,
                                           const UtilitySpec& us, double x,
                                           const ShootOptions& opts) {
  if (!(x > 0.0)) throw std::invalid_argument("no_consumption_example: x must be positive");

  // Route (i): fixed-point system with consumption pinned to zero. The
  // multiplier search reuses the budget shooter at a tight tolerance so
  // the two multipliers are comparable at the leaf-gap scale.
  ShootOptions tight = opts;
  tight.fb.no_consumption = true;
  tight.budget_rel_tol = std::min(opts.budget_rel_tol, 1e-10);
  const OptimizationReport fb_report = shoot_for_budget(m, p, us, x, tight);

  // Route (ii): static dual closed form xi* = ((-g)')^{-1}(y Dtilde_N) with
  // y solved from the budget E[Dtilde_N xi*] = x.
  const AdaptedProcess dtilde = pricing_density(m);
  auto leaves = dtilde.level(m.steps);
  auto budget_at = [&](double y) {
    double sum = 0.0;
    for (std::uint64_t id = 0; id < leaves.size(); ++id)
      sum += leaves[id] * inv_g_prime(us, p, -y * leaves[id]);
    return sum / static_cast<double>(leaves.size());
  };
  double y_lo = 1.0, y_hi = 1.0;
  int guard = 0;
  while (budget_at(y_lo) < x) {  // budget decreasing in y
    y_lo *= 0.5;
    if (++guard > 200) throw ConvergenceError("no_consumption_example: bracket failed (y -> 0)");
  }
  guard = 0;
  while (budget_at(y_hi) > x) {
    y_hi *= 2.0;
    if (++guard > 200)
      throw ConvergenceError("no_consumption_example: bracket failed (y -> inf)");
  }
  double y = 0.5 * (y_lo + y_hi);
  for (int it = 0; it < 200; ++it) {
    y = 0.5 * (y_lo + y_hi);
    const double b = budget_at(y);
    if (std::abs(b - x) <= 1e-12 * x) break;
    if (b > x)
      y_lo = y;
    else
      y_hi = y;
  }

  NoConsumptionReport report;
  report.fb_strategy = fb_report.strategy;
  report.multiplier = y;
  report.xi_dual.resize(leaves.size());
  double direct_mean = 0.0;
  double gap = 0.0;
  for (std::uint64_t id = 0; id < leaves.size(); ++id) {
    report.xi_dual[id] = inv_g_prime(us, p, -y * leaves[id]);
    gap = std::max(gap, std::abs(report.xi_dual[id] - fb_report.strategy.terminal[id]));
    direct_mean += g_value(us, p, report.xi_dual[id]);
  }
  direct_mean /= static_cast<double>(leaves.size());
  report.max_leaf_gap = gap;
  report.value_fb = fb_report.y0;
  report.value_direct = -ln_q(direct_mean, p) / p.gamma;
  return report;
}

double auxiliary_value(const LatticeModel& m, const QParams& p, const UtilitySpec& us,
                       const Strategy& candidate, double x, double v) {
  const BsdeSolution sol = solve_at_strategy(m, p, us, candidate);
  const double x0 = replication_cost(m, candidate);
  return sol.value.at(0, 0) + v * (x - x0);
}

BsdeSolution solve_strategy_derivative(const LatticeModel& m, const QParams& p,
                                       const UtilitySpec& us, const Strategy& base,
                                       const StrategyDirection& dir,
                                       const BsdeSolution& base_sol) {
  if (!base_sol.transformed)
    throw std::invalid_argument("solve_strategy_derivative: base solution must be transformed");
  const AdaptedProcess base_utility = consumption_utility(m, us, base.consumption);

  AdaptedProcess source = AdaptedProcess::integrand(m);
  for (int k = 0; k < m.steps; ++k) {
    for (std::uint64_t id = 0; id < source.width(k); ++id) {
      const double dc = dir.consumption.at(k, id);
      if (dc == 0.0) continue;  // avoids du at a zero base
      source.at(k, id) = -p.gamma * std::pow(base_sol.value.at(k, id), p.q) *
                         us.du(base.consumption.at(k, id)) * dc;
    }
  }
  std::vector<double> terminal(m.leaf_count(), 0.0);
  for (std::uint64_t id = 0; id < terminal.size(); ++id) {
    const double dxi = dir.terminal[id];
    if (dxi != 0.0) terminal[id] = g_prime(us, p, base.terminal[id]) * dxi;
  }
  return solve_derivative(m, p, base_sol, base_utility, source, terminal);
}

double DerivativeCheck::gap() const { return std::abs(lhs - rhs); }

DerivativeCheck variational_identity(const LatticeModel& m, const QParams& p,
                                     const UtilitySpec& us, const Strategy& base,
                                     const StrategyDirection& dir, double v) {
  const BsdeSolution base_sol = solve_at_strategy(m, p, us, base);
  const BsdeSolution deriv = solve_strategy_derivative(m, p, us, base, dir, base_sol);
  const AdaptedProcess dtilde = pricing_density(m);

  DerivativeCheck check;
  check.dybar0 = deriv.value.at(0, 0);

  // Replication cost is linear in the strategy.
  double dx0 = 0.0;
  for (std::uint64_t id = 0; id < m.leaf_count(); ++id)
    dx0 += dtilde.at(m.steps, id) * dir.terminal[id];
  dx0 /= static_cast<double>(m.leaf_count());
  for (int k = 0; k < m.steps; ++k) {
    double level_sum = 0.0;
    for (std::uint64_t id = 0; id < dir.consumption.width(k); ++id)
      level_sum += dtilde.at(k, id) * dir.consumption.at(k, id);
    dx0 += level_sum / static_cast<double>(dir.consumption.width(k)) * m.dt;
  }
  check.dx0 = dx0;
  check.lhs = check.dybar0 - v * check.dx0;

  // Discrete variational weights W_{k+1} = W_k / (1 + gamma q Ybar^{q-1} u dt),
  // the exact pathwise adjoint of the implicit scheme.
  AdaptedProcess weights = AdaptedProcess::node(m, 1.0);
  double rhs = 0.0;
  for (int k = 0; k < m.steps; ++k) {
    double level_sum = 0.0;
    for (std::uint64_t id = 0; id < weights.width(k); ++id) {
      const double ybar = base_sol.value.at(k, id);
      const double c0 = base.consumption.at(k, id);
      const double decay =
          p.gamma * p.q * std::pow(ybar, p.q - 1.0) * us.u(c0);
      const double w_next = weights.at(k, id) / (1.0 + decay * m.dt);
      weights.at(k + 1, 2 * id) = w_next;
      weights.at(k + 1, 2 * id + 1) = w_next;
      const double dc = dir.consumption.at(k, id);
      if (dc != 0.0) {
        const double f_c = -p.gamma * std::pow(ybar, p.q) * us.du(c0);
        level_sum += (w_next * f_c - v * dtilde.at(k, id)) * dc;
      }
    }
    rhs += level_sum / static_cast<double>(weights.width(k)) * m.dt;
  }
  double leaf_sum = 0.0;
  for (std::uint64_t id = 0; id < m.leaf_count(); ++id) {
    const double dxi = dir.terminal[id];
    if (dxi != 0.0)
      leaf_sum += (weights.at(m.steps, id) * g_prime(us, p, base.terminal[id]) -
                   v * dtilde.at(m.steps, id)) *
                  dxi;
  }
  rhs += leaf_sum / static_cast<double>(m.leaf_count());
  check.rhs = rhs;
  return check;
}

}  // namespace qrobust
