#pragma once

#include <span>
#include <vector>

#include "qrobust/bsde.hpp"
#include "qrobust/lattice.hpp"
#include "qrobust/qcalc.hpp"
#include "qrobust/utility.hpp"

namespace qrobust {

// Girsanov kernel used for the wealth adjoint H and the pricing density on
// the right-hand side of the first-order conditions. Theta reproduces the
// market's state-price density E(-theta . B); SigmaTheta switches to
// E(-sigma theta . B). Replication and budget identities always price with
// the Theta kernel.
enum class AdjointKernel { Theta, SigmaTheta };

double adjoint_kernel_value(const LatticeModel& m, AdjointKernel kernel);

// U_k = u(c_k) per node.
AdaptedProcess consumption_utility(const LatticeModel& m, const UtilitySpec& us,
                                   const AdaptedProcess& consumption);

// g(xi) per leaf.
std::vector<double> terminal_g(const UtilitySpec& us, const QParams& p,
                               std::span<const double> terminal_wealth);

// Transformed BSDE solved at a strategy: terminal g(xi), rate u(c).
BsdeSolution solve_at_strategy(const LatticeModel& m, const QParams& p,
                               const UtilitySpec& us, const Strategy& s);

// Adjoint pair: Gamma_k = exp(-sum_{j<k} gamma q Ybar_j^{q-1} u(c_j) dt)
// pathwise, and the exponential density H for the chosen kernel.
struct AdjointPair {
  AdaptedProcess gamma_proc;  // steps 0..N, Gamma_0 = 1
  AdaptedProcess wealth_adj;  // steps 0..N, H_0 = 1
};

AdjointPair adjoints(const LatticeModel& m, const QParams& p, const UtilitySpec& us,
                     const AdaptedProcess& consumption, const AdaptedProcess& ybar,
                     AdjointKernel kernel = AdjointKernel::Theta);

// Relative residuals of the first-order conditions at a candidate strategy:
// terminal:    -gamma Ybar_0^q (D0_N)^q h'(xi) = v Dtilde_N   per leaf,
// consumption: -gamma Ybar_0^q (D0_k)^q u'(c_k) = v Dtilde_k  per node,
// where D0 is the worst-case density at the candidate, built from the
// closed form D0_k = (Ybar_k / Ybar_0) Gamma_k^{1/q}. `remark_gap` checks
// the equivalent adjoint form Gamma g' = v H on its own route.
struct ResidualStats {
  double terminal_max = 0.0;
  double terminal_mean = 0.0;
  double consumption_max = 0.0;
  double consumption_mean = 0.0;
  double remark_gap = 0.0;

  double max_rel() const;
};

ResidualStats max_principle_residuals(const LatticeModel& m, const QParams& p,
                                      const UtilitySpec& us, const Strategy& candidate,
                                      double v, AdjointKernel kernel = AdjointKernel::Theta);

// Gap between the two published consumption formulas: one through the
// multiplicative lattice density built from eta = Zbar/Ybar, one through
// (H, Ybar, Gamma). They agree only in the continuous limit; the maximum
// relative gap over nodes is returned, never asserted to vanish.
double consumption_formula_gap(const LatticeModel& m, const QParams& p,
                               const UtilitySpec& us, const Strategy& candidate,
                               double v, AdjointKernel kernel = AdjointKernel::Theta);

struct FbOptions {
  double tol = 1e-10;          // successive change of Ybar_0
  int max_iterations = 200;
  int damping_after = 50;      // switch to damped updates past this count
  double damping = 0.5;
  bool no_consumption = false; // u == 0 branch: consumption pinned to zero
  AdjointKernel kernel = AdjointKernel::Theta;
};

struct FbSolution {
  Strategy strategy;
  BsdeSolution ybar;  // transformed solution at the strategy
  AdjointPair adjoint;
  int iterations = 0;
};

// Picard iteration on the forward-backward system at a fixed multiplier
// v < 0: strategy from the inverse marginals, BSDE re-solve, adjoint
// refresh, until the root value settles.
FbSolution solve_fb_system(const LatticeModel& m, const QParams& p, const UtilitySpec& us,
                           double v, const FbOptions& opts = {});

struct ShootOptions {
  double budget_rel_tol = 1e-6;
  int max_expansions = 60;
  int max_bisections = 200;
  FbOptions fb;
};

struct OptimizationReport {
  double v_star = 0.0;
  Strategy strategy;
  double x0 = 0.0;     // replication cost of the strategy
  double ybar0 = 0.0;  // transformed value at the root
  double y0 = 0.0;     // value of the outer problem
  ResidualStats residuals;
  int iterations = 0;  // bisection count
};

// Bisection on v so that the replication cost of the fixed-point strategy
// meets the initial wealth x; brackets found by geometric expansion.
OptimizationReport shoot_for_budget(const LatticeModel& m, const QParams& p,
                                    const UtilitySpec& us, double x,
                                    const ShootOptions& opts = {});

struct NoConsumptionReport {
  Strategy fb_strategy;         // consumption identically zero
  std::vector<double> xi_dual;  // closed-form dual terminal wealth
  double multiplier = 0.0;      // y in xi* = ((-g)')^{-1}(y Dtilde_N), v = -y
  double value_fb = 0.0;
  double value_direct = 0.0;    // -(1/gamma) ln_q E[exp_q(-gamma h(xi*))]
  double max_leaf_gap = 0.0;
};

// Two independent routes to the no-consumption optimum: the fixed-point
// system with consumption pinned to zero, and the static dual closed form
// with the multiplier solved from the budget.
NoConsumptionReport no_consumption_example(const LatticeModel& m, const QParams& p,
                                           const UtilitySpec& us, double x,
                                           const ShootOptions& opts = {});

// Lagrangian functional Ybar_0(candidate) + v (x - X_0(candidate)).
double auxiliary_value(const LatticeModel& m, const QParams& p, const UtilitySpec& us,
                       const Strategy& candidate, double x, double v);

// Direction (c - c0, xi - xi0) for the variational machinery; entries may
// be negative.
struct StrategyDirection {
  AdaptedProcess consumption;
  std::vector<double> terminal;
};

// Linear BSDE for the Gateaux derivative of the transformed value along a
// direction, with coefficients frozen at the base strategy.
BsdeSolution solve_strategy_derivative(const LatticeModel& m, const QParams& p,
                                       const UtilitySpec& us, const Strategy& base,
                                       const StrategyDirection& dir,
                                       const BsdeSolution& base_sol);

// Both sides of the adjoint representation of the derivative:
//   dYbar_0 - v dX_0 = E[(W_N g'(xi0) - v D_N)(dxi) + sum (W f_c - v D)(dc) dt],
// the left side from the derivative BSDE and the replication-cost
// derivative, the right side from the discrete variational weights
// W = prod (1 + gamma q Ybar^{q-1} u(c0) dt)^{-1}.
struct DerivativeCheck {
  double dybar0 = 0.0;
  double dx0 = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap() const;
};

DerivativeCheck variational_identity(const LatticeModel& m, const QParams& p,
                                     const UtilitySpec& us, const Strategy& base,
                                     const StrategyDirection& dir, double v);

}  // namespace qrobust
