#pragma once

#include <span>

#include "qrobust/lattice.hpp"
#include "qrobust/qcalc.hpp"

namespace qrobust {

// Paired value process and martingale integrand on the lattice. When
// `transformed` is set the pair stores (Ybar, Zbar) = (exp_q(-gamma Y),
// -gamma Ybar^q Z), otherwise (Y, Z).
struct BsdeSolution {
  AdaptedProcess value;      // steps 0..N
  AdaptedProcess integrand;  // steps 0..N-1
  bool transformed = false;
};

// Backward solver for the monotone-generator form
//   Ybar_t = terminal - int_t^T gamma Ybar_s^q U_s ds - int_t^T Zbar dB.
// Each node solves y + gamma y^q U dt = E[Ybar_{k+1}] implicitly; the root
// is unique and positive. `terminal` holds leaf values in (0, 1], `utility`
// the nonnegative rate process U on steps 0..N-1.
BsdeSolution solve_transformed(const LatticeModel& m, std::span<const double> terminal,
                               const AdaptedProcess& utility, const QParams& p);

// Diagnostic solver for the quadratic form
//   Y_t = zeta - int_t^T (gamma/2 |Z|^2 / mu(Y) - U) ds - int_t^T Z dB,
// implicit Euler per node with Z from the two-branch decomposition.
// Supported for q > 1 only; a mu-domain error signals too-coarse dt.
BsdeSolution solve_untransformed(const LatticeModel& m, std::span<const double> zeta,
                                 const AdaptedProcess& utility, const QParams& p);

// (Ybar, Zbar) -> (Y, Z): Y = -(1/gamma) ln_q(Ybar), Z = -Zbar / (gamma Ybar^q)
// with the node's own Ybar.
BsdeSolution invert_transform(const BsdeSolution& sol, const QParams& p);

// (Y, Z) -> (Ybar, Zbar), the inverse of invert_transform.
BsdeSolution apply_transform(const BsdeSolution& sol, const QParams& p);

// Linear (variational) BSDE solved backward:
//   dY_k (1 + gamma q Ybar_k^{q-1} U_k dt) = E[dY_{k+1}] + source_k dt,
// the derivative equation of the transformed BSDE along a strategy
// direction. `base` must hold the transformed solution at the base
// strategy.
BsdeSolution solve_derivative(const LatticeModel& m, const QParams& p,
                              const BsdeSolution& base, const AdaptedProcess& utility,
                              const AdaptedProcess& source,
                              std::span<const double> terminal);

}  // namespace qrobust
