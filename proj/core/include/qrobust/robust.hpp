#pragma once

#include <span>
#include <vector>

#include "qrobust/lattice.hpp"
#include "qrobust/measures.hpp"
#include "qrobust/qcalc.hpp"

namespace qrobust {

// Value of the inner robust problem: the dynamic-programming value process
// (leaves equal zeta) and the minimizing Girsanov drift per node.
struct InnerValue {
  AdaptedProcess value;        // steps 0..N
  AdaptedProcess optimal_eta;  // steps 0..N-1
  double value0 = 0.0;
};

// Symmetric eta grid spanning `span_fraction` of the equivalence interval
// (-1/sqrt(dt), 1/sqrt(dt)); the midpoint is exactly 0.
std::vector<double> default_eta_grid(const LatticeModel& m, std::size_t points = 2001,
                                     double span_fraction = 0.9);

// Brute-force dynamic programming: at each node minimizes over the grid the
// one-step functional E[d^q V_next] + U dt + (1/gamma) E[d^q ln_q d] with
// d = 1 + eta dB on the two branches.
InnerValue inner_dp_grid(const LatticeModel& m, std::span<const double> zeta,
                         const AdaptedProcess& utility, const QParams& p,
                         std::span<const double> eta_grid);

// Exact per-step minimizer: d* = exp_q(-gamma V_next) / E[exp_q(-gamma V_next)],
// giving node value U dt - (1/gamma) ln_q E[exp_q(-gamma V_next)]. No grid.
InnerValue inner_closed_form(const LatticeModel& m, std::span<const double> zeta,
                             const AdaptedProcess& utility, const QParams& p);

// Objective of the inner problem at a fixed measure change:
//   E[(D_N)^q zeta] + sum_k E[(D_k)^q U_k] dt + (1/gamma) H_q(Q|P).
double evaluate_objective(const LatticeModel& m, std::span<const double> zeta,
                          const AdaptedProcess& utility, const QParams& p,
                          const MeasureChange& mc);

}  // namespace qrobust
