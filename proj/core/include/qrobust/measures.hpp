#pragma once

#include <cstdint>

#include "qrobust/lattice.hpp"
#include "qrobust/qcalc.hpp"

namespace qrobust {

// Equivalent measure change on the lattice: Girsanov drift eta (one value
// per node, steps 0..N-1) and the induced multiplicative density process
// D_k = prod_{j<k} (1 + eta_j dB_j), D_0 = 1.
struct MeasureChange {
  AdaptedProcess eta;      // steps 0..N-1
  AdaptedProcess density;  // steps 0..N
};

// Builds the density from eta. Every branch factor 1 + eta dB must stay
// positive (|eta| sqrt(dt) < 1), otherwise the induced measure is not
// equivalent to the reference and an error is raised.
MeasureChange density_from_eta(const LatticeModel& m, const AdaptedProcess& eta);

// Tsallis relative entropy H_q(Q|P) = E[(D_N)^q ln_q(D_N)], evaluated as an
// exact sum over all leaf paths.
double tsallis_entropy(const LatticeModel& m, const MeasureChange& mc, const QParams& p);

// Conditional entropy H_{q,k} at a node: exhaustive expectation of
// (D_N / D_k)^q ln_q(D_N / D_k) over the node's subtree.
double conditional_tsallis_entropy(const LatticeModel& m, const MeasureChange& mc,
                                   const QParams& p, int step, std::uint64_t node);

// Discretization gap of the quadratic entropy identity:
//   H_q(Q|P) - (q/2) E[sum_k eta_k^2 (D_k)^q dt].
// Exact in continuous time, O(dt) on the lattice for bounded eta.
double entropy_quadratic_identity_gap(const LatticeModel& m, const MeasureChange& mc,
                                      const QParams& p);

// Exact evaluation for node-constant eta without path enumeration: the
// density depends on the up-move count only, so binomial weights suffice.
// Valid for any N, including far beyond the path-storage cap.
double constant_eta_entropy(const LatticeModel& m, double eta, const QParams& p);
double constant_eta_quadratic_identity_gap(const LatticeModel& m, double eta,
                                           const QParams& p);

}  // namespace qrobust
