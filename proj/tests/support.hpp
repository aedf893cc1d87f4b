#pragma once

// Shared helpers for the test suites: smooth path-functional instances (so
// one problem refines across lattice resolutions) and random process
// generators.

#include <random>
#include <vector>

#include "qrobust/lattice.hpp"

namespace qtest {

struct SmoothInstance {
  double mid = 1.2, amp = 0.6;   // zeta = mid + amp tanh(w1 B_T + b1)
  double w1 = 0.6, b1 = 0.1;
  double u_lo = 0.005, u_hi = 0.02;  // U = u_lo + (u_hi-u_lo)(1+tanh(w2 B + b2))/2
  double w2 = 0.5, b2 = -0.2;

  std::vector<double> zeta(const qrobust::LatticeModel& m) const {
    std::vector<double> z(m.leaf_count());
    for (std::uint64_t id = 0; id < z.size(); ++id)
      z[id] = mid + amp * std::tanh(w1 * qrobust::brownian_at(m, m.steps, id) + b1);
    return z;
  }

  qrobust::AdaptedProcess utility(const qrobust::LatticeModel& m) const {
    auto u = qrobust::AdaptedProcess::integrand(m);
    for (int k = 0; k < m.steps; ++k)
      for (std::uint64_t id = 0; id < u.width(k); ++id)
        u.at(k, id) = u_lo + (u_hi - u_lo) * 0.5 *
                                (1.0 + std::tanh(w2 * qrobust::brownian_at(m, k, id) + b2));
    return u;
  }
};

inline SmoothInstance random_smooth_instance(std::mt19937_64& rng, double zeta_lo,
                                             double zeta_hi, double u_cap) {
  std::uniform_real_distribution<double> slope(0.3, 1.0);
  std::uniform_real_distribution<double> shift(-0.5, 0.5);
  SmoothInstance inst;
  inst.mid = 0.5 * (zeta_lo + zeta_hi);
  inst.amp = 0.5 * (zeta_hi - zeta_lo);
  inst.w1 = slope(rng);
  inst.b1 = shift(rng);
  inst.u_lo = 0.3 * u_cap;
  inst.u_hi = u_cap;
  inst.w2 = slope(rng);
  inst.b2 = shift(rng);
  return inst;
}

inline qrobust::AdaptedProcess random_eta(const qrobust::LatticeModel& m,
                                          std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  auto eta = qrobust::AdaptedProcess::integrand(m);
  for (int k = 0; k < m.steps; ++k)
    for (std::uint64_t id = 0; id < eta.width(k); ++id)
      eta.at(k, id) = dist(rng) / m.sqrt_dt;
  return eta;
}

inline qrobust::Strategy random_interior_strategy(const qrobust::LatticeModel& m,
                                                  std::mt19937_64& rng, double c_lo,
                                                  double c_hi, double xi_lo, double xi_hi) {
  std::uniform_real_distribution<double> c_dist(c_lo, c_hi);
  std::uniform_real_distribution<double> xi_dist(xi_lo, xi_hi);
  qrobust::Strategy s;
  s.consumption = qrobust::AdaptedProcess::integrand(m);
  for (int k = 0; k < m.steps; ++k)
    for (std::uint64_t id = 0; id < s.consumption.width(k); ++id)
      s.consumption.at(k, id) = c_dist(rng);
  s.terminal.resize(m.leaf_count());
  for (auto& xi : s.terminal) xi = xi_dist(rng);
  return s;
}

}  // namespace qtest
