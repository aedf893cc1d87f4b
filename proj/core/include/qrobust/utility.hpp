#pragma once

#include "qrobust/qcalc.hpp"

namespace qrobust {

// Power utility catalog: u(x) = h(x) = x^{p0} with p0 in (0, 1). Strictly
// increasing, concave, Inada at both ends, with closed-form inverse
// marginals.
struct UtilitySpec {
  double p0 = 0.5;

  void validate() const;
  double u(double x) const;       // x^{p0}
  double du(double x) const;      // p0 x^{p0-1}
  double inv_du(double y) const;  // I1: (u')^{-1}, y > 0
};

// Terminal-wealth transform g(x) = exp_q(-gamma h(x)) and derivatives.
// g is convex and decreasing, g' strictly increasing from -inf to 0.
double g_value(const UtilitySpec& us, const QParams& p, double x);
double g_prime(const UtilitySpec& us, const QParams& p, double x);
double g_second(const UtilitySpec& us, const QParams& p, double x);

// I3: inverse of g' on (-inf, 0), safeguarded Newton on a bracketed
// interval, relative tolerance 1e-10.
double inv_g_prime(const UtilitySpec& us, const QParams& p, double z);

}  // namespace qrobust
