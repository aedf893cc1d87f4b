#pragma once

namespace qrobust {

// Entropy order q and ambiguity aversion gamma. q > 1 is the supported
// regime. Setting `experimental` admits 0 < q < 1, where uniqueness of the
// downstream fixed points is not guaranteed; q = 1 is always rejected.
struct QParams {
  double q = 2.0;
  double gamma = 1.0;
  bool experimental = false;

  void validate() const;
  bool subcritical() const { return q < 1.0; }
};

// q-logarithm (x^(1-q) - 1)/(1 - q); strictly increasing on its domain.
// Domain: x > 0 for q > 1, x >= 0 for 0 < q < 1.
double ln_q(double x, const QParams& p);

// q-exponential [1 + (1-q) x]^(1/(1-q)), the inverse of ln_q.
// Domain: 1 + (1-q) x > 0 for q > 1, >= 0 for 0 < q < 1.
// For q > 1 and x <= 0 the value lies in (0, 1].
double exp_q(double x, const QParams& p);

// Generator coefficient (1/q)(1 - (1-q) gamma y); algebraically equal to
// (1/q) exp_q(-gamma y)^(1-q). Requires a positive bracket.
double mu(double y, const QParams& p);

}  // namespace qrobust
