#include "qrobust/utility.hpp"

#include <cmath>
#include <stdexcept>

#include "qrobust/errors.hpp"

namespace qrobust {

void UtilitySpec::validate() const {
  if (!(p0 > 0.0) || !(p0 < 1.0))
    throw std::invalid_argument("UtilitySpec: p0 must lie in (0, 1)");
}

double UtilitySpec::u(double x) const {
  if (!(x >= 0.0)) throw std::domain_error("utility: argument must be nonnegative");
  return std::pow(x, p0);
}

double UtilitySpec::du(double x) const {
  if (!(x > 0.0)) throw std::domain_error("marginal utility: argument must be positive");
  return p0 * std::pow(x, p0 - 1.0);
}

double UtilitySpec::inv_du(double y) const {
  if (!(y > 0.0)) throw std::domain_error("inverse marginal utility: argument must be positive");
  return std::pow(y / p0, 1.0 / (p0 - 1.0));
}

double g_value(const UtilitySpec& us, const QParams& p, double x) {
  return exp_q(-p.gamma * us.u(x), p);
}

double g_prime(const UtilitySpec& us, const QParams& p, double x) {
  return -p.gamma * std::pow(g_value(us, p, x), p.q) * us.du(x);
}

double g_second(const UtilitySpec& us, const QParams& p, double x) {
  const double e = g_value(us, p, x);
  const double hp = us.du(x);
  const double hpp = us.p0 * (us.p0 - 1.0) * std::pow(x, us.p0 - 2.0);
  // d/dx [-gamma e^q h'] = -gamma e^q (h'' - gamma q e^{q-1} h'^2).
  return -p.gamma * std::pow(e, p.q) * (hpp - p.gamma * p.q * std::pow(e, p.q - 1.0) * hp * hp);
}

double inv_g_prime(const UtilitySpec& us, const QParams& p, double z) {
  us.validate();
  p.validate();
  if (!(z < 0.0)) throw std::domain_error("inv_g_prime: argument must be negative");

  // g' is strictly increasing: shrink/grow a bracket geometrically.
  double lo = 1.0, hi = 1.0;
  int guard = 0;
  while (g_prime(us, p, lo) > z) {
    lo *= 0.5;
    if (++guard > 2000) throw ConvergenceError("inv_g_prime: bracket expansion failed (low)");
  }
  guard = 0;
  while (g_prime(us, p, hi) < z) {
    hi *= 2.0;
    if (++guard > 2000) throw ConvergenceError("inv_g_prime: bracket expansion failed (high)");
  }

  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = g_prime(us, p, x) - z;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    const double fp = g_second(us, p, x);
    double next = (fp > 0.0) ? x - f / fp : 0.5 * (lo + hi);
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-10 * std::max(1.0, std::abs(next))) return next;
    x = next;
  }
  throw ConvergenceError("inv_g_prime: Newton failed to converge");
}

}  // namespace qrobust
