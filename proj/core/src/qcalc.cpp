#include "qrobust/qcalc.hpp"

#include <cmath>
#include <stdexcept>

namespace qrobust {

void QParams::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("QParams: gamma must be positive");
  if (!(q > 0.0)) throw std::invalid_argument("QParams: q must be positive");
  if (q == 1.0) throw std::invalid_argument("QParams: q = 1 is excluded");
  if (q < 1.0 && !experimental)
    throw std::invalid_argument("QParams: 0 < q < 1 requires the experimental flag");
}

double ln_q(double x, const QParams& p) {
  p.validate();
  if (p.q > 1.0) {
    if (!(x > 0.0)) throw std::domain_error("ln_q: x must be positive for q > 1");
  } else {
    if (!(x >= 0.0)) throw std::domain_error("ln_q: x must be nonnegative");
    if (x == 0.0) return -1.0 / (1.0 - p.q);
  }
  // x^(1-q) evaluated as exp((1-q) log x); expm1 keeps precision near q = 1.
  return std::expm1((1.0 - p.q) * std::log(x)) / (1.0 - p.q);
}

double exp_q(double x, const QParams& p) {
  p.validate();
  const double bracket = 1.0 + (1.0 - p.q) * x;
  if (p.q > 1.0) {
    if (!(bracket > 0.0))
      throw std::domain_error("exp_q: 1 + (1-q) x must be positive for q > 1");
  } else {
    if (bracket < 0.0) throw std::domain_error("exp_q: x below -1/(1-q)");
    if (bracket == 0.0) return 0.0;
  }
  return std::exp(std::log1p((1.0 - p.q) * x) / (1.0 - p.q));
}

double mu(double y, const QParams& p) {
  p.validate();
  const double bracket = 1.0 - (1.0 - p.q) * p.gamma * y;
  if (!(bracket > 0.0))
    throw std::domain_error("mu: 1 - (1-q) gamma y must be positive");
  return bracket / p.q;
}

}  // namespace qrobust
