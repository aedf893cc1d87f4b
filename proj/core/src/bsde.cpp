#include "qrobust/bsde.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qrobust/errors.hpp"

namespace qrobust {

namespace {

constexpr double kRootTol = 1e-12;  // absolute tolerance on the value iterate
constexpr int kMaxRootIter = 200;

// Solves y + a y^q = target for y > 0 (a >= 0, target > 0). The left side
// is strictly increasing, so the root is unique and lies in (0, target].
// Safeguarded Newton with a maintained bracket.
double monotone_root(double a, double q, double target, int step, std::uint64_t node) {
  if (a == 0.0) return target;
  double lo = 0.0;
  double hi = target;
  double y = target;
  for (int it = 0; it < kMaxRootIter; ++it) {
    const double yq = std::pow(y, q);
    const double f = y + a * yq - target;
    if (f > 0.0)
      hi = y;
    else
      lo = y;
    const double fp = 1.0 + a * q * yq / y;
    double next = y - f / fp;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - y) <= kRootTol) return next;
    y = next;
  }
  throw ConvergenceError("solve_transformed: root finding failed at step " +
                         std::to_string(step) + ", node " + std::to_string(node));
}

}  // namespace

BsdeSolution solve_transformed(const LatticeModel& m, std::span<const double> terminal,
                               const AdaptedProcess& utility, const QParams& p) {
  p.validate();
  if (terminal.size() != m.leaf_count())
    throw std::invalid_argument("solve_transformed: terminal must have one value per leaf");
  if (utility.last_step() != m.steps - 1)
    throw std::invalid_argument("solve_transformed: utility must be an integrand process");

  BsdeSolution sol;
  sol.transformed = true;
  sol.value = AdaptedProcess::node(m);
  sol.integrand = AdaptedProcess::integrand(m);

  auto leaves = sol.value.level(m.steps);
  for (std::uint64_t id = 0; id < leaves.size(); ++id) {
    if (!(terminal[id] > 0.0) || !(terminal[id] <= 1.0))
      throw std::domain_error("solve_transformed: terminal values must lie in (0, 1]");
    leaves[id] = terminal[id];
  }

  for (int k = m.steps - 1; k >= 0; --k) {
    auto cur = sol.value.level(k);
    auto next = sol.value.level(k + 1);
    for (std::uint64_t id = 0; id < cur.size(); ++id) {
      const double up = next[2 * id];
      const double down = next[2 * id + 1];
      const double mean = 0.5 * (up + down);
      if (!(mean > 0.0))
        throw std::domain_error("solve_transformed: nonpositive conditional mean at step " +
                                std::to_string(k) + ", node " + std::to_string(id));
      const double u = utility.at(k, id);
      if (!(u >= 0.0))
        throw std::domain_error("solve_transformed: utility rate must be nonnegative");
      cur[id] = monotone_root(p.gamma * u * m.dt, p.q, mean, k, id);
      sol.integrand.at(k, id) = martingale_integrand(m, up, down);
    }
  }
  return sol;
}

BsdeSolution solve_untransformed(const LatticeModel& m, std::span<const double> zeta,
                                 const AdaptedProcess& utility, const QParams& p) {
  p.validate();
  if (p.q <= 1.0)
    throw std::invalid_argument("solve_untransformed: supported for q > 1 only");
  if (zeta.size() != m.leaf_count())
    throw std::invalid_argument("solve_untransformed: zeta must have one value per leaf");
  if (utility.last_step() != m.steps - 1)
    throw std::invalid_argument("solve_untransformed: utility must be an integrand process");

  BsdeSolution sol;
  sol.transformed = false;
  sol.value = AdaptedProcess::node(m);
  sol.integrand = AdaptedProcess::integrand(m);

  auto leaves = sol.value.level(m.steps);
  for (std::uint64_t id = 0; id < leaves.size(); ++id) {
    if (!(zeta[id] >= 0.0))
      throw std::domain_error("solve_untransformed: zeta must be nonnegative");
    leaves[id] = zeta[id];
  }

  const double mu_slope = (p.q - 1.0) * p.gamma / p.q;  // d mu / dy
  for (int k = m.steps - 1; k >= 0; --k) {
    auto cur = sol.value.level(k);
    auto next = sol.value.level(k + 1);
    for (std::uint64_t id = 0; id < cur.size(); ++id) {
      const double up = next[2 * id];
      const double down = next[2 * id + 1];
      const double z = martingale_integrand(m, up, down);
      sol.integrand.at(k, id) = z;
      const double rhs = 0.5 * (up + down) + utility.at(k, id) * m.dt;
      if (z == 0.0) {
        cur[id] = rhs;
        continue;
      }
      // F(y) = y + a / mu(y) - rhs with a = gamma z^2 dt / 2. F has a
      // single minimum at mu(y*) = sqrt(a mu'); the stable root is the
      // larger one, on the increasing branch.
      const double a = 0.5 * p.gamma * z * z * m.dt;
      const double mu_star = std::sqrt(a * mu_slope);
      const double y_star = (p.q * mu_star - 1.0) / ((p.q - 1.0) * p.gamma);
      auto eval = [&](double y) { return y + a / mu(y, p) - rhs; };
      if (!(eval(y_star) <= 0.0))
        throw std::domain_error("solve_untransformed: no valid root at step " +
                                std::to_string(k) + ", node " + std::to_string(id) +
                                " (dt too coarse for this instance)");
      double lo = y_star;
      double hi = std::max(rhs, y_star + 1.0);
      int guard = 0;
      while (eval(hi) < 0.0) {
        hi = y_star + 2.0 * (hi - y_star);
        if (++guard > 200)
          throw ConvergenceError("solve_untransformed: bracket expansion failed");
      }
      double y = 0.5 * (lo + hi);
      for (int it = 0; it < kMaxRootIter; ++it) {
        const double f = eval(y);
        if (f > 0.0)
          hi = y;
        else
          lo = y;
        const double muy = mu(y, p);
        const double fp = 1.0 - a * mu_slope / (muy * muy);
        double nxt = (fp > 0.0) ? y - f / fp : 0.5 * (lo + hi);
        if (!(nxt > lo) || !(nxt < hi)) nxt = 0.5 * (lo + hi);
        if (std::abs(nxt - y) <= kRootTol) {
          y = nxt;
          break;
        }
        y = nxt;
      }
      cur[id] = y;
    }
  }
  return sol;
}

BsdeSolution invert_transform(const BsdeSolution& sol, const QParams& p) {
  p.validate();
  if (!sol.transformed)
    throw std::invalid_argument("invert_transform: solution is already untransformed");
  BsdeSolution out;
  out.transformed = false;
  out.value = sol.value;
  out.integrand = sol.integrand;
  for (int k = 0; k <= sol.value.last_step(); ++k) {
    auto level = out.value.level(k);
    for (std::uint64_t id = 0; id < level.size(); ++id) {
      const double ybar = sol.value.at(k, id);
      if (!(ybar > 0.0)) throw std::domain_error("invert_transform: Ybar must be positive");
      level[id] = -ln_q(ybar, p) / p.gamma;
      if (k < sol.value.last_step())
        out.integrand.at(k, id) = -sol.integrand.at(k, id) / (p.gamma * std::pow(ybar, p.q));
    }
  }
  return out;
}

BsdeSolution apply_transform(const BsdeSolution& sol, const QParams& p) {
  p.validate();
  if (sol.transformed)
    throw std::invalid_argument("apply_transform: solution is already transformed");
  BsdeSolution out;
  out.transformed = true;
  out.value = sol.value;
  out.integrand = sol.integrand;
  for (int k = 0; k <= sol.value.last_step(); ++k) {
    auto level = out.value.level(k);
    for (std::uint64_t id = 0; id < level.size(); ++id) {
      const double ybar = exp_q(-p.gamma * sol.value.at(k, id), p);
      level[id] = ybar;
      if (k < sol.value.last_step())
        out.integrand.at(k, id) =
            -p.gamma * std::pow(ybar, p.q) * sol.integrand.at(k, id);
    }
  }
  return out;
}

BsdeSolution solve_derivative(const LatticeModel& m, const QParams& p,
                              const BsdeSolution& base, const AdaptedProcess& utility,
                              const AdaptedProcess& source,
                              std::span<const double> terminal) {
  p.validate();
  if (!base.transformed)
    throw std::invalid_argument("solve_derivative: base solution must be transformed");
  if (terminal.size() != m.leaf_count())
    throw std::invalid_argument("solve_derivative: terminal must have one value per leaf");

  BsdeSolution sol;
  sol.transformed = true;
  sol.value = AdaptedProcess::node(m);
  sol.integrand = AdaptedProcess::integrand(m);

  auto leaves = sol.value.level(m.steps);
  for (std::uint64_t id = 0; id < leaves.size(); ++id) leaves[id] = terminal[id];

  for (int k = m.steps - 1; k >= 0; --k) {
    auto cur = sol.value.level(k);
    auto next = sol.value.level(k + 1);
    for (std::uint64_t id = 0; id < cur.size(); ++id) {
      const double up = next[2 * id];
      const double down = next[2 * id + 1];
      const double ybar = base.value.at(k, id);
      const double decay = p.gamma * p.q * std::pow(ybar, p.q - 1.0) * utility.at(k, id);
      cur[id] = (0.5 * (up + down) + source.at(k, id) * m.dt) / (1.0 + decay * m.dt);
      sol.integrand.at(k, id) = martingale_integrand(m, up, down);
    }
  }
  return sol;
}

}  // namespace qrobust
