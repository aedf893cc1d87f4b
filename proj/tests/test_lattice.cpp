#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "qrobust/lattice.hpp"

using namespace qrobust;

namespace {

Strategy random_strategy(const LatticeModel& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c_dist(0.0, 0.5);
  std::uniform_real_distribution<double> xi_dist(0.1, 3.0);
  Strategy s;
  s.consumption = AdaptedProcess::integrand(m);
  for (int k = 0; k < m.steps; ++k)
    for (std::uint64_t id = 0; id < s.consumption.width(k); ++id)
      s.consumption.at(k, id) = c_dist(rng);
  s.terminal.resize(m.leaf_count());
  for (auto& xi : s.terminal) xi = xi_dist(rng);
  return s;
}

// Direct-sum price E[D_N xi] + sum_k E[D_k c_k] dt, the oracle replicate()
// is checked against.
double direct_price(const LatticeModel& m, const Strategy& s) {
  const AdaptedProcess d = pricing_density(m);
  double price = 0.0;
  for (std::uint64_t id = 0; id < m.leaf_count(); ++id)
    price += d.at(m.steps, id) * s.terminal[id];
  price /= static_cast<double>(m.leaf_count());
  for (int k = 0; k < m.steps; ++k) {
    double level = 0.0;
    for (std::uint64_t id = 0; id < s.consumption.width(k); ++id)
      level += d.at(k, id) * s.consumption.at(k, id);
    price += level / static_cast<double>(s.consumption.width(k)) * m.dt;
  }
  return price;
}

}  // namespace

TEST_CASE("build_lattice") {
  const LatticeModel m = build_lattice(1.0, 4, 0.2, 0.1);
  CHECK(m.theta == doctest::Approx(0.5));
  CHECK(m.dt == doctest::Approx(0.25));
  CHECK(m.leaf_count() == 16);
  CHECK_THROWS_AS(build_lattice(1.0, 0, 0.2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(build_lattice(1.0, 4, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(build_lattice(-1.0, 4, 0.2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(AdaptedProcess::node(build_lattice(1.0, 23, 0.2, 0.1)),
                  std::invalid_argument);
}

TEST_CASE("brownian_at") {
  const LatticeModel m = build_lattice(1.0, 3, 1.0, 0.0);
  CHECK(brownian_at(m, 0, 0) == 0.0);
  CHECK(brownian_at(m, 3, 0b000) == doctest::Approx(3.0 * m.sqrt_dt));
  CHECK(brownian_at(m, 3, 0b111) == doctest::Approx(-3.0 * m.sqrt_dt));
  CHECK(brownian_at(m, 3, 0b010) == doctest::Approx(1.0 * m.sqrt_dt));
}

TEST_CASE("pricing density") {
  SUBCASE("theta = 0 means no measure change") {
    const LatticeModel m = build_lattice(1.0, 4, 0.2, 0.0);
    const AdaptedProcess d = pricing_density(m);
    for (int k = 0; k <= m.steps; ++k)
      for (std::uint64_t id = 0; id < d.width(k); ++id) CHECK(d.at(k, id) == 1.0);
  }
  SUBCASE("one-step factors at theta = 0.5, dt = 0.25") {
    const LatticeModel m = build_lattice(0.25, 1, 0.2, 0.1);
    const AdaptedProcess d = pricing_density(m);
    CHECK(d.at(1, 0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(d.at(1, 1) == doctest::Approx(1.25).epsilon(1e-15));
  }
  SUBCASE("martingale and mean one") {
    const LatticeModel m = build_lattice(1.0, 6, 0.25, 0.15);
    const AdaptedProcess d = pricing_density(m);
    CHECK(level_mean(d.level(m.steps)) == doctest::Approx(1.0).epsilon(1e-12));
    for (int k = 0; k < m.steps; ++k)
      for (std::uint64_t id = 0; id < d.width(k); ++id)
        CHECK(0.5 * (d.at(k + 1, 2 * id) + d.at(k + 1, 2 * id + 1)) ==
              doctest::Approx(d.at(k, id)).epsilon(1e-13));
  }
  SUBCASE("coarse step is rejected") {
    // theta sqrt(dt) = 2 exceeds the equivalence bound.
    const LatticeModel m = build_lattice(1.0, 1, 1.0, 2.0);
    CHECK_THROWS_AS(pricing_density(m), std::domain_error);
  }
}

TEST_CASE("wealth forward") {
  const LatticeModel m = build_lattice(1.0, 5, 0.2, 0.1);
  SUBCASE("no dynamics") {
    const AdaptedProcess x =
        wealth_forward(m, 2.5, AdaptedProcess::integrand(m), AdaptedProcess::integrand(m));
    for (std::uint64_t id = 0; id < m.leaf_count(); ++id) CHECK(x.at(m.steps, id) == 2.5);
  }
  SUBCASE("pure drain") {
    const AdaptedProcess x = wealth_forward(m, 2.0, AdaptedProcess::integrand(m, 1.0),
                                            AdaptedProcess::integrand(m));
    for (std::uint64_t id = 0; id < m.leaf_count(); ++id)
      CHECK(x.at(m.steps, id) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("replicate") {
  SUBCASE("deterministic claim") {
    const LatticeModel m = build_lattice(1.0, 4, 0.2, 0.1);
    const Strategy s = make_strategy(m, 0.0, 3.0);
    const Replication r = replicate(m, s);
    CHECK(r.x0 == doctest::Approx(3.0).epsilon(1e-14));
    for (int k = 0; k < m.steps; ++k)
      for (std::uint64_t id = 0; id < r.pi.width(k); ++id)
        CHECK(r.pi.at(k, id) == doctest::Approx(0.0).scale(1));
  }
  SUBCASE("annuity under zero rates") {
    const LatticeModel m = build_lattice(1.0, 8, 0.2, 0.1);
    const Strategy s = make_strategy(m, 1.0, 0.0);
    CHECK(replicate(m, s).x0 == doctest::Approx(1.0).epsilon(1e-13));
  }
  SUBCASE("random claims match the direct-sum price and round trip") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 12; ++trial) {
      const int steps = 2 + static_cast<int>(rng() % 5);  // N in 2..6
      const LatticeModel m = build_lattice(1.0, steps, 0.25, 0.12);
      const Strategy s = random_strategy(m, rng);
      const Replication r = replicate(m, s);
      CHECK(r.x0 == doctest::Approx(direct_price(m, s)).epsilon(1e-10));
      const AdaptedProcess forward = wealth_forward(m, r.x0, s.consumption, r.pi);
      for (std::uint64_t id = 0; id < m.leaf_count(); ++id)
        CHECK(forward.at(m.steps, id) == doctest::Approx(s.terminal[id]).epsilon(1e-10));
    }
  }
  SUBCASE("replication cost is linear in the strategy") {
    std::mt19937_64 rng(11);
    const LatticeModel m = build_lattice(1.0, 5, 0.3, 0.12);
    for (int trial = 0; trial < 8; ++trial) {
      const Strategy a = random_strategy(m, rng);
      const Strategy b = random_strategy(m, rng);
      const double lambda = 0.25 + 0.5 * std::uniform_real_distribution<double>(0, 1)(rng);
      Strategy mix;
      mix.consumption = AdaptedProcess::integrand(m);
      mix.terminal.resize(m.leaf_count());
      for (int k = 0; k < m.steps; ++k)
        for (std::uint64_t id = 0; id < mix.consumption.width(k); ++id)
          mix.consumption.at(k, id) =
              lambda * a.consumption.at(k, id) + (1 - lambda) * b.consumption.at(k, id);
      for (std::uint64_t id = 0; id < m.leaf_count(); ++id)
        mix.terminal[id] = lambda * a.terminal[id] + (1 - lambda) * b.terminal[id];
      const double lhs = replicate(m, mix).x0;
      const double rhs = lambda * replicate(m, a).x0 + (1 - lambda) * replicate(m, b).x0;
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
  SUBCASE("negative inputs are rejected") {
    const LatticeModel m = build_lattice(1.0, 3, 0.2, 0.1);
    Strategy s = make_strategy(m, 0.1, 1.0);
    s.terminal[0] = -0.5;
    CHECK_THROWS_AS(replicate(m, s), std::invalid_argument);
    Strategy s2 = make_strategy(m, 0.1, 1.0);
    s2.consumption.at(1, 1) = -0.2;
    CHECK_THROWS_AS(replicate(m, s2), std::invalid_argument);
  }
}
