#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "qrobust/bsde.hpp"
#include "qrobust/measures.hpp"
#include "qrobust/optimal.hpp"
#include "qrobust/robust.hpp"

using namespace qrobust;

namespace {

std::vector<double> smooth_zeta(const LatticeModel& m) {
  std::vector<double> z(m.leaf_count());
  for (std::uint64_t id = 0; id < z.size(); ++id)
    z[id] = 1.2 + 0.5 * std::tanh(0.6 * brownian_at(m, m.steps, id));
  return z;
}

AdaptedProcess smooth_utility(const LatticeModel& m) {
  AdaptedProcess u = AdaptedProcess::integrand(m);
  for (int k = 0; k < m.steps; ++k)
    for (std::uint64_t id = 0; id < u.width(k); ++id)
      u.at(k, id) = 0.01 * (1.0 + std::tanh(0.5 * brownian_at(m, k, id)));
  return u;
}

void BM_SolveTransformed(benchmark::State& state) {
  const LatticeModel m = build_lattice(1.0, static_cast<int>(state.range(0)), 0.2, 0.1);
  const QParams p{2.0, 1.0};
  const std::vector<double> zeta = smooth_zeta(m);
  std::vector<double> terminal(zeta.size());
  for (std::size_t i = 0; i < terminal.size(); ++i)
    terminal[i] = exp_q(-p.gamma * zeta[i], p);
  const AdaptedProcess utility = smooth_utility(m);
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_transformed(m, terminal, utility, p).value.at(0, 0));
}

void BM_InnerClosedForm(benchmark::State& state) {
  const LatticeModel m = build_lattice(1.0, static_cast<int>(state.range(0)), 0.2, 0.1);
  const QParams p{2.0, 1.0};
  const std::vector<double> zeta = smooth_zeta(m);
  const AdaptedProcess utility = smooth_utility(m);
  for (auto _ : state)
    benchmark::DoNotOptimize(inner_closed_form(m, zeta, utility, p).value0);
}

void BM_InnerGridDp(benchmark::State& state) {
  const LatticeModel m = build_lattice(1.0, 6, 0.2, 0.1);
  const QParams p{2.0, 1.0};
  const std::vector<double> zeta = smooth_zeta(m);
  const AdaptedProcess utility = smooth_utility(m);
  const std::vector<double> grid =
      default_eta_grid(m, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(inner_dp_grid(m, zeta, utility, p, grid).value0);
}

void BM_TsallisEntropy(benchmark::State& state) {
  const LatticeModel m = build_lattice(1.0, static_cast<int>(state.range(0)), 0.2, 0.1);
  const QParams p{2.0, 1.0};
  const MeasureChange mc = density_from_eta(m, AdaptedProcess::integrand(m, 0.3));
  for (auto _ : state) benchmark::DoNotOptimize(tsallis_entropy(m, mc, p));
}

void BM_FbFixedPoint(benchmark::State& state) {
  const LatticeModel m = build_lattice(1.0, static_cast<int>(state.range(0)), 0.25, 0.1);
  const QParams p{2.0, 1.0};
  const UtilitySpec us{0.5};
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_fb_system(m, p, us, -0.8).ybar.value.at(0, 0));
}

}  // namespace

BENCHMARK(BM_SolveTransformed)->Arg(8)->Arg(12)->Arg(16);
BENCHMARK(BM_InnerClosedForm)->Arg(8)->Arg(12)->Arg(16);
BENCHMARK(BM_InnerGridDp)->Arg(501)->Arg(2001);
BENCHMARK(BM_TsallisEntropy)->Arg(8)->Arg(14);
BENCHMARK(BM_FbFixedPoint)->Arg(4)->Arg(6);

BENCHMARK_MAIN();
