#include <benchmark/benchmark.h>

#include "cmdual/counterexamples.hpp"
#include "cmdual/dominance.hpp"
#include "cmdual/solver.hpp"

using namespace cmdual;

namespace {

void BM_DualDerivative(benchmark::State& state) {
  const ValueFunctionPair vf(UtilitySpec::power(-1.0), MarketModel::lognormal(0.25));
  const int n = int(state.range(0));
  double y = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(vf.dual_derivative(n, y));
    y = y > 2.0 ? 0.5 : y * 1.01;
  }
}
BENCHMARK(BM_DualDerivative)->DenseRange(1, 8, 7);

void BM_PrimalDerivative(benchmark::State& state) {
  const ValueFunctionPair vf(footnote_utility(), MarketModel::lognormal(0.25));
  const int n = int(state.range(0));
  double x = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(vf.primal_derivative(n, x));
    x = x > 2.0 ? 0.5 : x * 1.01;
  }
}
BENCHMARK(BM_PrimalDerivative)->Arg(1)->Arg(4);

void BM_DominatesN(benchmark::State& state) {
  std::vector<double> x, p;
  const int m = int(state.range(0));
  for (int i = 0; i < m; ++i) {
    x.push_back(0.1 + i * 0.01);
    p.push_back(1.0 / m);
  }
  const auto F = Distribution::discrete(x, p), G = Distribution::lognormal_mean_one(0.3);
  for (auto _ : state) benchmark::DoNotOptimize(dominates_n(F, G, 3).pass);
}
BENCHMARK(BM_DominatesN)->Arg(10)->Arg(100);

void BM_Cex1Evaluate(benchmark::State& state) {
  const Cex1Instance inst(2, state.range(0));
  double y = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(inst.signed_V(2, y));
    y = y > 20.0 ? 0.3 : y * 1.07;
  }
}
BENCHMARK(BM_Cex1Evaluate)->Arg(1000)->Arg(1000000);

void BM_Cex2Gap(benchmark::State& state) {
  for (auto _ : state) {
    const auto inst = cex2_build(footnote_utility(), int(state.range(0)));
    benchmark::DoNotOptimize(cex2_gap(inst, {1e-4}).gap);
  }
}
BENCHMARK(BM_Cex2Gap)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
