#include <benchmark/benchmark.h>

#include "twistkam/action.hpp"
#include "twistkam/dynamics.hpp"
#include "twistkam/weakkam.hpp"

using namespace twistkam;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

void BM_MinimizeStandard(benchmark::State& state) {
  const GeneratingFunction S(standard_spec(1.0));
  const int N = static_cast<int>(state.range(0));
  MinimizeOptions o;
  o.seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(minimize_endpoints(S, v1(0.1), v1(0.1 + 0.4 * N), N, o).value);
  }
  state.SetComplexityN(N);
}
BENCHMARK(BM_MinimizeStandard)->RangeMultiplier(2)->Range(2, 64)->Complexity();

void BM_MinimizeCoupled(benchmark::State& state) {
  const GeneratingFunction S(coupled_standard_spec(0.8, 0.05));
  const int N = static_cast<int>(state.range(0));
  MinimizeOptions o;
  o.seed = 2;
  const Vec x = (Vec(2) << 0.2, 0.7).finished();
  const Vec y = x + (Vec(2) << 0.5, -0.3).finished() * N;
  for (auto _ : state) benchmark::DoNotOptimize(minimize_endpoints(S, x, y, N, o).value);
}
BENCHMARK(BM_MinimizeCoupled)->Arg(4)->Arg(16);

void BM_TwistMap(benchmark::State& state) {
  const GeneratingFunction S(standard_spec(0.9));
  const int n = static_cast<int>(state.range(0));
  const PhasePoint pt{v1(0.3), v1(0.2)};
  for (auto _ : state) benchmark::DoNotOptimize(twist_map(S, pt, n).x[0]);
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TwistMap)->Arg(1)->Arg(100)->Arg(1000);

void BM_Mane(benchmark::State& state) {
  const GeneratingFunction S(standard_spec(1.0));
  WeakKamOptions o;
  o.minimize.seed = 3;
  const WeakKam wk(S, v1(0.0), {static_cast<int>(state.range(0)), 2}, TorusGrid(1, 16), o);
  for (auto _ : state) benchmark::DoNotOptimize(wk.mane(v1(0.1875), v1(0.8125)).value);
}
BENCHMARK(BM_Mane)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
