#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "dinilab/cascade.hpp"
#include "dinilab/dini.hpp"
#include "dinilab/solver.hpp"

using namespace dinilab;

static void BM_ClassifyDini(benchmark::State& st) {
  const auto w = OmegaSpec::inverse_log(0.5);
  for (auto _ : st) benchmark::DoNotOptimize(classify_dini(w, 0.5));
}
BENCHMARK(BM_ClassifyDini);

static void BM_BuildChain(benchmark::State& st) {
  const auto w = OmegaSpec::inverse_log(0.0);
  for (auto _ : st) benchmark::DoNotOptimize(build_chain(w, 2.0, 2, 2, static_cast<int>(st.range(0)), 1.0));
}
BENCHMARK(BM_BuildChain)->Arg(64)->Arg(256);

static ProblemSpec dirac_problem() {
  ProblemSpec s;
  s.N = 2;
  s.p = 2.8;
  s.box = Box{{-1.0, 0.0}, {1.0, 2.0}};
  s.potential = AbsorptionPotential::boundary(OmegaSpec::power(0.5));
  s.bc = BoundaryData::dirac({0.0}, 1.0);
  return s;
}

static void BM_NewtonSolve(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto sys = discretize(dirac_problem(), {n, n});
  const auto init = harmonic_solve(sys, 1e3);
  for (auto _ : st) {
    auto s2 = sys;
    s2.level = 1e3;
    benchmark::DoNotOptimize(newton_solve(s2, init));
  }
}
BENCHMARK(BM_NewtonSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_Pcg(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto sys = discretize(dirac_problem(), {n, n});
  std::vector<double> b(sys.A.n, 0.0), x(sys.A.n, 0.0);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!sys.A.fixed[i]) b[i] = 1.0;
  for (auto _ : st) {
    std::fill(x.begin(), x.end(), 0.0);
    benchmark::DoNotOptimize(pcg(sys.A, &sys.H, b, x));
  }
  st.SetItemsProcessed(static_cast<int64_t>(st.iterations()) * static_cast<int64_t>(sys.A.n));
}
BENCHMARK(BM_Pcg)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
