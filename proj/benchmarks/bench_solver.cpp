#include <benchmark/benchmark.h>

#include "nfe/chebyshev.hpp"
#include "nfe/solver.hpp"

namespace {

nfe::SolverConfig config(int n, int m, bool rr, double h = 0.01, double T = 0.1) {
  nfe::SolverConfig s;
  s.time_step = h;
  s.final_time = T;
  s.subintervals = n;
  s.cheb_degree = m;
  s.rank_reduction = rr;
  return s;
}

void BM_IntegralOperator(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const bool rr = state.range(1) != 0;
  nfe::Solver solver(nfe::example1(1, 1, 1), config(n, 12, rr));
  const auto& u0 = solver.history().at(0).grid;
  for (auto _ : state) benchmark::DoNotOptimize(solver.apply_integral_operator(0, u0));
  state.counters["evals"] = benchmark::Counter(
      static_cast<double>(solver.evaluation_point_count() * solver.grid().size()),
      benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_IntegralOperator)->Args({6, 1})->Args({6, 0})->Args({12, 1})->Args({24, 1});

void BM_DelayedOperator(benchmark::State& state) {
  nfe::Solver solver(nfe::example4(1, 1, 1, 1), config(6, 12, true, 0.1, 2.0));
  const auto& u0 = solver.history().at(0).grid;
  for (auto _ : state) benchmark::DoNotOptimize(solver.apply_integral_operator(0, u0));
}
BENCHMARK(BM_DelayedOperator);

void BM_Lift(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto grid = nfe::build_grid(nfe::Rectangle::unit_square(), 6, nfe::build_gauss_rule(4));
  const auto op = nfe::build_cheb_operator(m, grid);
  std::vector<double> nodal(op.node_count(), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(nfe::lift_to_grid(op, nodal));
}
BENCHMARK(BM_Lift)->Arg(12)->Arg(24);

void BM_SolveExample1(benchmark::State& state) {
  for (auto _ : state) {
    nfe::Solver solver(nfe::example1(1, 1, 1), config(6, 12, true));
    benchmark::DoNotOptimize(solver.solve());
  }
}
BENCHMARK(BM_SolveExample1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
