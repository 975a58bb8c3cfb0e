#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "nfe/analysis.hpp"
#include "nfe/error.hpp"
#include "nfe/solver.hpp"
#include "support.hpp"

using namespace nfe;
using nfe::testing::Gen;
using nfe::testing::max_abs_diff;

namespace {

// K = 0, I = 0, V0 = 1: the scheme collapses to scalar BDF2 for V' = -V/c.
ProblemSpec decay_problem(double c = 1.0) {
  ProblemSpec spec = example1(1, 1, c);
  spec.name = "decay";
  spec.kernel = [](double) { return 0.0; };
  spec.input = [](double, double, double) { return 0.0; };
  spec.initial = [](double, double, double) { return 1.0; };
  spec.exact.reset();
  return spec;
}

SolverConfig config(double h, double T, bool rr = true, int n = 6, int m = 12) {
  SolverConfig s;
  s.time_step = h;
  s.final_time = T;
  s.subintervals = n;
  s.cheb_degree = m;
  s.rank_reduction = rr;
  return s;
}

double max_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config(0.0, 0.1).validate(), InvalidArgument);
  CHECK_THROWS_AS(config(-0.01, 0.1).validate(), InvalidArgument);
  CHECK_THROWS_AS(config(0.03, 0.1).validate(), InvalidArgument);
  CHECK_THROWS_AS(config(0.01, 0.1, true, 6, 25).validate(), InvalidArgument);
  CHECK_NOTHROW(config(0.01, 0.1, false, 6, 25).validate());
  auto s = config(0.01, 0.1);
  s.max_inner = 0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = config(0.01, 0.1);
  s.inner_tolerance = 0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  CHECK(config(0.01, 0.1).step_count() == 10);
  CHECK(config(0.0025, 0.05).step_count() == 20);
  CHECK(implicit_weight(0.01, 1.0) == doctest::Approx(0.02 / 3.02));
}

TEST_CASE("scalar BDF2 recurrence") {
  for (bool rr : {true, false}) {
    CAPTURE(rr);
    const double h = 0.01;
    Solver solver(decay_problem(), config(h, 0.2, rr));
    const auto result = solver.solve();
    REQUIRE(result.states.size() == 21);
    for (double v : result.states[1].values) CHECK(std::abs(v - 0.99) < 1e-13);
    for (std::size_t i = 2; i < result.states.size(); ++i) {
      const auto& u = result.states[i].values;
      const auto& u1 = result.states[i - 1].values;
      const auto& u2 = result.states[i - 2].values;
      for (std::size_t q = 0; q < u.size(); q += 37) {
        CHECK(std::abs(3 * u[q] - 4 * u1[q] + u2[q] + 2 * h * u[q]) < 1e-13);
      }
    }
  }
}

TEST_CASE("Euler bootstrap") {
  Solver solver(decay_problem(), config(0.01, 0.1, false));
  for (double v : solver.euler_step(0.01).values) CHECK(std::abs(v - 0.99) < 1e-15);
  const auto still = solver.euler_step(0.0);
  for (double v : still.values) CHECK(v == 1.0);

  Solver ex1(example1(1, 1, 1), config(0.01, 0.1));
  const auto u1 = ex1.euler_bootstrap();
  double err = 0.0;
  for (double v : u1.values) err = std::max(err, std::abs(v - std::exp(-0.01)));
  CHECK(err > 1e-5);
  CHECK(err < 1e-4);
  CHECK(ex1.history().newest_level() == 1);
  CHECK_THROWS_AS(ex1.euler_bootstrap(), SolverError);
}

TEST_CASE("T = 0 returns only the initial state") {
  Solver solver(example1(1, 1, 1), config(0.01, 0.0));
  const auto result = solver.solve();
  REQUIRE(result.states.size() == 1);
  CHECK(result.diagnostics.empty());
  for (double v : result.states[0].values) CHECK(v == 1.0);
}

TEST_CASE("Example 1 errors near the published values") {
  Solver solver(example1(1, 1, 1), config(0.01, 0.1));
  const auto result = solver.solve();
  const auto& spec = solver.problem();
  const double e10 = error_norm(result.states[10], *spec.exact, solver.grid(), Norm::max);
  const double e4 = error_norm(result.states[4], *spec.exact, solver.grid(), Norm::max);
  CHECK(e10 == doctest::Approx(7.76e-5).epsilon(0.25));
  CHECK(e4 == doctest::Approx(7.46e-5).epsilon(0.25));
  CHECK(result.warnings.empty());
  CHECK(result.stability_margin > 0.0);
  for (const auto& d : result.diagnostics) {
    CHECK(d.inner_iterations <= 6);
    if (d.level >= 2) CHECK(d.final_correction < 1e-10);
  }
}

TEST_CASE("history buffer") {
  HistoryBuffer h(3);
  for (int level = 0; level <= 4; ++level) h.push(LevelState{level, 0.1 * level, {}, {}});
  CHECK(h.size() == 3);
  CHECK(h.oldest_level() == 2);
  CHECK(h.newest_level() == 4);
  CHECK(h.at(3).level == 3);
  CHECK_THROWS_AS(h.at(1), SolverError);
  CHECK_THROWS_AS(h.at(5), SolverError);
  CHECK_THROWS_AS(h.push(LevelState{7, 0.7, {}, {}}), SolverError);
  h.clear();
  CHECK_THROWS_AS(h.newest_level(), SolverError);

  Solver solver(example1(1, 1, 1), config(0.01, 0.1));
  CHECK(solver.history().capacity() == 3);
  CHECK_THROWS_AS(solver.bdf2_step(5), SolverError);
  CHECK_THROWS_AS(solver.bdf2_step(1), InvalidArgument);

  Solver delayed(example4(1, 1, 1, 1), config(0.1, 1.0));
  CHECK(delayed.history().capacity() == 30u);
  CHECK_THROWS_AS(delayed.apply_integral_operator(3, delayed.history().at(0).grid), SolverError);
}

TEST_CASE("non-convergence raises") {
  auto s = config(0.01, 0.1);
  s.max_inner = 1;
  s.inner_tolerance = 1e-14;
  Solver solver(example1(1, 1, 1), s);
  CHECK_THROWS_AS(solver.solve(), SolverError);
}

TEST_CASE("integrand evaluation counts") {
  Solver on(example1(1, 1, 1), config(0.01, 0.1, true, 6, 12));
  on.reset_counters();
  (void)on.apply_integral_operator(0, on.history().at(0).grid);
  CHECK(on.integrand_evaluations() == 144u * 576u);

  Solver off(example1(1, 1, 1), config(0.01, 0.1, false));
  off.reset_counters();
  (void)off.apply_integral_operator(0, off.history().at(0).grid);
  CHECK(off.integrand_evaluations() == 576u * 576u);
  CHECK(off.evaluation_point_count() == 576u);
}

TEST_CASE("integral operator with constant S against the closed form") {
  auto spec = example1(2, 1, 1);
  spec.firing_rate = [](double) { return 0.7; };
  spec.firing_rate_slope_max = 0.0;
  Solver solver(spec, config(0.01, 0.1, true, 8, 12));
  const auto k = solver.apply_integral_operator(0, solver.history().at(0).grid);
  for (std::size_t p = 0; p < k.size(); ++p) {
    CHECK(std::abs(k[p] - 0.7 * gaussian_kernel_mass(2, solver.eval_x()[p], solver.eval_y()[p])) < 1e-10);
  }
  auto zero = spec;
  zero.kernel = [](double) { return 0.0; };
  Solver z(zero, config(0.01, 0.1));
  for (double v : z.apply_integral_operator(0, z.history().at(0).grid)) CHECK(v == 0.0);
}

TEST_CASE("delayed operator interpolates a history that is linear in time") {
  // V(y, t) = 1 + t + y1 for t <= 0, S(u) = u; linear interpolation is exact,
  // so the level-0 operator equals sum_q K w_q (1 - d/v + y1_q).
  const double v = 1.0, h = 0.5;
  auto spec = example4(1, 1, 1, v);
  spec.initial = [](double x1, double, double t) { return 1.0 + t + x1; };
  Solver solver(spec, config(h, 1.0, false, 2, 2));
  CHECK(solver.delay_table().max_offset == 5);
  CHECK(solver.history().capacity() == 7u);
  CHECK(solver.history().oldest_level() == -6);
  const auto& grid = solver.grid();
  const auto got = solver.apply_integral_operator(0, solver.history().at(0).grid);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    double want = 0.0;
    for (std::size_t q = 0; q < grid.size(); ++q) {
      const double d = std::hypot(grid.x_of(p) - grid.x_of(q), grid.y_of(p) - grid.y_of(q));
      want += spec.kernel(d) * grid.weight_of(q) * (1.0 - d / v + grid.x_of(q));
    }
    CHECK(std::abs(got[p] - want) < 1e-13);
  }
}

TEST_CASE("property: delay table invariants") {
  for (auto seed : nfe::testing::kSeeds) {
    CAPTURE(seed);
    Gen gen(seed);
    const double v = gen.uniform(0.2, 20);
    const double h = gen.uniform(0.01, 0.3);
    const auto spec = example4(1, 1, 1, v);
    const auto grid = build_grid(spec.domain, gen.integer(1, 3), build_gauss_rule(gen.integer(1, 4)));
    std::vector<double> ex(grid.size()), ey(grid.size());
    for (std::size_t q = 0; q < grid.size(); ++q) {
      ex[q] = grid.x_of(q);
      ey[q] = grid.y_of(q);
    }
    const auto table = build_delay_table(spec, grid, ex, ey, h);
    REQUIRE(table.delayed());
    CHECK(table.max_offset == static_cast<int>(std::floor(spec.tau_max() / h)));
    for (std::size_t i = 0; i < table.offsets.size(); ++i) {
      CHECK(table.offsets[i] >= 0);
      CHECK(table.offsets[i] <= table.max_offset);
      CHECK(table.fractions[i] > 0.0);
      CHECK(table.fractions[i] <= 1.0);
    }
    CHECK(table.kernel_weights.allFinite());
    // a point paired with itself has no delay
    CHECK(table.offsets[0] == 0);
    CHECK(table.fractions[0] == 1.0);
  }
}

TEST_CASE("step bounds") {
  const auto grid = build_grid(Rectangle::unit_square(), 6, build_gauss_rule(4));
  auto zero = example1(1, 1, 1);
  zero.kernel = [](double) { return 0.0; };
  const auto inf = step_bound(zero, grid);
  CHECK(std::isinf(inf.l2_bound));
  CHECK(std::isinf(inf.grid_bound));

  const auto b1 = step_bound(example1(1, 1, 1), grid);
  const auto b2 = step_bound(example1(1, 2, 1), grid);
  CHECK(b2.l2_bound == doctest::Approx(b1.l2_bound / 2).epsilon(1e-14));
  CHECK(b2.grid_bound == doctest::Approx(b1.grid_bound / 2).epsilon(1e-14));

  // direct formula with brute-force kernel norms
  double sq = 0.0, kmax = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (std::size_t q = 0; q < grid.size(); ++q) {
      const double d2 = std::pow(grid.x_of(p) - grid.x_of(q), 2) + std::pow(grid.y_of(p) - grid.y_of(q), 2);
      const double k = std::exp(-d2);
      kmax = std::max(kmax, k);
      sq += grid.weight_of(p) * grid.weight_of(q) * k * k;
    }
  CHECK(b1.l2_bound == doctest::Approx(3.0 / (2.0 * 2.0 * std::sqrt(sq))).epsilon(1e-12));
  CHECK(b1.grid_bound == doctest::Approx(3.0 / (2.0 * kmax * 4.0)).epsilon(1e-14));

  Solver big(example1(1, 1, 1), config(0.5, 1.0));
  const auto result = big.solve();
  CHECK(!result.warnings.empty());
}

TEST_CASE("rank reduction on and off agree") {
  Solver on(example1(1, 1, 1), config(0.01, 0.1, true));
  Solver off(example1(1, 1, 1), config(0.01, 0.1, false));
  CHECK(max_abs_diff(on.solve().states.back().values, off.solve().states.back().values) < 1e-9);
}

TEST_CASE("very fast propagation matches the undelayed solver") {
  auto s = config(0.01, 0.1);
  s.inner_tolerance = 1e-13;
  const auto plain = Solver(example3(1, 1, 1), s).solve();
  auto fast = example3(1, 1, 1);
  fast.speed = 1e9;
  const auto delayed = Solver(fast, s).solve();
  for (std::size_t i = 0; i < plain.states.size(); ++i) {
    CHECK(max_abs_diff(plain.states[i].values, delayed.states[i].values) < 1e-8);
  }
}

TEST_CASE("property: linear S gives a linear solve map") {
  for (bool delay : {false, true}) {
    for (auto seed : {11u, 12u, 13u}) {
      CAPTURE(delay);
      CAPTURE(seed);
      Gen gen(seed);
      const double alpha = gen.uniform(-3, 3);
      auto base = delay ? example4(1, 1, 1, gen.uniform(0.5, 5)) : example3(1, 1, 1);
      base.input = [](double, double, double) { return 0.0; };
      base.exact.reset();
      auto scaled = base;
      const auto v0 = base.initial;
      scaled.initial = [v0, alpha](double x, double y, double t) { return alpha * v0(x, y, t); };
      auto s = config(0.05, 0.5);
      s.inner_tolerance = 1e-14;
      const auto a = Solver(base, s).solve();
      const auto b = Solver(scaled, s).solve();
      for (std::size_t i = 0; i < a.states.size(); ++i) {
        double err = 0.0;
        for (std::size_t q = 0; q < a.states[i].values.size(); ++q) {
          err = std::max(err, std::abs(alpha * a.states[i].values[q] - b.states[i].values[q]));
        }
        CHECK(err < 1e-12);
      }
    }
  }
}

TEST_CASE("inner iteration contracts within the estimate") {
  for (int ex : {1, 3}) {
    const auto spec = ex == 1 ? example1(1, 1, 1) : example3(1, 1, 1);
    Solver solver(spec, config(0.01, 0.1));
    const auto result = solver.solve();
    const double bound = implicit_weight(0.01, spec.c) * solver.kernel_norms().k_max *
                         spec.firing_rate_slope_max * solver.grid().weight_sum();
    for (const auto& d : result.diagnostics) {
      CHECK(d.inner_iterations <= 6);
      CHECK(d.contraction_estimate <= bound + 0.1);
    }
  }
}

TEST_CASE("delayed Example 4 decays more slowly") {
  auto s = config(0.1, 2.0);
  const auto delayed = Solver(example4(1, 1, 1, 1), s).solve();
  const auto plain = Solver(example3(1, 1, 1), s).solve();
  double prev_gap = 0.0;
  for (int level : {5, 10, 15, 20}) {
    const double gap = max_norm(delayed.states[level].values) - max_norm(plain.states[level].values);
    CHECK(gap > prev_gap);
    prev_gap = gap;
  }
}

}  // TEST_SUITE
