#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "nfe/error.hpp"
#include "nfe/model.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nfe;
using nfe::testing::Gen;
using nfe::testing::max_residual;

namespace {

// Maclaurin series of erf, 40 terms.
double erf_series(double x) {
  double term = x;  // (-1)^n x^(2n+1) / n!
  double sum = 0.0;
  for (int n = 0; n < 40; ++n) {
    sum += term / (2 * n + 1);
    term *= -x * x / (n + 1);
  }
  return 2.0 / std::sqrt(std::numbers::pi) * sum;
}

}  // namespace

TEST_SUITE("nfe_model") {

TEST_CASE("std::erf agrees with a 40-term series at 20 arguments") {
  for (int i = 0; i < 20; ++i) {
    const double x = -1.5 + 3.0 * i / 19.0;
    CAPTURE(x);
    CHECK(std::abs(std::erf(x) - erf_series(x)) < 2e-15);
  }
}

TEST_CASE("kernel mass closed form") {
  const double b = gaussian_kernel_mass(1.0, 0.0, 0.0);
  CHECK(b == doctest::Approx(2.2309851).epsilon(1e-7));
  CHECK(std::abs(b - std::numbers::pi / 4 * std::pow(2 * erf_series(1.0), 2)) < 1e-14);

  const auto fine = build_grid(Rectangle::unit_square(), 16, build_gauss_rule(8));
  Gen gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    const double lambda = gen.uniform(0.2, 6), x1 = gen.uniform(-1, 1), x2 = gen.uniform(-1, 1);
    const double quad = apply_quadrature(fine, sample_on_grid(fine, [&](double y1, double y2) {
      return std::exp(-lambda * ((x1 - y1) * (x1 - y1) + (x2 - y2) * (x2 - y2)));
    }));
    CHECK(std::abs(gaussian_kernel_mass(lambda, x1, x2) - quad) < 1e-13);
  }
}

TEST_CASE("Example 3 profile matches a finer brute-force rule") {
  const auto rule = build_gauss_rule(12);
  auto brute = [&](double lambda, double mu, double x) {
    const int panels = 64;
    double sum = 0.0;
    for (int i = 0; i < panels; ++i) {
      const double left = -1.0 + 2.0 * i / panels, h = 2.0 / panels;
      for (int s = 0; s < rule.k; ++s) {
        const double y = left + 0.5 * h * (1 + rule.nodes[s]);
        sum += 0.5 * h * rule.weights[s] * std::exp(-lambda * (x - y) * (x - y) - mu * y * y);
      }
    }
    return sum;
  };
  const double g0 = gaussian_product_profile(1, 1, 0);
  CHECK(std::abs(g0 - brute(1, 1, 0)) < 1e-13);
  // beta(1,1,0,0) is the square of the one-axis profile
  const auto spec = example3(1, 1, 1);
  CHECK(std::abs(-spec.input(0, 0, 0) - g0 * g0) < 1e-13);
  for (double x : {-1.0, -0.3, 0.77, 1.0}) CHECK(std::abs(gaussian_product_profile(5, 2, x) - brute(5, 2, x)) < 1e-13);
}

TEST_CASE("exact solutions and inputs at special points") {
  const auto e1 = example1(1, 1, 1);
  const auto e2 = example2(1, 1);
  const auto e3 = example3(1, 1, 1);
  Gen gen(8);
  for (int i = 0; i < 10; ++i) {
    const double x = gen.uniform(-1, 1), y = gen.uniform(-1, 1);
    CHECK((*e1.exact)(x, y, 0.0) == 1.0);
    CHECK((*e2.exact)(x, y, 0.1) == 0.1);
    CHECK(e2.input(x, y, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK((*e3.exact)(0, 0, 0) == 1.0);
  CHECK(e1.firing_rate_slope_max == 1.0);
  CHECK(e3.firing_rate_slope_max == 1.0);
}

TEST_CASE("exact solutions satisfy the equation") {
  CHECK(max_residual(example1(1, 1, 1)) < 1e-8);
  CHECK(max_residual(example1(3, 2, 0.5)) < 1e-8);
  CHECK(max_residual(example2(1, 1)) < 1e-8);
  CHECK(max_residual(example2(5, 5)) < 1e-8);
  CHECK(max_residual(example3(1, 1, 1)) < 1e-8);
  CHECK(max_residual(example3(2, 0.5, 2)) < 1e-8);
}

TEST_CASE("Example 3 forcing integrated over [0,1]^2 is inconsistent") {
  CHECK(max_residual(example3(1, 1, 1, 0.0, 1.0)) > 1e-2);
}

TEST_CASE("delay geometry") {
  const auto e4 = example4(1, 1, 1, 1);
  CHECK(e4.has_delay());
  CHECK(e4.tau_max() == doctest::Approx(2 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(!e4.exact.has_value());
  CHECK(!example3(1, 1, 1).has_delay());
  CHECK(example3(1, 1, 1).tau_max() == 0.0);
  CHECK(e4.initial(0.3, -0.2, -1.0) == e4.initial(0.3, -0.2, 0.0));
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(example1(1, 1, 0), InvalidArgument);
  CHECK_THROWS_AS(example1(-1, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(example2(1, 0), InvalidArgument);
  CHECK_THROWS_AS(example3(1, -2, 1), InvalidArgument);
  CHECK_THROWS_AS(example4(1, 1, 1, 0), InvalidArgument);
  CHECK_THROWS_AS(example4(1, 1, 1, std::numeric_limits<double>::infinity()), InvalidArgument);

  auto spec = example1(1, 2, 1);
  CHECK_NOTHROW(spec.validate());
  spec.firing_rate_slope_max = 1.0;  // tanh(2x) has slope 2
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);

  auto other = example3(1, 1, 1);
  other.speed = -1;
  CHECK_THROWS_AS(other.validate(), InvalidArgument);
  other = example3(1, 1, 1);
  other.kernel = nullptr;
  CHECK_THROWS_AS(other.validate(), InvalidArgument);
}

TEST_CASE("kernel norms") {
  const auto grid = build_grid(Rectangle::unit_square(), 6, build_gauss_rule(4));
  auto zero = example1(1, 1, 1);
  zero.kernel = [](double) { return 0.0; };
  const auto z = compute_kernel_norms(zero, grid);
  CHECK(z.k_max == 0.0);
  CHECK(z.l2_norm == 0.0);

  const auto spec = example1(1, 1, 1);
  const auto n = compute_kernel_norms(spec, grid);
  CHECK(n.k_max == 1.0);  // the diagonal pair has distance 0

  // brute force over every pair of grid points
  double sq = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (std::size_t q = 0; q < grid.size(); ++q) {
      const double k = spec.kernel(std::hypot(grid.x_of(p) - grid.x_of(q), grid.y_of(p) - grid.y_of(q)));
      sq += grid.weight_of(p) * grid.weight_of(q) * k * k;
    }
  CHECK(std::abs(n.l2_norm - std::sqrt(sq)) < 1e-12);

  // and against a grid four times finer
  const auto fine = build_grid(Rectangle::unit_square(), 24, build_gauss_rule(4));
  CHECK(std::abs(n.l2_norm - compute_kernel_norms(spec, fine).l2_norm) < 1e-6);

  auto bad = spec;
  bad.kernel = [](double r) { return r < 1e-300 ? std::numeric_limits<double>::infinity() : 1.0; };
  CHECK_THROWS_AS(compute_kernel_norms(bad, grid), InvalidArgument);
}

}  // TEST_SUITE
