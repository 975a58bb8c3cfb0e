#include "nfe/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "nfe/error.hpp"

namespace nfe {
namespace {

constexpr double kNewtonTolerance = 1e-15;
constexpr int kNewtonMaxIterations = 100;

struct LegendreValue {
  double p;   // P_k(x)
  double dp;  // P_k'(x)
};

LegendreValue legendre(int k, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int j = 2; j <= k; ++j) {
    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  const double p = k == 0 ? p0 : p1;
  const double pm1 = k == 0 ? 0.0 : p0;
  return {p, k * (x * p - pm1) / (x * x - 1.0)};
}

}  // namespace

double Rectangle::diameter() const { return std::hypot(width(), height()); }

GaussRule build_gauss_rule(int k) {
  if (k < 1 || k > 32) {
    throw InvalidArgument("gauss rule: k must be in [1, 32], got " + std::to_string(k));
  }
  GaussRule rule;
  rule.k = k;
  rule.nodes.assign(k, 0.0);
  rule.weights.assign(k, 0.0);

  // Roots come in +/- pairs; solve for the positive half and mirror.
  const int half = (k + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (k + 0.5));
    bool converged = false;
    for (int it = 0; it < kNewtonMaxIterations; ++it) {
      const auto [p, dp] = legendre(k, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) <= kNewtonTolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw SolverError("gauss rule: Newton iteration did not converge for k=" +
                        std::to_string(k));
    }
    if (2 * i + 1 == k) x = 0.0;
    const double dp = legendre(k, x).dp;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[k - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[k - 1 - i] = w;
    rule.weights[i] = w;
  }
  return rule;
}

SpatialGrid::SpatialGrid(const Rectangle& domain, int n, const GaussRule& rule)
    : domain_(domain), n_(n), k_(rule.k) {
  if (n < 1) throw InvalidArgument("grid: n must be >= 1");
  if (rule.k < 1 || static_cast<int>(rule.nodes.size()) != rule.k) {
    throw InvalidArgument("grid: malformed Gauss rule");
  }
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) {
    throw InvalidArgument("grid: degenerate domain");
  }
  const auto fill = [&](double lo, double width, std::vector<double>& nodes,
                        std::vector<double>& weights) {
    const double h = width / n;
    nodes.reserve(n * k_);
    weights.reserve(n * k_);
    for (int i = 0; i < n; ++i) {
      const double left = lo + i * h;
      for (int s = 0; s < k_; ++s) {
        nodes.push_back(left + 0.5 * h * (1.0 + rule.nodes[s]));
        weights.push_back(0.5 * h * rule.weights[s]);
      }
    }
  };
  fill(domain.x_lo, domain.width(), x_nodes_, x_weights_);
  fill(domain.y_lo, domain.height(), y_nodes_, y_weights_);
}

double SpatialGrid::weight_sum() const {
  double sx = 0.0;
  double sy = 0.0;
  for (double w : x_weights_) sx += w;
  for (double w : y_weights_) sy += w;
  return sx * sy;
}

SpatialGrid build_grid(const Rectangle& domain, int n, const GaussRule& rule) {
  return SpatialGrid(domain, n, rule);
}

double apply_quadrature(const SpatialGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) {
    throw InvalidArgument("quadrature: expected " + std::to_string(grid.size()) +
                          " samples, got " + std::to_string(values.size()));
  }
  const int N = grid.axis_size();
  const auto wx = grid.x_weights();
  const auto wy = grid.y_weights();
  double total = 0.0;
  for (int a = 0; a < N; ++a) {
    double row = 0.0;
    const double* v = values.data() + static_cast<std::size_t>(a) * N;
    for (int b = 0; b < N; ++b) row += wy[b] * v[b];
    total += wx[a] * row;
  }
  return total;
}

}  // namespace nfe
