#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nfe {

/// Axis-aligned rectangle [x_lo, x_hi] x [y_lo, y_hi].
struct Rectangle {
  double x_lo = -1.0;
  double x_hi = 1.0;
  double y_lo = -1.0;
  double y_hi = 1.0;

  double width() const { return x_hi - x_lo; }
  double height() const { return y_hi - y_lo; }
  double area() const { return width() * height(); }
  double diameter() const;

  static Rectangle unit_square() { return {}; }
};

/// k-point Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  int k = 0;
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // positive, sum to 2
};

/// Newton iteration on P_k from Chebyshev-root initial guesses.
/// Throws InvalidArgument unless 1 <= k <= 32.
GaussRule build_gauss_rule(int k);

/// Composite tensor-product Gauss grid on a rectangle.
///
/// Each axis is split into n equal subintervals carrying k Gauss nodes, so
/// an axis holds N = n*k points. Flattened point (a, b), where a indexes the
/// first axis and b the second, lives at index a*N + b; with a = i*k + s
/// this is the project-wide layout (i*k + s)*N + (j*k + t).
class SpatialGrid {
 public:
  SpatialGrid(const Rectangle& domain, int n, const GaussRule& rule);

  const Rectangle& domain() const { return domain_; }
  int subintervals() const { return n_; }
  int nodes_per_subinterval() const { return k_; }
  /// Points per axis, N = n*k.
  int axis_size() const { return n_ * k_; }
  /// Total points, N^2.
  std::size_t size() const {
    return static_cast<std::size_t>(axis_size()) * axis_size();
  }
  double step_x() const { return domain_.width() / n_; }
  double step_y() const { return domain_.height() / n_; }

  std::span<const double> x_nodes() const { return x_nodes_; }
  std::span<const double> y_nodes() const { return y_nodes_; }
  /// (h/2) w_s per axis position.
  std::span<const double> x_weights() const { return x_weights_; }
  std::span<const double> y_weights() const { return y_weights_; }

  std::size_t index(int a, int b) const {
    return static_cast<std::size_t>(a) * axis_size() + b;
  }
  double x_of(std::size_t idx) const { return x_nodes_[idx / axis_size()]; }
  double y_of(std::size_t idx) const { return y_nodes_[idx % axis_size()]; }
  double weight_of(std::size_t idx) const {
    return x_weights_[idx / axis_size()] * y_weights_[idx % axis_size()];
  }

  /// Sum of all tensor weight products; equals the domain area.
  double weight_sum() const;

 private:
  Rectangle domain_;
  int n_;
  int k_;
  std::vector<double> x_nodes_;
  std::vector<double> y_nodes_;
  std::vector<double> x_weights_;
  std::vector<double> y_weights_;
};

/// Throws InvalidArgument on n < 1 or a zero-width domain.
SpatialGrid build_grid(const Rectangle& domain, int n, const GaussRule& rule);

/// Tensor quadrature sum over the grid of row-major samples.
double apply_quadrature(const SpatialGrid& grid, std::span<const double> values);

/// Samples f(x, y) at every grid point in flattened order.
template <typename F>
std::vector<double> sample_on_grid(const SpatialGrid& grid, F&& f) {
  std::vector<double> out(grid.size());
  for (std::size_t q = 0; q < out.size(); ++q) out[q] = f(grid.x_of(q), grid.y_of(q));
  return out;
}

}  // namespace nfe
