#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nfe/quadrature.hpp"

namespace nfe {

using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Tensor Chebyshev interpolation between m x m Chebyshev roots and the
/// N x N Gauss grid.
///
/// Basis: c_k(t) = delta_k cos(k arccos t) with delta_0 = 1/sqrt(m),
/// delta_k = sqrt(2/m). With roots t_j = cos((2j-1)pi/(2m)) the matrix
/// C_kj = c_k(t_j) is orthogonal, so nodal values M and coefficients
/// Lambda = C M C^T are related by an exact inverse.
class ChebOperator {
 public:
  ChebOperator(int m, const SpatialGrid& grid);

  int degree() const { return m_; }
  int grid_axis_size() const { return static_cast<int>(px_.cols()); }

  /// Roots on [-1, 1], in decreasing order.
  const std::vector<double>& reference_nodes() const { return ref_nodes_; }
  /// Roots mapped affinely onto each domain axis.
  const std::vector<double>& x_nodes() const { return x_nodes_; }
  const std::vector<double>& y_nodes() const { return y_nodes_; }

  /// m x m, C(k, j) = c_k(t_j).
  const Matrix& transform() const { return c_; }
  /// m x N, P(k, a) = c_k(mapped x_a); one per axis.
  const Matrix& x_evaluation() const { return px_; }
  const Matrix& y_evaluation() const { return py_; }

  /// Number of interpolation points, m^2.
  std::size_t node_count() const { return static_cast<std::size_t>(m_) * m_; }

 private:
  int m_;
  std::vector<double> ref_nodes_;
  std::vector<double> x_nodes_;
  std::vector<double> y_nodes_;
  Matrix c_;
  Matrix px_;
  Matrix py_;
};

/// Requires 2 <= m <= N.
ChebOperator build_cheb_operator(int m, const SpatialGrid& grid);

/// Lambda = C M C^T. M(i, j) is the value at (x_nodes[i], y_nodes[j]).
Matrix coeffs_from_samples(const ChebOperator& op, const Matrix& samples);

/// Inverse of coeffs_from_samples: M = C^T Lambda C.
Matrix samples_from_coeffs(const ChebOperator& op, const Matrix& coeffs);

/// T = Px^T Lambda Py; T(a, b) is the interpolant at grid point (x_a, y_b).
/// Row-major storage, so T.data() is the flattened grid field.
RowMatrix eval_on_grid(const ChebOperator& op, const Matrix& coeffs);

/// Nodal values (flattened, first axis outer) -> grid field of size N^2.
std::vector<double> lift_to_grid(const ChebOperator& op, std::span<const double> nodal);

}  // namespace nfe
