#include "nfe/chebyshev.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nfe/error.hpp"

namespace nfe {
namespace {

double basis_scale(int k, int m) {
  const double d0 = 1.0 / std::sqrt(static_cast<double>(m));
  return k == 0 ? d0 : std::numbers::sqrt2 * d0;
}

Matrix evaluation_matrix(int m, std::span<const double> points, double lo, double hi) {
  Matrix p(m, static_cast<Eigen::Index>(points.size()));
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  for (Eigen::Index a = 0; a < p.cols(); ++a) {
    const double theta = std::acos(std::clamp((points[a] - mid) / half, -1.0, 1.0));
    for (int k = 0; k < m; ++k) p(k, a) = basis_scale(k, m) * std::cos(k * theta);
  }
  return p;
}

void check_shape(const ChebOperator& op, const Matrix& mat, const char* what) {
  if (mat.rows() != op.degree() || mat.cols() != op.degree()) {
    throw InvalidArgument(std::string(what) + ": expected " + std::to_string(op.degree()) +
                          "x" + std::to_string(op.degree()) + " matrix");
  }
}

}  // namespace

ChebOperator::ChebOperator(int m, const SpatialGrid& grid) : m_(m) {
  if (m < 2 || m > grid.axis_size()) {
    throw InvalidArgument("chebyshev: degree m must be in [2, N=" +
                          std::to_string(grid.axis_size()) + "], got " + std::to_string(m));
  }
  const Rectangle& dom = grid.domain();
  ref_nodes_.resize(m);
  x_nodes_.resize(m);
  y_nodes_.resize(m);
  c_.resize(m, m);
  for (int j = 0; j < m; ++j) {
    const double theta = (2.0 * j + 1.0) * std::numbers::pi / (2.0 * m);
    const double t = std::cos(theta);
    ref_nodes_[j] = t;
    x_nodes_[j] = 0.5 * (dom.x_lo + dom.x_hi) + 0.5 * dom.width() * t;
    y_nodes_[j] = 0.5 * (dom.y_lo + dom.y_hi) + 0.5 * dom.height() * t;
    for (int k = 0; k < m; ++k) c_(k, j) = basis_scale(k, m) * std::cos(k * theta);
  }
  px_ = evaluation_matrix(m, grid.x_nodes(), dom.x_lo, dom.x_hi);
  py_ = evaluation_matrix(m, grid.y_nodes(), dom.y_lo, dom.y_hi);
}

ChebOperator build_cheb_operator(int m, const SpatialGrid& grid) { return ChebOperator(m, grid); }

Matrix coeffs_from_samples(const ChebOperator& op, const Matrix& samples) {
  check_shape(op, samples, "coeffs_from_samples");
  return op.transform() * samples * op.transform().transpose();
}

Matrix samples_from_coeffs(const ChebOperator& op, const Matrix& coeffs) {
  check_shape(op, coeffs, "samples_from_coeffs");
  return op.transform().transpose() * coeffs * op.transform();
}

RowMatrix eval_on_grid(const ChebOperator& op, const Matrix& coeffs) {
  check_shape(op, coeffs, "eval_on_grid");
  RowMatrix t = op.x_evaluation().transpose() * coeffs * op.y_evaluation();
  return t;
}

std::vector<double> lift_to_grid(const ChebOperator& op, std::span<const double> nodal) {
  if (nodal.size() != op.node_count()) {
    throw InvalidArgument("lift_to_grid: expected m^2 nodal values");
  }
  const int m = op.degree();
  const Eigen::Map<const RowMatrix> samples(nodal.data(), m, m);
  const RowMatrix t = eval_on_grid(op, coeffs_from_samples(op, samples));
  return {t.data(), t.data() + t.size()};
}

}  // namespace nfe
