#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nfe/chebyshev.hpp"
#include "nfe/model.hpp"
#include "nfe/quadrature.hpp"

namespace nfe {

struct SolverConfig {
  double time_step = 0.01;
  double final_time = 0.1;
  int cheb_degree = 12;
  int subintervals = 6;
  int gauss_nodes = 4;
  double inner_tolerance = 1e-10;
  int max_inner = 50;
  bool rank_reduction = true;

  int axis_size() const { return subintervals * gauss_nodes; }
  /// M = T / h_t; throws InvalidArgument unless T is a whole number of steps.
  int step_count() const;
  void validate() const;
};

/// Field on the grid at one time level, flattened row-major (first axis outer).
struct FieldState {
  std::vector<double> values;
  double time = 0.0;
};

struct StepDiagnostics {
  int level = 0;
  double time = 0.0;
  int inner_iterations = 0;
  /// Largest ratio of successive fixed-point corrections observed.
  double contraction_estimate = 0.0;
  double final_correction = 0.0;
  /// 3c / (2 K_max S_max |Omega|).
  double grid_step_bound = 0.0;
  /// 1 - (2 h_t / 3c)(1 + L1) with L1 = lambda K_max S_max |Omega|; stable if > 0.
  double stability_margin = 0.0;
};

/// Admissible time steps for a contractive inner iteration.
struct StepBounds {
  double l2_bound = 0.0;    // 3c / (2 sqrt|Omega| ||K||_L2 S_max)
  double grid_bound = 0.0;  // 3c / (2 K_max S_max |Omega|)
};

StepBounds step_bound(const ProblemSpec& spec, const SpatialGrid& grid);

/// BDF2 weight lambda = 2h / (2h + 3c) multiplying the integral term.
inline double implicit_weight(double time_step, double c) {
  return 2.0 * time_step / (2.0 * time_step + 3.0 * c);
}

/// One stored time level. `nodal` holds the values at the interpolation
/// points (Chebyshev roots, or the grid itself without rank reduction).
struct LevelState {
  int level = 0;
  double time = 0.0;
  std::vector<double> grid;
  std::vector<double> nodal;
};

/// Bounded window of the most recent time levels.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(std::size_t capacity = 3) : capacity_(capacity) {}

  void push(LevelState state);
  /// Throws SolverError if `level` has been evicted or not yet computed.
  const LevelState& at(int level) const;
  bool contains(int level) const;
  int newest_level() const;
  int oldest_level() const;
  std::size_t size() const { return levels_.size(); }
  std::size_t capacity() const { return capacity_; }
  void clear() { levels_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<LevelState> levels_;
};

/// Precomputed integrand data for every (evaluation point, grid node) pair.
/// Without delay only the kernel-weight products are stored.
struct DelayTable {
  /// K(|p - q|) * w_q; rows are evaluation points, columns grid nodes.
  RowMatrix kernel_weights;
  /// Whole history levels back to the delayed time (j); empty if undelayed.
  std::vector<int> offsets;
  /// Interpolation weight on level i - j (delta_t in (0, 1]).
  std::vector<double> fractions;
  int max_offset = 0;  // k_max

  bool delayed() const { return !offsets.empty(); }
};

DelayTable build_delay_table(const ProblemSpec& spec, const SpatialGrid& grid,
                             std::span<const double> eval_x, std::span<const double> eval_y,
                             double time_step);

struct SolveResult {
  std::vector<FieldState> states;  // levels 0..M
  std::vector<StepDiagnostics> diagnostics;  // levels 1..M
  StepBounds bounds;
  double stability_margin = 0.0;
  std::vector<std::string> warnings;
  std::uint64_t integrand_evaluations = 0;
};

/// BDF2 time stepper with Gauss-Legendre space discretisation.
///
/// Level 1 comes from one explicit Euler step; each later level solves
/// U_i = lambda kappa(U_i) + f_i by fixed-point iteration started from an
/// Euler predictor. With rank reduction the unknowns are the solution
/// values at the m^2 Chebyshev roots: the integral operator is evaluated
/// there by N^2-point quadrature, and the nodal values are lifted to the
/// grid through the Chebyshev transforms after every iteration.
class Solver {
 public:
  Solver(ProblemSpec spec, SolverConfig config);

  const ProblemSpec& problem() const { return spec_; }
  const SolverConfig& config() const { return config_; }
  const SpatialGrid& grid() const { return grid_; }
  const std::optional<ChebOperator>& cheb() const { return cheb_; }
  const DelayTable& delay_table() const { return table_; }
  const HistoryBuffer& history() const { return history_; }
  const KernelNorms& kernel_norms() const { return norms_; }
  const StepBounds& bounds() const { return bounds_; }

  /// m^2 with rank reduction, N^2 without.
  std::size_t evaluation_point_count() const { return eval_x_.size(); }
  std::span<const double> eval_x() const { return eval_x_; }
  std::span<const double> eval_y() const { return eval_y_; }

  /// Quadrature of K S(V_delayed) at each evaluation point for time level
  /// `level`, where `iterate` is the grid field standing in for that level.
  /// Delayed values at level - j are linearly interpolated from history.
  std::vector<double> apply_integral_operator(int level, std::span<const double> iterate) const;

  /// Clears history and seeds levels -k_max-1..0 from the initial history.
  void reset();
  /// One explicit Euler step of size `step` from level 0; does not modify
  /// history.
  FieldState euler_step(double step) const;
  /// Euler step with the configured h_t; stores level 1.
  FieldState euler_bootstrap();
  /// Computes and stores level i >= 2. Requires levels i-1 and i-2.
  std::pair<FieldState, StepDiagnostics> bdf2_step(int i);
  /// Full run 0..M (calls reset()).
  SolveResult solve();

  /// Integrand terms K(|p - q|) S(.) accumulated so far.
  std::uint64_t integrand_evaluations() const { return integrand_evaluations_; }
  void reset_counters() { integrand_evaluations_ = 0; }

 private:
  std::vector<double> lift(std::span<const double> nodal) const;
  std::vector<double> euler_nodal(double step) const;
  std::vector<double> input_at_nodes(double t) const;
  double time_of(int level) const { return level * config_.time_step; }
  void check_finite(std::span<const double> values, int level) const;

  ProblemSpec spec_;
  SolverConfig config_;
  SpatialGrid grid_;
  std::optional<ChebOperator> cheb_;
  std::vector<double> eval_x_;
  std::vector<double> eval_y_;
  DelayTable table_;
  KernelNorms norms_;
  StepBounds bounds_;
  HistoryBuffer history_;
  mutable std::uint64_t integrand_evaluations_ = 0;
};

}  // namespace nfe
