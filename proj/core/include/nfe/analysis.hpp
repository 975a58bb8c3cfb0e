#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nfe/model.hpp"
#include "nfe/solver.hpp"

namespace nfe {

enum class Norm { max, l2 };

/// Accepts "max" or "l2" (case-sensitive).
Norm parse_norm(std::string_view text);
std::string_view to_string(Norm norm);

/// Errors below this are treated as rounding noise when judging ratios.
inline constexpr double kRoundoffFloor = 1e-13;

/// ||state - exact(., t)|| over the grid. The L2 norm is quadrature-weighted.
double error_norm(std::span<const double> state, const SpaceTimeField& exact, double t,
                  const SpatialGrid& grid, Norm norm);
double error_norm(const FieldState& state, const SpaceTimeField& exact, const SpatialGrid& grid,
                  Norm norm);

struct ConvergenceRow {
  double param = 0.0;
  double error = 0.0;
  std::optional<double> ratio;  // previous error / this error
  std::optional<double> order;  // log2(ratio)
  bool roundoff_dominated = false;
  bool exact = false;  // zero error, ratio undefined
};

struct ConvergenceReport {
  std::string title;
  std::string param_name;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<ConvergenceRow> rows;

  std::string to_text() const;
  /// Header "param,error,ratio,order"; missing values are empty fields.
  std::string to_csv() const;
};

/// Builds rows with ratios from the second row on.
ConvergenceReport make_report(std::string title, std::string param_name,
                              std::span<const double> params, std::span<const double> errors);

struct LevelError {
  int level = 0;
  double time = 0.0;
  double error = 0.0;
  bool bootstrap_affected = false;  // level <= 2
};

/// Errors of one problem run with several nested time steps.
struct TimeStudy {
  std::string problem;
  Norm norm = Norm::max;
  std::vector<double> steps;
  std::vector<std::vector<LevelError>> errors;  // per step, levels 0..M
  std::vector<int> max_inner_iterations;        // per step

  /// Error of run `step_index` at time t, if t is one of its levels.
  std::optional<double> error_at(std::size_t step_index, double t) const;
  /// Times reached by every run, ascending (t > 0 only).
  std::vector<double> common_times() const;
  /// Rows over step sizes at time t.
  ConvergenceReport report_at(double t) const;
  /// One row per time level of the finest step, one error column per
  /// step and a ratio column per consecutive pair; blank where a coarser
  /// run has no level.
  std::string format_table() const;
};

/// Steps must divide T and each coarser step must be an integer multiple of
/// the next finer one. Throws InvalidArgument otherwise.
TimeStudy time_convergence_study(const ProblemSpec& spec, std::span<const double> steps,
                                 const SolverConfig& base, Norm norm = Norm::max);

/// One report per Chebyshev degree m with rows over N (pairs with m > N are
/// skipped). N must be multiples of k, strictly doubling.
std::vector<ConvergenceReport> space_convergence_study(const ProblemSpec& spec,
                                                       std::span<const int> axis_sizes,
                                                       std::span<const int> degrees, int k,
                                                       double time_step, double final_time,
                                                       Norm norm = Norm::max,
                                                       double inner_tolerance = 1e-14);

/// Side-by-side layout of space reports: one line per m, columns per N.
std::string format_space_table(std::span<const ConvergenceReport> reports);

}  // namespace nfe
