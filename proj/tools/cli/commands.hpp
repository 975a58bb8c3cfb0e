#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nfe/analysis.hpp"
#include "nfe/model.hpp"
#include "nfe/solver.hpp"

namespace nfe::cli {

/// Parameters shared by every subcommand. Unset optionals take the
/// per-example defaults (see resolve()).
struct RunConfig {
  std::string command;
  int example = 1;
  std::optional<double> lambda;
  std::optional<double> sigma;
  std::optional<double> mu;
  std::optional<double> c;
  std::optional<double> v;
  std::optional<double> ht;
  std::optional<double> T;
  std::optional<int> n;
  int k = 4;
  std::optional<int> m;
  std::optional<double> eps_inner;
  int max_inner = 50;
  bool rank_reduction = true;
  Norm norm = Norm::max;
  std::optional<std::vector<double>> snapshots;
  std::optional<std::vector<double>> steps;
  std::optional<std::vector<int>> grid_sizes;
  std::optional<std::vector<int>> degrees;
  std::string out = ".";
};

/// Fills every unset parameter with the defaults of the selected example
/// and subcommand. Throws InvalidArgument on invalid combinations.
RunConfig resolve(RunConfig config);

ProblemSpec make_problem(const RunConfig& config);
SolverConfig make_solver_config(const RunConfig& config);

/// "x1,x2,V" header then one line per grid point in flattened order.
std::string format_snapshot_csv(const SpatialGrid& grid, std::span<const double> values);

/// 17 significant digits, scientific.
std::string format_number(double value);

int cmd_run(const RunConfig& config, std::ostream& out);
int cmd_converge_time(const RunConfig& config, std::ostream& out);
int cmd_converge_space(const RunConfig& config, std::ostream& out);
int cmd_compare_delay(const RunConfig& config, std::ostream& out);

/// Parses flags (and an optional key=value --config file) and dispatches.
/// Returns the process exit status; diagnostics go to `err`.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nfe::cli
