#include "nfe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nfe/error.hpp"

namespace nfe {
namespace {

std::string sci(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits, v);
  return buf;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string general(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

bool is_multiple(double big, double small) {
  const double q = big / small;
  return std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q);
}

bool same_time(double a, double b, double scale) { return std::abs(a - b) <= 1e-9 * scale; }

}  // namespace

Norm parse_norm(std::string_view text) {
  if (text == "max") return Norm::max;
  if (text == "l2") return Norm::l2;
  throw InvalidArgument("unknown norm '" + std::string(text) + "' (expected max or l2)");
}

std::string_view to_string(Norm norm) { return norm == Norm::max ? "max" : "l2"; }

double error_norm(std::span<const double> state, const SpaceTimeField& exact, double t,
                  const SpatialGrid& grid, Norm norm) {
  if (state.size() != grid.size()) throw InvalidArgument("error norm: state size mismatch");
  if (!exact) throw InvalidArgument("error norm: no exact solution");
  double acc = 0.0;
  for (std::size_t q = 0; q < state.size(); ++q) {
    const double e = state[q] - exact(grid.x_of(q), grid.y_of(q), t);
    if (norm == Norm::max) {
      acc = std::max(acc, std::abs(e));
    } else {
      acc += grid.weight_of(q) * e * e;
    }
  }
  return norm == Norm::max ? acc : std::sqrt(acc);
}

double error_norm(const FieldState& state, const SpaceTimeField& exact, const SpatialGrid& grid,
                  Norm norm) {
  return error_norm(state.values, exact, state.time, grid, norm);
}

// ---------------------------------------------------------------------------

ConvergenceReport make_report(std::string title, std::string param_name,
                              std::span<const double> params, std::span<const double> errors) {
  if (params.size() != errors.size()) throw InvalidArgument("report: size mismatch");
  ConvergenceReport report;
  report.title = std::move(title);
  report.param_name = std::move(param_name);
  for (std::size_t r = 0; r < params.size(); ++r) {
    ConvergenceRow row;
    row.param = params[r];
    row.error = errors[r];
    row.exact = errors[r] == 0.0;
    row.roundoff_dominated = !row.exact && errors[r] < kRoundoffFloor;
    if (r > 0 && !row.exact && errors[r - 1] > 0.0) {
      row.ratio = errors[r - 1] / errors[r];
      row.order = std::log2(*row.ratio);
    }
    report.rows.push_back(row);
  }
  return report;
}

std::string ConvergenceReport::to_text() const {
  std::ostringstream os;
  if (!title.empty()) os << title << '\n';
  for (const auto& [key, value] : metadata) os << "  " << key << " = " << value << '\n';
  os << pad(param_name, 10) << pad("error", 14) << pad("ratio", 10) << pad("order", 8) << '\n';
  for (const auto& row : rows) {
    os << pad(general(row.param), 10) << pad(sci(row.error), 14)
       << pad(row.ratio ? fixed(*row.ratio) : "", 10) << pad(row.order ? fixed(*row.order) : "", 8);
    if (row.exact) os << "  exact";
    if (row.roundoff_dominated) os << "  roundoff-dominated";
    os << '\n';
  }
  return os.str();
}

std::string ConvergenceReport::to_csv() const {
  std::ostringstream os;
  os << "param,error,ratio,order\n";
  for (const auto& row : rows) {
    os << csv_number(row.param) << ',' << csv_number(row.error) << ','
       << (row.ratio ? csv_number(*row.ratio) : "") << ','
       << (row.order ? csv_number(*row.order) : "") << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

std::optional<double> TimeStudy::error_at(std::size_t step_index, double t) const {
  for (const auto& e : errors.at(step_index)) {
    if (same_time(e.time, t, steps[step_index])) return e.error;
  }
  return std::nullopt;
}

std::vector<double> TimeStudy::common_times() const {
  std::vector<double> out;
  if (errors.empty()) return out;
  const auto coarsest = std::max_element(steps.begin(), steps.end()) - steps.begin();
  for (const auto& e : errors[static_cast<std::size_t>(coarsest)]) {
    if (e.level == 0) continue;
    bool everywhere = true;
    for (std::size_t s = 0; s < steps.size(); ++s) everywhere &= error_at(s, e.time).has_value();
    if (everywhere) out.push_back(e.time);
  }
  return out;
}

ConvergenceReport TimeStudy::report_at(double t) const {
  std::vector<double> params;
  std::vector<double> errs;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const auto e = error_at(s, t);
    if (!e) throw InvalidArgument("time study: step " + std::to_string(steps[s]) +
                                  " has no level at t=" + std::to_string(t));
    params.push_back(steps[s]);
    errs.push_back(*e);
  }
  ConvergenceReport report = make_report(problem + " time convergence at t=" + fixed(t, 4),
                                         "h_t", params, errs);
  report.metadata.emplace_back("norm", std::string(to_string(norm)));
  return report;
}

std::string TimeStudy::format_table() const {
  std::ostringstream os;
  const auto finest = std::min_element(steps.begin(), steps.end()) - steps.begin();
  os << pad("t", 8);
  for (double h : steps) os << pad("e(" + fixed(h, 4) + ")", 14);
  for (std::size_t s = 1; s < steps.size(); ++s) os << pad("ratio", 10);
  os << '\n';
  for (const auto& level : errors[static_cast<std::size_t>(finest)]) {
    if (level.level == 0) continue;
    os << pad(fixed(level.time, 4), 8);
    std::vector<std::optional<double>> row;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      row.push_back(error_at(s, level.time));
      os << pad(row.back() ? sci(*row.back(), 2) : "", 14);
    }
    for (std::size_t s = 1; s < steps.size(); ++s) {
      os << pad(row[s - 1] && row[s] && *row[s] > 0.0 ? fixed(*row[s - 1] / *row[s]) : "", 10);
    }
    if (level.bootstrap_affected) os << "  (bootstrap)";
    os << '\n';
  }
  return os.str();
}

TimeStudy time_convergence_study(const ProblemSpec& spec, std::span<const double> steps,
                                 const SolverConfig& base, Norm norm) {
  if (steps.empty()) throw InvalidArgument("time study: need at least one step size");
  if (!spec.exact) throw InvalidArgument("time study: problem has no exact solution");
  std::vector<double> sorted(steps.begin(), steps.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (double h : sorted) {
    if (!(h > 0.0)) throw InvalidArgument("time study: step sizes must be positive");
    if (!is_multiple(base.final_time, h)) {
      throw InvalidArgument("time study: step " + std::to_string(h) + " does not divide T");
    }
  }
  for (std::size_t s = 1; s < sorted.size(); ++s) {
    if (!is_multiple(sorted[s - 1], sorted[s]) || sorted[s - 1] == sorted[s]) {
      throw InvalidArgument("time study: steps " + std::to_string(sorted[s - 1]) + " and " +
                            std::to_string(sorted[s]) + " are not nested");
    }
  }

  TimeStudy study;
  study.problem = spec.name;
  study.norm = norm;
  study.steps = sorted;
  for (double h : sorted) {
    SolverConfig config = base;
    config.time_step = h;
    Solver solver(spec, config);
    const SolveResult result = solver.solve();
    std::vector<LevelError> errs;
    for (std::size_t level = 0; level < result.states.size(); ++level) {
      const FieldState& state = result.states[level];
      errs.push_back({static_cast<int>(level), state.time,
                      error_norm(state, *spec.exact, solver.grid(), norm), level <= 2});
    }
    int max_iter = 0;
    for (const auto& d : result.diagnostics) max_iter = std::max(max_iter, d.inner_iterations);
    study.errors.push_back(std::move(errs));
    study.max_inner_iterations.push_back(max_iter);
  }
  return study;
}

std::vector<ConvergenceReport> space_convergence_study(const ProblemSpec& spec,
                                                       std::span<const int> axis_sizes,
                                                       std::span<const int> degrees, int k,
                                                       double time_step, double final_time,
                                                       Norm norm, double inner_tolerance) {
  if (!spec.exact) throw InvalidArgument("space study: problem has no exact solution");
  if (axis_sizes.empty() || degrees.empty()) {
    throw InvalidArgument("space study: need at least one N and one m");
  }
  for (std::size_t i = 0; i < axis_sizes.size(); ++i) {
    if (axis_sizes[i] < k || axis_sizes[i] % k != 0) {
      throw InvalidArgument("space study: N=" + std::to_string(axis_sizes[i]) +
                            " is not a multiple of k=" + std::to_string(k));
    }
    if (i > 0 && axis_sizes[i] != 2 * axis_sizes[i - 1]) {
      throw InvalidArgument("space study: N values must double");
    }
  }
  const int largest = axis_sizes.back();
  std::vector<ConvergenceReport> reports;
  for (int m : degrees) {
    if (m < 2 || m > largest) {
      throw InvalidArgument("space study: m=" + std::to_string(m) + " exceeds every N (max " +
                            std::to_string(largest) + ")");
    }
    std::vector<double> params;
    std::vector<double> errs;
    for (int N : axis_sizes) {
      if (m > N) continue;
      SolverConfig config;
      config.time_step = time_step;
      config.final_time = final_time;
      config.cheb_degree = m;
      config.gauss_nodes = k;
      config.subintervals = N / k;
      config.inner_tolerance = inner_tolerance;
      Solver solver(spec, config);
      const SolveResult result = solver.solve();
      params.push_back(N);
      errs.push_back(error_norm(result.states.back(), *spec.exact, solver.grid(), norm));
    }
    ConvergenceReport report = make_report(spec.name + " space convergence, m=" +
                                               std::to_string(m),
                                           "N", params, errs);
    report.metadata.emplace_back("m", std::to_string(m));
    report.metadata.emplace_back("k", std::to_string(k));
    report.metadata.emplace_back("h_t", fixed(time_step, 6));
    report.metadata.emplace_back("t", fixed(final_time, 6));
    report.metadata.emplace_back("norm", std::string(to_string(norm)));
    reports.push_back(std::move(report));
  }
  return reports;
}

std::string format_space_table(std::span<const ConvergenceReport> reports) {
  std::vector<double> all_n;
  for (const auto& r : reports)
    for (const auto& row : r.rows) all_n.push_back(row.param);
  std::sort(all_n.begin(), all_n.end());
  all_n.erase(std::unique(all_n.begin(), all_n.end()), all_n.end());

  std::ostringstream os;
  os << pad("m", 5);
  for (std::size_t i = 0; i < all_n.size(); ++i) {
    os << pad("N=" + std::to_string(static_cast<int>(all_n[i])), 14);
    if (i > 0) os << pad("ratio", 9);
  }
  os << '\n';
  for (const auto& r : reports) {
    std::string m = "?";
    for (const auto& [key, value] : r.metadata)
      if (key == "m") m = value;
    os << pad(m, 5);
    for (std::size_t i = 0; i < all_n.size(); ++i) {
      const auto it = std::find_if(r.rows.begin(), r.rows.end(),
                                   [&](const ConvergenceRow& row) { return row.param == all_n[i]; });
      os << pad(it != r.rows.end() ? sci(it->error, 3) : "", 14);
      if (i > 0) os << pad(it != r.rows.end() && it->ratio ? fixed(*it->ratio, 0) : "", 9);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace nfe
