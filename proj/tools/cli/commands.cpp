#include "cli/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "nfe/error.hpp"

namespace nfe::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr double kFig1Times[] = {0.5, 1.0, 1.5, 2.0};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    std::size_t used = 0;
    T value{};
    try {
      if constexpr (std::is_same_v<T, int>) {
        value = std::stoi(item, &used);
      } else {
        value = std::stod(item, &used);
      }
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) {
      throw InvalidArgument(std::string("cannot parse ") + what + " entry '" + item + "'");
    }
    out.push_back(value);
  }
  return out;
}

fs::path output_dir(const RunConfig& config) {
  const fs::path dir(config.out);
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw OutputError("output directory '" + config.out + "' does not exist");
  }
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw OutputError("cannot open '" + path.string() + "' for writing");
  file << content;
  if (!file) throw OutputError("failed writing '" + path.string() + "'");
}

/// Level index of a snapshot time; throws unless t is a level in [0, T].
int snapshot_level(double t, const SolverConfig& solver) {
  const int steps = solver.step_count();
  const double q = t / solver.time_step;
  const double level = std::round(q);
  if (t < 0.0 || std::abs(q - level) > 1e-9 * std::max(1.0, level) || level > steps) {
    throw InvalidArgument("snapshot time " + short_number(t) +
                          " is not a time level in [0, T] for h_t=" +
                          short_number(solver.time_step));
  }
  return static_cast<int>(level);
}

json parameters_json(const RunConfig& config) {
  json p;
  p["command"] = config.command;
  p["example"] = config.example;
  if (config.lambda) p["lambda"] = *config.lambda;
  if (config.sigma) p["sigma"] = *config.sigma;
  if (config.mu) p["mu"] = *config.mu;
  p["c"] = config.c.value_or(1.0);
  p["v"] = config.v ? json(*config.v) : json("inf");
  if (config.ht) p["ht"] = *config.ht;
  p["T"] = config.T.value_or(0.0);
  p["n"] = config.n.value_or(0);
  p["k"] = config.k;
  p["N"] = config.n.value_or(0) * config.k;
  if (config.m) p["m"] = *config.m;
  p["rank_reduction"] = config.rank_reduction;
  p["eps_inner"] = config.eps_inner.value_or(0.0);
  p["max_inner"] = config.max_inner;
  p["norm"] = std::string(to_string(config.norm));
  if (config.steps) p["steps"] = *config.steps;
  if (config.grid_sizes) p["grid_sizes"] = *config.grid_sizes;
  if (config.degrees) p["degrees"] = *config.degrees;
  if (config.snapshots) p["snapshots"] = *config.snapshots;
  return p;
}

json solve_json(const SolveResult& result) {
  json j;
  j["l2_step_bound"] = std::isfinite(result.bounds.l2_bound) ? json(result.bounds.l2_bound)
                                                             : json("inf");
  j["grid_step_bound"] = std::isfinite(result.bounds.grid_bound)
                             ? json(result.bounds.grid_bound)
                             : json("inf");
  j["stability_margin"] = result.stability_margin;
  j["warnings"] = result.warnings;
  j["integrand_evaluations"] = result.integrand_evaluations;
  json steps = json::array();
  for (const auto& d : result.diagnostics) {
    steps.push_back({{"level", d.level},
                     {"time", d.time},
                     {"inner_iterations", d.inner_iterations},
                     {"contraction_estimate", d.contraction_estimate},
                     {"final_correction", d.final_correction}});
  }
  j["steps"] = steps;
  return j;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report_warnings(const SolveResult& result) {
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", value);
  return buf;
}

std::string format_snapshot_csv(const SpatialGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw InvalidArgument("snapshot: size mismatch");
  std::string out = "x1,x2,V\n";
  out.reserve(values.size() * 72);
  for (std::size_t q = 0; q < values.size(); ++q) {
    out += format_number(grid.x_of(q));
    out += ',';
    out += format_number(grid.y_of(q));
    out += ',';
    out += format_number(values[q]);
    out += '\n';
  }
  return out;
}

RunConfig resolve(RunConfig config) {
  const int ex = config.example;
  if (ex < 1 || ex > 4) throw InvalidArgument("--example must be 1, 2, 3 or 4");
  config.lambda = config.lambda.value_or(1.0);
  if (ex <= 2) {
    config.sigma = config.sigma.value_or(1.0);
    if (config.mu) throw InvalidArgument("--mu applies to examples 3 and 4 only");
  } else {
    config.mu = config.mu.value_or(1.0);
    if (config.sigma) throw InvalidArgument("--sigma applies to examples 1 and 2 only");
  }
  if (ex == 2 && config.c && *config.c != 1.0) {
    throw InvalidArgument("example 2 fixes c = 1");
  }
  config.c = config.c.value_or(1.0);
  if (ex == 4) config.v = config.v.value_or(1.0);
  if (config.v && !(*config.v > 0.0)) throw InvalidArgument("--v must be positive");

  const bool space = config.command == "converge-space";
  const bool time = config.command == "converge-time";
  if (!config.T) config.T = ex == 3 ? 0.05 : ex == 4 ? 2.0 : 0.1;
  if (!config.ht) config.ht = ex == 4 ? 0.1 : 0.01;
  if (!config.n) config.n = 24 / config.k > 0 && 24 % config.k == 0 ? 24 / config.k : 6;
  if (!config.m) config.m = 12;
  if (!config.eps_inner) config.eps_inner = space ? 1e-14 : 1e-10;

  if (time) {
    if (!config.steps) {
      config.steps = ex == 3 ? std::vector<double>{0.01, 0.005, 0.0025}
                             : std::vector<double>{0.02, 0.01};
    }
    if (config.steps->empty()) throw InvalidArgument("--steps is empty");
  }
  if (space) {
    if (!config.grid_sizes) {
      config.grid_sizes = *config.lambda > 1.0 ? std::vector<int>{24, 48, 96}
                                               : std::vector<int>{12, 24, 48};
    }
    if (!config.degrees) {
      config.degrees = std::vector<int>{*config.m};
    }
    const int largest = *std::max_element(config.grid_sizes->begin(), config.grid_sizes->end());
    for (int m : *config.degrees) {
      if (m > largest) {
        throw InvalidArgument("m=" + std::to_string(m) + " exceeds the largest N=" +
                              std::to_string(largest));
      }
    }
  }
  if (!config.snapshots) {
    std::vector<double> snaps;
    if (config.command == "compare-delay" || ex == 4) {
      for (double t : kFig1Times)
        if (t <= *config.T + 1e-12) snaps.push_back(t);
    }
    if (snaps.empty()) snaps.push_back(*config.T);
    config.snapshots = snaps;
  }
  if (config.rank_reduction && !space && *config.m > *config.n * config.k) {
    throw InvalidArgument("m=" + std::to_string(*config.m) + " exceeds N=" +
                          std::to_string(*config.n * config.k));
  }
  return config;
}

ProblemSpec make_problem(const RunConfig& config) {
  ProblemSpec spec;
  switch (config.example) {
    case 1: spec = example1(*config.lambda, *config.sigma, *config.c); break;
    case 2: spec = example2(*config.lambda, *config.sigma); break;
    case 3: spec = example3(*config.lambda, *config.mu, *config.c); break;
    case 4: spec = example4(*config.lambda, *config.mu, *config.c, *config.v); break;
    default: throw InvalidArgument("unknown example");
  }
  if (config.v && std::isfinite(*config.v) && config.example != 4) {
    spec.speed = *config.v;
    spec.exact.reset();
  }
  return spec;
}

SolverConfig make_solver_config(const RunConfig& config) {
  SolverConfig s;
  s.time_step = *config.ht;
  s.final_time = *config.T;
  s.cheb_degree = *config.m;
  s.subintervals = *config.n;
  s.gauss_nodes = config.k;
  s.inner_tolerance = *config.eps_inner;
  s.max_inner = config.max_inner;
  s.rank_reduction = config.rank_reduction;
  s.validate();
  return s;
}

int cmd_run(const RunConfig& config, std::ostream& out) {
  const fs::path dir = output_dir(config);
  const ProblemSpec spec = make_problem(config);
  const SolverConfig solver_config = make_solver_config(config);
  std::vector<int> levels;
  for (double t : *config.snapshots) levels.push_back(snapshot_level(t, solver_config));

  const auto start = std::chrono::steady_clock::now();
  Solver solver(spec, solver_config);
  const SolveResult result = solver.solve();
  const double wall = seconds_since(start);
  report_warnings(result);

  json manifest;
  manifest["problem"] = spec.name;
  manifest["parameters"] = parameters_json(config);
  manifest["solve"] = solve_json(result);
  manifest["snapshot_files"] = json::array();
  std::vector<std::pair<fs::path, std::string>> files;
  for (std::size_t s = 0; s < levels.size(); ++s) {
    const FieldState& state = result.states[static_cast<std::size_t>(levels[s])];
    const std::string name = "snapshot_t" + short_number(config.snapshots->at(s)) + ".csv";
    files.emplace_back(dir / name, format_snapshot_csv(solver.grid(), state.values));
    manifest["snapshot_files"].push_back(name);
    out << "t=" << short_number(state.time) << " max|V|=" << format_number(max_abs(state.values));
    if (spec.exact) {
      out << " error=" << format_number(error_norm(state, *spec.exact, solver.grid(), config.norm));
    }
    out << '\n';
  }
  manifest["wall_time_seconds"] = wall;
  files.emplace_back(dir / "manifest.json", manifest.dump(2) + "\n");
  for (const auto& [path, content] : files) write_file(path, content);
  return 0;
}

int cmd_converge_time(const RunConfig& config, std::ostream& out) {
  const fs::path dir = output_dir(config);
  const ProblemSpec spec = make_problem(config);
  const SolverConfig base = make_solver_config(config);
  const auto start = std::chrono::steady_clock::now();
  const TimeStudy study = time_convergence_study(spec, *config.steps, base, config.norm);
  const double wall = seconds_since(start);

  ConvergenceReport report = study.report_at(base.final_time);
  const std::string table = study.format_table();
  out << table << '\n' << report.to_text();

  json manifest;
  manifest["problem"] = spec.name;
  manifest["parameters"] = parameters_json(config);
  manifest["max_inner_iterations"] = study.max_inner_iterations;
  manifest["report_files"] = {"time_report.csv", "time_table.txt"};
  manifest["wall_time_seconds"] = wall;
  write_file(dir / "time_report.csv", report.to_csv());
  write_file(dir / "time_table.txt", table);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

int cmd_converge_space(const RunConfig& config, std::ostream& out) {
  const fs::path dir = output_dir(config);
  const ProblemSpec spec = make_problem(config);
  const auto start = std::chrono::steady_clock::now();
  const auto reports =
      space_convergence_study(spec, *config.grid_sizes, *config.degrees, config.k, *config.ht,
                              *config.T, config.norm, *config.eps_inner);
  const double wall = seconds_since(start);
  const std::string table = format_space_table(reports);
  out << table;

  json manifest;
  manifest["problem"] = spec.name;
  manifest["parameters"] = parameters_json(config);
  manifest["report_files"] = json::array();
  std::vector<std::pair<fs::path, std::string>> files;
  for (const auto& report : reports) {
    std::string m;
    for (const auto& [key, value] : report.metadata)
      if (key == "m") m = value;
    const std::string name = "space_report_m" + m + ".csv";
    files.emplace_back(dir / name, report.to_csv());
    manifest["report_files"].push_back(name);
    out << '\n' << report.to_text();
  }
  manifest["wall_time_seconds"] = wall;
  files.emplace_back(dir / "space_table.txt", table);
  files.emplace_back(dir / "manifest.json", manifest.dump(2) + "\n");
  for (const auto& [path, content] : files) write_file(path, content);
  return 0;
}

int cmd_compare_delay(const RunConfig& config, std::ostream& out) {
  if (!config.v || !std::isfinite(*config.v)) {
    throw InvalidArgument("compare-delay needs a finite --v");
  }
  const fs::path dir = output_dir(config);
  const ProblemSpec delayed = make_problem(config);
  ProblemSpec undelayed = delayed;
  undelayed.speed = std::numeric_limits<double>::infinity();
  undelayed.name += "-nodelay";
  const SolverConfig solver_config = make_solver_config(config);
  std::vector<int> levels;
  for (double t : *config.snapshots) levels.push_back(snapshot_level(t, solver_config));

  const auto start = std::chrono::steady_clock::now();
  Solver delayed_solver(delayed, solver_config);
  const SolveResult with_delay = delayed_solver.solve();
  Solver plain_solver(undelayed, solver_config);
  const SolveResult without_delay = plain_solver.solve();
  const double wall = seconds_since(start);
  report_warnings(with_delay);

  json manifest;
  manifest["problem"] = delayed.name;
  manifest["parameters"] = parameters_json(config);
  manifest["solve_delayed"] = solve_json(with_delay);
  manifest["solve_undelayed"] = solve_json(without_delay);
  manifest["snapshot_files"] = json::array();
  std::vector<std::pair<fs::path, std::string>> files;
  std::string summary = "t,max_delayed,max_undelayed,max_difference\n";
  for (std::size_t s = 0; s < levels.size(); ++s) {
    const auto level = static_cast<std::size_t>(levels[s]);
    const auto& a = with_delay.states[level].values;
    const auto& b = without_delay.states[level].values;
    double diff = 0.0;
    for (std::size_t q = 0; q < a.size(); ++q) diff = std::max(diff, std::abs(a[q] - b[q]));
    const std::string tag = short_number(config.snapshots->at(s));
    files.emplace_back(dir / ("delay_t" + tag + ".csv"),
                       format_snapshot_csv(delayed_solver.grid(), a));
    files.emplace_back(dir / ("nodelay_t" + tag + ".csv"),
                       format_snapshot_csv(plain_solver.grid(), b));
    manifest["snapshot_files"].push_back("delay_t" + tag + ".csv");
    manifest["snapshot_files"].push_back("nodelay_t" + tag + ".csv");
    summary += format_number(with_delay.states[level].time) + ',' + format_number(max_abs(a)) +
               ',' + format_number(max_abs(b)) + ',' + format_number(diff) + '\n';
    out << "t=" << tag << " delayed max|V|=" << format_number(max_abs(a))
        << " undelayed max|V|=" << format_number(max_abs(b))
        << " max difference=" << format_number(diff) << '\n';
  }
  manifest["wall_time_seconds"] = wall;
  files.emplace_back(dir / "summary.csv", summary);
  files.emplace_back(dir / "manifest.json", manifest.dump(2) + "\n");
  for (const auto& [path, content] : files) write_file(path, content);
  return 0;
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural field equation solver: BDF2 in time, Gauss-Legendre in space"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value parameter file (flags override it)");

  RunConfig config;
  double lambda = 0, sigma = 0, mu = 0, c = 0, v = 0, ht = 0, T = 0, eps = 0;
  int n = 0, m = 0;
  std::string norm = "max";
  std::string snapshots, steps, grid_sizes, degrees;
  bool no_rr = false;

  app.add_option("--example", config.example, "built-in problem 1-4")->check(CLI::Range(1, 4));
  auto* o_lambda = app.add_option("--lambda", lambda, "kernel width parameter");
  auto* o_sigma = app.add_option("--sigma", sigma, "firing-rate steepness (examples 1, 2)");
  auto* o_mu = app.add_option("--mu", mu, "initial profile width (examples 3, 4)");
  auto* o_c = app.add_option("--c", c, "membrane time constant");
  auto* o_v = app.add_option("--v", v, "propagation speed (finite => delay)");
  auto* o_ht = app.add_option("--ht", ht, "time step");
  auto* o_T = app.add_option("--T", T, "final time");
  auto* o_n = app.add_option("--n", n, "subintervals per axis");
  app.add_option("--k", config.k, "Gauss nodes per subinterval")->check(CLI::Range(1, 32));
  auto* o_m = app.add_option("--m", m, "Chebyshev degree");
  auto* o_eps = app.add_option("--eps-inner", eps, "fixed-point tolerance");
  app.add_option("--max-inner", config.max_inner, "fixed-point iteration cap");
  app.add_option("--norm", norm, "error norm: max or l2")->check(CLI::IsMember({"max", "l2"}));
  auto* o_snap = app.add_option("--snapshots", snapshots, "comma-separated snapshot times");
  auto* o_steps = app.add_option("--steps", steps, "comma-separated time steps (converge-time)");
  auto* o_sizes = app.add_option("--grid-sizes", grid_sizes, "comma-separated N (converge-space)");
  auto* o_deg = app.add_option("--degrees", degrees, "comma-separated m (converge-space)");
  app.add_option("--out", config.out, "output directory");
  app.add_flag("--no-rank-reduction", no_rr, "evaluate the integral at every grid point");

  app.add_subcommand("run", "solve one problem and write snapshots");
  app.add_subcommand("converge-time", "time-step convergence study");
  app.add_subcommand("converge-space", "grid convergence study");
  app.add_subcommand("compare-delay", "solve with and without transmission delay");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    config.command = app.get_subcommands().front()->get_name();
    if (*o_lambda) config.lambda = lambda;
    if (*o_sigma) config.sigma = sigma;
    if (*o_mu) config.mu = mu;
    if (*o_c) config.c = c;
    if (*o_v) config.v = v;
    if (*o_ht) config.ht = ht;
    if (*o_T) config.T = T;
    if (*o_n) config.n = n;
    if (*o_m) config.m = m;
    if (*o_eps) config.eps_inner = eps;
    if (*o_snap) config.snapshots = parse_list<double>(snapshots, "--snapshots");
    if (*o_steps) config.steps = parse_list<double>(steps, "--steps");
    if (*o_sizes) config.grid_sizes = parse_list<int>(grid_sizes, "--grid-sizes");
    if (*o_deg) config.degrees = parse_list<int>(degrees, "--degrees");
    if (*o_m && !*o_deg) config.degrees = std::vector<int>{m};
    config.norm = parse_norm(norm);
    config.rank_reduction = !no_rr;
    config = resolve(std::move(config));

    if (config.command == "run") return cmd_run(config, out);
    if (config.command == "converge-time") return cmd_converge_time(config, out);
    if (config.command == "converge-space") return cmd_converge_space(config, out);
    return cmd_compare_delay(config, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const OutputError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace nfe::cli
