#include "nfe/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "nfe/error.hpp"

namespace nfe {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) d = std::max(d, std::abs(a[q] - b[q]));
  return d;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

SpatialGrid make_grid(const ProblemSpec& spec, const SolverConfig& config) {
  config.validate();
  spec.validate();
  return build_grid(spec.domain, config.subintervals, build_gauss_rule(config.gauss_nodes));
}

}  // namespace

int SolverConfig::step_count() const {
  if (!(time_step > 0.0)) throw InvalidArgument("time step must be positive");
  const double steps = final_time / time_step;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, rounded)) {
    throw InvalidArgument("final time " + format_double(final_time) +
                          " is not a multiple of the time step " + format_double(time_step));
  }
  return static_cast<int>(rounded);
}

void SolverConfig::validate() const {
  if (!(time_step > 0.0) || !std::isfinite(time_step)) {
    throw InvalidArgument("time step must be positive");
  }
  if (!(final_time >= 0.0)) throw InvalidArgument("final time must be >= 0");
  if (!(inner_tolerance > 0.0)) throw InvalidArgument("inner tolerance must be positive");
  if (max_inner < 1) throw InvalidArgument("max_inner must be >= 1");
  if (subintervals < 1) throw InvalidArgument("n must be >= 1");
  if (gauss_nodes < 1 || gauss_nodes > 32) throw InvalidArgument("k must be in [1, 32]");
  if (rank_reduction && (cheb_degree < 2 || cheb_degree > axis_size())) {
    throw InvalidArgument("m must be in [2, N=" + std::to_string(axis_size()) + "], got " +
                          std::to_string(cheb_degree));
  }
  (void)step_count();
}

StepBounds step_bound(const ProblemSpec& spec, const SpatialGrid& grid) {
  const KernelNorms norms = compute_kernel_norms(spec, grid);
  const double area = grid.weight_sum();
  const double smax = spec.firing_rate_slope_max;
  const double l2_den = 2.0 * std::sqrt(area) * norms.l2_norm * smax;
  const double grid_den = 2.0 * norms.k_max * smax * area;
  return {l2_den > 0.0 ? 3.0 * spec.c / l2_den : kInf,
          grid_den > 0.0 ? 3.0 * spec.c / grid_den : kInf};
}

// ---------------------------------------------------------------------------

void HistoryBuffer::push(LevelState state) {
  if (!levels_.empty() && state.level != levels_.back().level + 1) {
    throw SolverError("history: level " + std::to_string(state.level) +
                      " does not follow level " + std::to_string(levels_.back().level));
  }
  levels_.push_back(std::move(state));
  while (levels_.size() > capacity_) levels_.pop_front();
}

bool HistoryBuffer::contains(int level) const {
  return !levels_.empty() && level >= levels_.front().level && level <= levels_.back().level;
}

const LevelState& HistoryBuffer::at(int level) const {
  if (!contains(level)) {
    throw SolverError("history: missing time level " + std::to_string(level));
  }
  return levels_[static_cast<std::size_t>(level - levels_.front().level)];
}

int HistoryBuffer::newest_level() const {
  if (levels_.empty()) throw SolverError("history: empty");
  return levels_.back().level;
}

int HistoryBuffer::oldest_level() const {
  if (levels_.empty()) throw SolverError("history: empty");
  return levels_.front().level;
}

// ---------------------------------------------------------------------------

DelayTable build_delay_table(const ProblemSpec& spec, const SpatialGrid& grid,
                             std::span<const double> eval_x, std::span<const double> eval_y,
                             double time_step) {
  const std::size_t rows = eval_x.size();
  const std::size_t cols = grid.size();
  DelayTable table;
  table.kernel_weights.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const bool delayed = spec.has_delay();
  if (delayed) {
    table.offsets.resize(rows * cols);
    table.fractions.resize(rows * cols);
    table.max_offset = static_cast<int>(std::floor(spec.tau_max() / time_step));
  }
  for (std::size_t p = 0; p < rows; ++p) {
    for (std::size_t q = 0; q < cols; ++q) {
      const double d = std::hypot(eval_x[p] - grid.x_of(q), eval_y[p] - grid.y_of(q));
      const double kw = spec.kernel(d) * grid.weight_of(q);
      if (!std::isfinite(kw)) throw InvalidArgument("delay table: non-finite kernel value");
      table.kernel_weights(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = kw;
      if (delayed) {
        // t_i - tau lies in [t_{i-j-1}, t_{i-j}]; weight delta on level i-j.
        const double r = d / (spec.speed * time_step);
        const double j = std::floor(r);
        table.offsets[p * cols + q] = std::min(static_cast<int>(j), table.max_offset);
        table.fractions[p * cols + q] = 1.0 - (r - j);
      }
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

Solver::Solver(ProblemSpec spec, SolverConfig config)
    : spec_(std::move(spec)),
      config_(config),
      grid_(make_grid(spec_, config_)) {
  if (config_.rank_reduction) {
    cheb_.emplace(config_.cheb_degree, grid_);
    const int m = cheb_->degree();
    eval_x_.reserve(cheb_->node_count());
    eval_y_.reserve(cheb_->node_count());
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        eval_x_.push_back(cheb_->x_nodes()[i]);
        eval_y_.push_back(cheb_->y_nodes()[j]);
      }
    }
  } else {
    eval_x_.resize(grid_.size());
    eval_y_.resize(grid_.size());
    for (std::size_t q = 0; q < grid_.size(); ++q) {
      eval_x_[q] = grid_.x_of(q);
      eval_y_[q] = grid_.y_of(q);
    }
  }
  table_ = build_delay_table(spec_, grid_, eval_x_, eval_y_, config_.time_step);
  norms_ = compute_kernel_norms(spec_, grid_);
  bounds_ = step_bound(spec_, grid_);
  history_ = HistoryBuffer(table_.delayed() ? static_cast<std::size_t>(table_.max_offset) + 2
                                            : 3);
  reset();
}

std::vector<double> Solver::lift(std::span<const double> nodal) const {
  if (!cheb_) return {nodal.begin(), nodal.end()};
  return lift_to_grid(*cheb_, nodal);
}

std::vector<double> Solver::input_at_nodes(double t) const {
  std::vector<double> out(eval_x_.size());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = spec_.input(eval_x_[p], eval_y_[p], t);
  return out;
}

void Solver::check_finite(std::span<const double> values, int level) const {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw SolverError("non-finite state at time level " + std::to_string(level));
    }
  }
}

void Solver::reset() {
  history_.clear();
  const int oldest = table_.delayed() ? -table_.max_offset - 1 : 0;
  for (int level = oldest; level <= 0; ++level) {
    const double t = time_of(level);
    LevelState state;
    state.level = level;
    state.time = t;
    state.grid = sample_on_grid(grid_, [&](double x, double y) { return spec_.initial(x, y, t); });
    if (level == 0) {
      state.nodal.resize(eval_x_.size());
      for (std::size_t p = 0; p < eval_x_.size(); ++p) {
        state.nodal[p] = spec_.initial(eval_x_[p], eval_y_[p], t);
      }
    }
    check_finite(state.grid, level);
    history_.push(std::move(state));
  }
}

std::vector<double> Solver::apply_integral_operator(int level,
                                                    std::span<const double> iterate) const {
  const std::size_t rows = eval_x_.size();
  const std::size_t cols = grid_.size();
  if (iterate.size() != cols) throw InvalidArgument("integral operator: iterate size mismatch");
  std::vector<double> out(rows, 0.0);
  integrand_evaluations_ += static_cast<std::uint64_t>(rows) * cols;

  if (!table_.delayed()) {
    Eigen::VectorXd rate(static_cast<Eigen::Index>(cols));
    for (std::size_t q = 0; q < cols; ++q) rate[static_cast<Eigen::Index>(q)] = spec_.firing_rate(iterate[q]);
    Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(rows)) =
        table_.kernel_weights * rate;
    return out;
  }

  // levels[j] points at level - j (j = 0 is the iterate itself).
  const int depth = table_.max_offset + 1;
  std::vector<const double*> levels(static_cast<std::size_t>(depth) + 1);
  levels[0] = iterate.data();
  for (int j = 1; j <= depth; ++j) levels[j] = history_.at(level - j).grid.data();

  for (std::size_t p = 0; p < rows; ++p) {
    const double* kw = table_.kernel_weights.row(static_cast<Eigen::Index>(p)).data();
    const int* off = table_.offsets.data() + p * cols;
    const double* frac = table_.fractions.data() + p * cols;
    double acc = 0.0;
    for (std::size_t q = 0; q < cols; ++q) {
      const int j = off[q];
      const double delayed = frac[q] * levels[j][q] + (1.0 - frac[q]) * levels[j + 1][q];
      acc += kw[q] * spec_.firing_rate(delayed);
    }
    out[p] = acc;
  }
  return out;
}

std::vector<double> Solver::euler_nodal(double step) const {
  const LevelState& u0 = history_.at(0);
  const std::vector<double> kappa = apply_integral_operator(0, u0.grid);
  const std::vector<double> input = input_at_nodes(0.0);
  std::vector<double> nodal(u0.nodal.size());
  for (std::size_t p = 0; p < nodal.size(); ++p) {
    nodal[p] = u0.nodal[p] + step / spec_.c * (input[p] - u0.nodal[p] + kappa[p]);
  }
  return nodal;
}

FieldState Solver::euler_step(double step) const {
  FieldState out{lift(euler_nodal(step)), step};
  check_finite(out.values, 1);
  return out;
}

FieldState Solver::euler_bootstrap() {
  if (history_.newest_level() != 0) throw SolverError("euler bootstrap: history not at level 0");
  LevelState next;
  next.level = 1;
  next.time = time_of(1);
  next.nodal = euler_nodal(config_.time_step);
  next.grid = lift(next.nodal);
  check_finite(next.grid, 1);
  FieldState out{next.grid, next.time};
  history_.push(std::move(next));
  return out;
}

std::pair<FieldState, StepDiagnostics> Solver::bdf2_step(int i) {
  if (i < 2) throw InvalidArgument("bdf2 step: level must be >= 2");
  if (history_.newest_level() != i - 1) {
    throw SolverError("bdf2 step: history ends at level " +
                      std::to_string(history_.newest_level()) + ", need " + std::to_string(i - 1));
  }
  const double h = config_.time_step;
  const double c = spec_.c;
  const double t = time_of(i);
  const double weight = implicit_weight(h, c);
  const LevelState& prev = history_.at(i - 1);
  const LevelState& prev2 = history_.at(i - 2);
  const std::vector<double> input = input_at_nodes(t);
  const std::size_t np = input.size();

  // f_i = (I_i + (2c/h) U_{i-1} - (c/2h) U_{i-2}) / (1 + 3c/2h)
  std::vector<double> rhs(np);
  const double scale = 1.0 / (1.0 + 1.5 * c / h);
  for (std::size_t p = 0; p < np; ++p) {
    rhs[p] = scale * (input[p] + 2.0 * c / h * prev.nodal[p] - 0.5 * c / h * prev2.nodal[p]);
  }

  // Euler predictor from level i-1.
  std::vector<double> nodal(np);
  {
    const std::vector<double> kappa = apply_integral_operator(i - 1, prev.grid);
    for (std::size_t p = 0; p < np; ++p) {
      nodal[p] = prev.nodal[p] + h / c * (input[p] - prev.nodal[p] + kappa[p]);
    }
  }
  std::vector<double> current = lift(nodal);

  StepDiagnostics diag;
  diag.level = i;
  diag.time = t;
  diag.grid_step_bound = bounds_.grid_bound;
  const double l1 = weight * norms_.k_max * spec_.firing_rate_slope_max * grid_.weight_sum();
  diag.stability_margin = 1.0 - 2.0 * h / (3.0 * c) * (1.0 + l1);

  double last_correction = -1.0;
  bool converged = false;
  for (int it = 1; it <= config_.max_inner; ++it) {
    const std::vector<double> kappa = apply_integral_operator(i, current);
    for (std::size_t p = 0; p < np; ++p) nodal[p] = weight * kappa[p] + rhs[p];
    std::vector<double> next = lift(nodal);
    check_finite(next, i);
    const double correction = max_abs_diff(next, current);
    if (last_correction > 0.0) {
      diag.contraction_estimate = std::max(diag.contraction_estimate, correction / last_correction);
    }
    last_correction = correction;
    current = std::move(next);
    diag.inner_iterations = it;
    diag.final_correction = correction;
    if (correction < config_.inner_tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw SolverError("fixed-point iteration did not converge at level " + std::to_string(i) +
                      " after " + std::to_string(config_.max_inner) +
                      " iterations (last correction " + format_double(last_correction) +
                      "); reduce the time step");
  }

  LevelState state{i, t, current, nodal};
  history_.push(std::move(state));
  return {FieldState{std::move(current), t}, diag};
}

SolveResult Solver::solve() {
  const int steps = config_.step_count();
  reset();
  SolveResult result;
  result.bounds = bounds_;
  const double h = config_.time_step;
  const double l1 = implicit_weight(h, spec_.c) * norms_.k_max * spec_.firing_rate_slope_max *
                    grid_.weight_sum();
  result.stability_margin = 1.0 - 2.0 * h / (3.0 * spec_.c) * (1.0 + l1);
  if (h >= bounds_.l2_bound) {
    result.warnings.push_back("time step " + format_double(h) + " exceeds L2 contraction bound " +
                              format_double(bounds_.l2_bound));
  }
  if (h >= bounds_.grid_bound) {
    result.warnings.push_back("time step " + format_double(h) +
                              " exceeds grid contraction bound " +
                              format_double(bounds_.grid_bound));
  }
  if (result.stability_margin <= 0.0) {
    result.warnings.push_back("stability condition violated (margin " +
                              format_double(result.stability_margin) + ")");
  }

  const std::uint64_t evals_before = integrand_evaluations_;
  result.states.reserve(static_cast<std::size_t>(steps) + 1);
  result.states.push_back({history_.at(0).grid, 0.0});
  if (steps >= 1) {
    result.states.push_back(euler_bootstrap());
    StepDiagnostics first;
    first.level = 1;
    first.time = time_of(1);
    first.grid_step_bound = bounds_.grid_bound;
    first.stability_margin = result.stability_margin;
    result.diagnostics.push_back(first);
  }
  for (int i = 2; i <= steps; ++i) {
    auto [state, diag] = bdf2_step(i);
    result.states.push_back(std::move(state));
    result.diagnostics.push_back(diag);
  }
  result.integrand_evaluations = integrand_evaluations_ - evals_before;
  return result;
}

}  // namespace nfe
