#include "nfe/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nfe/error.hpp"

namespace nfe {
namespace {

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidArgument(std::string(what) + " must be positive and finite");
  }
}

RadialKernel gaussian_kernel(double lambda) {
  return [lambda](double r) { return std::exp(-lambda * r * r); };
}

// Memoised per-coordinate values of the Example 3 forcing profile. The
// solver only ever asks for a few hundred distinct coordinates.
class ProfileCache {
 public:
  ProfileCache(double lambda, double mu, double lo, double hi)
      : lambda_(lambda), mu_(mu), lo_(lo), hi_(hi) {}

  double operator()(double x) const {
    const auto key = std::bit_cast<std::uint64_t>(x);
    {
      std::lock_guard lock(mutex_);
      if (auto it = values_.find(key); it != values_.end()) return it->second;
    }
    const double g = gaussian_product_profile(lambda_, mu_, x, lo_, hi_);
    std::lock_guard lock(mutex_);
    values_.emplace(key, g);
    return g;
  }

 private:
  double lambda_;
  double mu_;
  double lo_;
  double hi_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::uint64_t, double> values_;
};

// Distinct coordinate differences along one axis with summed weight
// products; exact duplicates only, ties within 1e-14 merged.
std::vector<std::pair<double, double>> axis_differences(std::span<const double> nodes,
                                                        std::span<const double> weights) {
  std::vector<std::pair<double, double>> diffs;
  diffs.reserve(nodes.size() * nodes.size());
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = 0; b < nodes.size(); ++b) {
      diffs.emplace_back(std::abs(nodes[a] - nodes[b]), weights[a] * weights[b]);
    }
  }
  std::sort(diffs.begin(), diffs.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& [d, w] : diffs) {
    if (!merged.empty() && d - merged.back().first <= 1e-14) {
      merged.back().second += w;
    } else {
      merged.emplace_back(d, w);
    }
  }
  return merged;
}

}  // namespace

void ProblemSpec::validate() const {
  require_positive(c, "c");
  if (!(speed > 0.0)) throw InvalidArgument("propagation speed must be positive");
  if (!kernel || !firing_rate || !input || !initial) {
    throw InvalidArgument("problem '" + name + "' is missing a kernel, rate, input or history");
  }
  if (!(firing_rate_slope_max >= 0.0)) throw InvalidArgument("S_max must be >= 0");
  constexpr int kSamples = 10000;
  constexpr double kFd = 1e-6;
  double observed = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const double x = -50.0 + 100.0 * i / (kSamples - 1);
    const double slope = (firing_rate(x + kFd) - firing_rate(x - kFd)) / (2.0 * kFd);
    observed = std::max(observed, std::abs(slope));
  }
  if (observed > firing_rate_slope_max * (1.0 + 1e-6) + 1e-9) {
    throw InvalidArgument("S_max = " + std::to_string(firing_rate_slope_max) +
                          " does not bound sampled |S'| = " + std::to_string(observed));
  }
}

double gaussian_kernel_mass(double lambda, double x1, double x2) {
  const double s = std::sqrt(lambda);
  const double fx = std::erf(s * (1.0 - x1)) + std::erf(s * (1.0 + x1));
  const double fy = std::erf(s * (1.0 - x2)) + std::erf(s * (1.0 + x2));
  return std::numbers::pi / (4.0 * lambda) * fx * fy;
}

double gaussian_product_profile(double lambda, double mu, double x, double lo, double hi) {
  static const GaussRule rule = build_gauss_rule(8);
  constexpr int kPanels = 16;
  const double h = (hi - lo) / kPanels;
  double sum = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    const double left = lo + i * h;
    for (int s = 0; s < rule.k; ++s) {
      const double y = left + 0.5 * h * (1.0 + rule.nodes[s]);
      sum += 0.5 * h * rule.weights[s] * std::exp(-lambda * (x - y) * (x - y) - mu * y * y);
    }
  }
  return sum;
}

ProblemSpec example1(double lambda, double sigma, double c) {
  require_positive(lambda, "lambda");
  require_positive(sigma, "sigma");
  require_positive(c, "c");
  ProblemSpec spec;
  spec.name = "example1";
  spec.c = c;
  spec.kernel = gaussian_kernel(lambda);
  spec.firing_rate = [sigma](double u) { return std::tanh(sigma * u); };
  spec.firing_rate_slope_max = sigma;
  spec.input = [lambda, sigma, c](double x1, double x2, double t) {
    return -std::tanh(sigma * std::exp(-t / c)) * gaussian_kernel_mass(lambda, x1, x2);
  };
  spec.initial = [](double, double, double) { return 1.0; };
  spec.exact = [c](double, double, double t) { return std::exp(-t / c); };
  return spec;
}

ProblemSpec example2(double lambda, double sigma) {
  require_positive(lambda, "lambda");
  require_positive(sigma, "sigma");
  constexpr double c = 1.0;
  ProblemSpec spec;
  spec.name = "example2";
  spec.c = c;
  spec.kernel = gaussian_kernel(lambda);
  spec.firing_rate = [sigma](double u) { return std::tanh(sigma * u); };
  spec.firing_rate_slope_max = sigma;
  spec.input = [lambda, sigma](double x1, double x2, double t) {
    return c + t - std::tanh(sigma * t) * gaussian_kernel_mass(lambda, x1, x2);
  };
  spec.initial = [](double, double, double) { return 0.0; };
  spec.exact = [](double, double, double t) { return t; };
  return spec;
}

ProblemSpec example3(double lambda, double mu, double c, double forcing_lo, double forcing_hi) {
  require_positive(lambda, "lambda");
  require_positive(mu, "mu");
  require_positive(c, "c");
  ProblemSpec spec;
  spec.name = "example3";
  spec.c = c;
  spec.kernel = gaussian_kernel(lambda);
  spec.firing_rate = [](double u) { return u; };
  spec.firing_rate_slope_max = 1.0;
  auto profile = std::make_shared<const ProfileCache>(lambda, mu, forcing_lo, forcing_hi);
  spec.input = [profile, c](double x1, double x2, double t) {
    return -std::exp(-t / c) * (*profile)(x1) * (*profile)(x2);
  };
  spec.initial = [mu](double x1, double x2, double) {
    return std::exp(-mu * (x1 * x1 + x2 * x2));
  };
  spec.exact = [mu, c](double x1, double x2, double t) {
    return std::exp(-t / c) * std::exp(-mu * (x1 * x1 + x2 * x2));
  };
  return spec;
}

ProblemSpec example4(double lambda, double mu, double c, double v) {
  require_positive(v, "v");
  ProblemSpec spec = example3(lambda, mu, c);
  spec.name = "example4";
  spec.speed = v;
  spec.exact.reset();
  return spec;
}

KernelNorms compute_kernel_norms(const ProblemSpec& spec, const SpatialGrid& grid) {
  const auto dx = axis_differences(grid.x_nodes(), grid.x_weights());
  const auto dy = axis_differences(grid.y_nodes(), grid.y_weights());
  KernelNorms norms;
  double sq = 0.0;
  for (const auto& [ax, wx] : dx) {
    for (const auto& [ay, wy] : dy) {
      const double k = spec.kernel(std::hypot(ax, ay));
      if (!std::isfinite(k)) throw InvalidArgument("kernel norms: non-finite kernel value");
      norms.k_max = std::max(norms.k_max, std::abs(k));
      sq += wx * wy * k * k;
    }
  }
  norms.l2_norm = std::sqrt(sq);
  return norms;
}

}  // namespace nfe
