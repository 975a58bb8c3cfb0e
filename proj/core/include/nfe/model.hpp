#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "nfe/quadrature.hpp"

namespace nfe {

/// Radial connectivity kernel K(r), r = |x - y|.
using RadialKernel = std::function<double(double)>;
using ScalarMap = std::function<double(double)>;
/// Space-time field f(x1, x2, t).
using SpaceTimeField = std::function<double(double, double, double)>;

/// Neural field problem
///
///   c dV/dt = I - V + int_Omega K(|x - y|) S(V(y, t - |x - y| / v)) dy
///
/// with history V(x, t) = initial(x, t) for t <= 0. An infinite speed means
/// no transmission delay.
struct ProblemSpec {
  std::string name;
  Rectangle domain;
  double c = 1.0;
  RadialKernel kernel;
  ScalarMap firing_rate;
  double firing_rate_slope_max = 0.0;  // sup |S'|
  SpaceTimeField input;
  SpaceTimeField initial;
  double speed = std::numeric_limits<double>::infinity();
  std::optional<SpaceTimeField> exact;

  bool has_delay() const { return std::isfinite(speed); }
  /// Largest transmission delay, diameter / v (0 without delay).
  double tau_max() const { return has_delay() ? domain.diameter() / speed : 0.0; }

  /// Checks c > 0, v > 0, callables present, and that S_max bounds |S'|
  /// sampled by central differences on [-50, 50]. Throws InvalidArgument.
  void validate() const;
};

/// Integral of exp(-lambda |x - y|^2) over y in [-1, 1]^2 (closed form in erf).
double gaussian_kernel_mass(double lambda, double x1, double x2);

/// One-axis factor of the Example 3 forcing,
/// g(x) = int_lo^hi exp(-lambda (x - y)^2 - mu y^2) dy, by composite Gauss
/// (k = 8, n = 16).
double gaussian_product_profile(double lambda, double mu, double x, double lo = -1.0,
                                double hi = 1.0);

/// Example 1: K = exp(-lambda r^2), S = tanh(sigma x), V = exp(-t/c).
ProblemSpec example1(double lambda, double sigma, double c);

/// Example 2: same K, S; c = 1; V = t (exact in time for BDF2).
ProblemSpec example2(double lambda, double sigma);

/// Example 3: linear S, V = exp(-t/c) exp(-mu |x|^2).
/// `forcing_lo`/`forcing_hi` set the per-axis integration limits of the
/// forcing profile; the default [-1, 1] is the one consistent with V.
ProblemSpec example3(double lambda, double mu, double c, double forcing_lo = -1.0,
                     double forcing_hi = 1.0);

/// Example 4: Example 3 data with finite propagation speed v and constant
/// history exp(-mu |x|^2) on [-tau_max, 0]. No exact solution.
ProblemSpec example4(double lambda, double mu, double c, double v);

struct KernelNorms {
  double k_max = 0.0;    // max |K| over grid-pair distances
  double l2_norm = 0.0;  // quadrature estimate of ||K||_{L2(Omega^2)}
};

/// Throws InvalidArgument if the kernel returns a non-finite value.
KernelNorms compute_kernel_norms(const ProblemSpec& spec, const SpatialGrid& grid);

}  // namespace nfe
