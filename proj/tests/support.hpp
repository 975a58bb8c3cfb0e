#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace nfe::testing {

// Small seeded generator for the property tests. Every case prints its seed
// through doctest's CAPTURE so failures can be replayed.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  std::vector<double> vector(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 rng_;
};

inline constexpr std::uint64_t kSeeds[] = {1, 7, 42, 1234, 987654321, 20240601, 31337, 5};

/// sum_p c[p] x^p by Horner.
inline double poly(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

/// Exact integral of sum_p c[p] x^p over [a, b].
inline double poly_integral(const std::vector<double>& c, double a, double b) {
  double acc = 0.0;
  for (std::size_t p = 0; p < c.size(); ++p) {
    const double e = static_cast<double>(p + 1);
    acc += c[p] * (std::pow(b, e) - std::pow(a, e)) / e;
  }
  return acc;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace nfe::testing
