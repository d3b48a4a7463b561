#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace psyrig {

struct StatConfig {
  int bootstrap_iterations = 1000;
  double confidence_level = 0.99;
  std::uint64_t rng_seed = 0;

  bool operator==(const StatConfig&) const = default;
};

// Random stream used by every resampling and sampling routine:
//   engine  = std::mt19937_64 seeded with the 64-bit seed
//   index   = uniform_index(engine, n): draw x = engine(); reject while
//             x >= 2^64 - (2^64 mod n); return x mod n
// Both parts are fully specified by the C++ standard and this rule, so
// streams are identical on every platform.
using Rng = std::mt19937_64;

std::size_t uniform_index(Rng& rng, std::size_t n);

// Sample quantile by linear interpolation between closest ranks:
// h = (n-1) * q, result = x[floor h] + (h - floor h) * (x[floor h + 1] - x[floor h]).
// `sorted` must be ascending and non-empty; q in [0, 1].
double quantile_linear(std::span<const double> sorted, double q);

double mean(std::span<const double> values);

// Percentile bootstrap of the mean. For b in [0, iterations): draw n
// indices with uniform_index, record the resample mean. Returns the
// (1-level)/2 and (1+level)/2 linear quantiles of the sorted resample means.
// Throws std::invalid_argument on empty input.
std::pair<double, double> bootstrap_ci(std::span<const double> values,
                                       const StatConfig& cfg);

}  // namespace psyrig
