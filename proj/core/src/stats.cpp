#include "psyrig/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace psyrig {

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  const std::uint64_t un = n;
  // 2^64 mod n computed without overflow.
  const std::uint64_t rem = (std::numeric_limits<std::uint64_t>::max() % un + 1) % un;
  const std::uint64_t limit = rem == 0 ? 0 : std::numeric_limits<std::uint64_t>::max() - rem + 1;
  for (;;) {
    const std::uint64_t x = rng();
    if (limit != 0 && x >= limit) continue;
    return static_cast<std::size_t>(x % un);
  }
}

double quantile_linear(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile_linear: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile_linear: q outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted[lo];
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean: empty input");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::pair<double, double> bootstrap_ci(std::span<const double> values, const StatConfig& cfg) {
  if (values.empty()) throw std::invalid_argument("bootstrap_ci: empty input");
  if (cfg.bootstrap_iterations < 1) throw std::invalid_argument("bootstrap_ci: iterations must be positive");
  Rng rng(cfg.rng_seed);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(cfg.bootstrap_iterations));
  const std::size_t n = values.size();
  for (int b = 0; b < cfg.bootstrap_iterations; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += values[uniform_index(rng, n)];
    means.push_back(sum / static_cast<double>(n));
  }
  std::sort(means.begin(), means.end());
  const double alpha = 1.0 - cfg.confidence_level;
  return {quantile_linear(means, alpha / 2.0), quantile_linear(means, 1.0 - alpha / 2.0)};
}

}  // namespace psyrig
