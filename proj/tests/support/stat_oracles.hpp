#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "psyrig/judge_data.hpp"

// Reference implementations written from the documented contracts, used to
// check the library bit for bit.
namespace psyrig::test {

// Accept x only when it lies in the largest multiple of n that fits in 2^64.
inline std::size_t ref_index(std::mt19937_64& eng, std::size_t n) {
  const unsigned __int128 space = static_cast<unsigned __int128>(1) << 64;
  const unsigned __int128 limit = space - space % n;
  for (;;) {
    const unsigned __int128 x = eng();
    if (x < limit) return static_cast<std::size_t>(x % n);
  }
}

inline double ref_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

inline std::pair<double, double> ref_bootstrap_ci(const std::vector<double>& x, int iters, double level,
                                                  std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::vector<double> means;
  for (int b = 0; b < iters; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[ref_index(eng, x.size())];
    means.push_back(s / static_cast<double>(x.size()));
  }
  const double alpha = 1.0 - level;
  return {ref_quantile(means, alpha / 2.0), ref_quantile(means, 1.0 - alpha / 2.0)};
}

// Macro F1 over the sorted union of classes, one class at a time.
inline double ref_macro_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  std::set<std::string> classes(gold.begin(), gold.end());
  classes.insert(pred.begin(), pred.end());
  double sum = 0.0;
  for (const auto& c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool p = pred[i] == c;
      const bool g = gold[i] == c;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    sum += denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
  }
  return sum / static_cast<double>(classes.size());
}

struct RefBootstrapF1 {
  double mean;
  double q01;
  double q99;
  std::vector<double> samples;
};

inline RefBootstrapF1 ref_bootstrap_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                                       int iters, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  RefBootstrapF1 out{};
  const std::size_t n = gold.size();
  for (int b = 0; b < iters; ++b) {
    std::vector<std::string> p, g;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = ref_index(eng, n);
      p.push_back(pred[k]);
      g.push_back(gold[k]);
    }
    out.samples.push_back(ref_macro_f1(p, g));
  }
  double s = 0.0;
  for (double v : out.samples) s += v;
  out.mean = s / static_cast<double>(out.samples.size());
  out.q01 = ref_quantile(out.samples, 0.01);
  out.q99 = ref_quantile(out.samples, 0.99);
  return out;
}

// Brute force over the candidate set: min entropy (all noise), every
// midpoint, max entropy; accuracy counted directly for each.
inline double ref_entropy_threshold(const std::vector<LabeledEntropy>& pts) {
  std::set<double> distinct;
  for (const auto& p : pts) distinct.insert(p.entropy);
  const std::vector<double> v(distinct.begin(), distinct.end());
  struct Cand {
    double t;
    bool all_noise;
  };
  std::vector<Cand> cands{{v.front(), true}};
  for (std::size_t i = 1; i < v.size(); ++i) cands.push_back({(v[i - 1] + v[i]) / 2.0, false});
  cands.push_back({v.back(), false});
  std::vector<std::size_t> acc;
  for (const auto& c : cands) {
    std::size_t ok = 0;
    for (const auto& p : pts) {
      const bool noise = c.all_noise || p.entropy > c.t;
      ok += noise == (p.gold == GoldClass::kNoise);
    }
    acc.push_back(ok);
  }
  const std::size_t best = *std::max_element(acc.begin(), acc.end());
  double lo = INFINITY;
  double hi = -INFINITY;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (acc[i] != best) continue;
    lo = std::min(lo, cands[i].t);
    hi = std::max(hi, cands[i].t);
  }
  return (lo + hi) / 2.0;
}

}  // namespace psyrig::test
