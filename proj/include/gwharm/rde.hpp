#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gwharm/errors.hpp"
#include "gwharm/offspring.hpp"
#include "gwharm/rng.hpp"
#include "gwharm/stats.hpp"

namespace gwharm {

/// Fixed pool of beta samples evolved through the distributional recursion
/// beta' = S / (lambda + S), S = sum of nu pool entries, nu ~ offspring law.
/// After enough sweeps the pool approximates the stationary law of the
/// escape probability under GW. Entries are exchangeable, not independent,
/// so estimates over a pool use block-jackknife errors.
struct BetaPool {
  std::vector<double> values;
  std::size_t sweep_count = 0;
  double lambda = 0.0;

  std::size_t size() const { return values.size(); }

  double draw(RngStream& rng) const { return values[rng.uniform_below(values.size())]; }
};

enum class PoolInit { constant, uniform };

inline BetaPool init_pool(std::size_t n, double lambda, PoolInit mode,
                          double constant = 0.5, RngStream rng = RngStream(0, 0)) {
  if (n < 1000) throw ConfigError("init_pool: pool size must be >= 1000");
  const double lo = std::max(0.0, 1.0 - lambda);
  BetaPool pool;
  pool.lambda = lambda;
  pool.values.resize(n);
  if (mode == PoolInit::constant) {
    if (constant <= lo || constant >= 1.0)
      throw BadInitError("init_pool: constant outside (" + std::to_string(lo) + ", 1)");
    for (auto& v : pool.values) v = constant;
  } else {
    for (auto& v : pool.values) v = lo + (1.0 - lo) * rng.uniform_pos();
  }
  return pool;
}

/// Run `sweeps` sweeps of n asynchronous replacements each. Updated
/// entries are immediately eligible for resampling.
inline void evolve_pool(BetaPool& pool, const OffspringDistribution& dist,
                        std::size_t sweeps, RngStream rng) {
  const std::size_t n = pool.values.size();
  for (std::size_t s = 0; s < sweeps; ++s) {
    RngStream r = rng.substream(pool.sweep_count + s);
    for (std::size_t i = 0; i < n; ++i) {
      const int k = dist.sample(r);
      double sum = 0.0;
      for (int j = 0; j < k; ++j) sum += pool.values[r.uniform_below(n)];
      pool.values[i] = sum / (pool.lambda + sum);
    }
  }
  pool.sweep_count += sweeps;
}

/// Convenience: init (uniform), evolve, return.
inline BetaPool make_pool(const OffspringDistribution& dist, double lambda,
                          std::size_t n, std::size_t sweeps, RngStream rng) {
  BetaPool pool = init_pool(n, lambda, PoolInit::uniform, 0.5, rng.substream(1));
  evolve_pool(pool, dist, sweeps, rng.substream(2));
  return pool;
}

using PoolFunctional = std::function<double(double)>;

/// Plug-in means of functionals of beta with block-jackknife errors.
inline std::map<std::string, EstimateWithCI> pool_expectations(
    const BetaPool& pool, const std::map<std::string, PoolFunctional>& functions) {
  std::map<std::string, EstimateWithCI> out;
  for (const auto& [name, f] : functions) {
    std::vector<double> vals;
    vals.reserve(pool.size());
    for (double b : pool.values) vals.push_back(f(b));
    out[name] = mean_jackknife(vals, Method::closed_form_pool);
  }
  return out;
}

/// The standard functional set used across the estimators.
inline std::map<std::string, PoolFunctional> default_pool_functionals(double lambda) {
  return {
      {"beta", [](double b) { return b; }},
      {"log_inv_beta", [](double b) { return std::log(1.0 / b); }},
      {"inv_shifted", [lambda](double b) { return 1.0 / (lambda - 1.0 + b); }},
  };
}

/// Histogram of pool values (CSV payload of the rde subcommand).
struct HistogramBin {
  double lo;
  double hi;
  std::size_t count;
};

inline std::vector<HistogramBin> pool_histogram(const BetaPool& pool, std::size_t bins) {
  double vmin = 1.0, vmax = 0.0;
  for (double v : pool.values) {
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  if (vmax <= vmin) vmax = vmin + 1e-12;
  const double w = (vmax - vmin) / static_cast<double>(bins);
  std::vector<HistogramBin> hist(bins);
  for (std::size_t i = 0; i < bins; ++i)
    hist[i] = HistogramBin{vmin + i * w, vmin + (i + 1) * w, 0};
  for (double v : pool.values) {
    auto i = static_cast<std::size_t>((v - vmin) / w);
    if (i >= bins) i = bins - 1;
    ++hist[i].count;
  }
  return hist;
}

}  // namespace gwharm
