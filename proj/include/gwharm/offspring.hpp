#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "gwharm/errors.hpp"
#include "gwharm/rng.hpp"

namespace gwharm {

/// Finite-support offspring law (p_k)_{k>=1} with p_0 = 0 and mean m > 1.
/// Supports plain sampling and size-biased sampling P(k) = k p_k / m.
class OffspringDistribution {
public:
  struct Atom {
    int k;
    double p;
  };

  /// Validates a raw spec and caches moments. By default a single-atom
  /// (deterministic b-ary) law is rejected; oracle runs relax that with
  /// `allow_deterministic`.
  static OffspringDistribution validate(const std::vector<std::pair<int, double>>& spec,
                                        bool allow_deterministic = false) {
    if (spec.empty()) throw ConfigError("offspring spec is empty");
    std::map<int, double> merged;
    for (const auto& [k, p] : spec) {
      if (p < 0.0) throw NotNormalizedError("negative probability in offspring spec");
      if (p == 0.0) continue;
      if (k <= 0) throw ZeroOffspringError("offspring law must be leafless (all k >= 1)");
      merged[k] += p;
    }
    if (merged.empty()) throw NotNormalizedError("offspring spec has no mass");

    OffspringDistribution d;
    double total = 0.0;
    for (const auto& [k, p] : merged) {
      d.support_.push_back(Atom{k, p});
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-12)
      throw NotNormalizedError("offspring probabilities sum to " + std::to_string(total));
    if (d.support_.size() == 1 && !allow_deterministic)
      throw DegenerateError("single-atom offspring law (pass allow_deterministic for oracles)");

    for (const auto& a : d.support_) {
      d.mean_ += a.k * a.p;
      d.second_moment_ += static_cast<double>(a.k) * a.k * a.p;
      d.third_moment_ += static_cast<double>(a.k) * a.k * a.k * a.p;
      d.log_moment_ += std::log(static_cast<double>(a.k)) * a.p;
    }
    if (d.mean_ <= 1.0) throw SubcriticalError("offspring mean m <= 1");

    double cum = 0.0, cum_sb = 0.0;
    for (const auto& a : d.support_) {
      cum += a.p;
      cum_sb += a.k * a.p / d.mean_;
      d.cdf_.push_back(cum);
      d.cdf_size_biased_.push_back(cum_sb);
    }
    d.cdf_.back() = 1.0;
    d.cdf_size_biased_.back() = 1.0;
    return d;
  }

  const std::vector<Atom>& support() const { return support_; }
  double mean() const { return mean_; }
  double second_moment() const { return second_moment_; }
  double third_moment() const { return third_moment_; }
  bool third_moment_finite() const { return true; }  // finite support
  /// GW[log nu].
  double log_moment() const { return log_moment_; }
  int min_k() const { return support_.front().k; }
  int max_k() const { return support_.back().k; }
  bool degenerate() const { return support_.size() == 1; }

  int sample(RngStream& rng, bool size_biased = false) const {
    const double u = rng.uniform();
    const auto& cdf = size_biased ? cdf_size_biased_ : cdf_;
    for (std::size_t i = 0; i < cdf.size(); ++i)
      if (u < cdf[i]) return support_[i].k;
    return support_.back().k;
  }

  double prob(int k) const {
    for (const auto& a : support_)
      if (a.k == k) return a.p;
    return 0.0;
  }

  double size_biased_prob(int k) const { return k * prob(k) / mean_; }

private:
  std::vector<Atom> support_;
  std::vector<double> cdf_;
  std::vector<double> cdf_size_biased_;
  double mean_ = 0.0;
  double second_moment_ = 0.0;
  double third_moment_ = 0.0;
  double log_moment_ = 0.0;
};

}  // namespace gwharm
