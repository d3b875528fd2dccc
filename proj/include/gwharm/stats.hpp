#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "gwharm/errors.hpp"

namespace gwharm {

enum class Method { closed_form_pool, ergodic_walk, ergodic_ray, exact };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::closed_form_pool: return "closed_form_pool";
    case Method::ergodic_walk: return "ergodic_walk";
    case Method::ergodic_ray: return "ergodic_ray";
    case Method::exact: return "exact";
  }
  return "unknown";
}

/// Monte Carlo estimate with standard error and 95% confidence interval.
/// `bias_bound` carries any certified worst-case systematic error
/// (interval-truncation bias near lambda = m) on top of the CI.
struct EstimateWithCI {
  double mean = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
  Method method = Method::closed_form_pool;
  double bias_bound = 0.0;

  static EstimateWithCI exact_value(double v) {
    return EstimateWithCI{v, 0.0, v, v, 1, Method::exact, 0.0};
  }
};

inline EstimateWithCI make_estimate(double mean, double se, std::size_t n, Method m,
                                    double bias = 0.0) {
  return EstimateWithCI{mean, se, mean - 1.959964 * se, mean + 1.959964 * se, n, m, bias};
}

inline double sample_mean(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double sample_sd(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const double mu = sample_mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

/// Plain i.i.d. mean with normal CI.
inline EstimateWithCI mean_ci(const std::vector<double>& x, Method m) {
  const std::size_t n = x.size();
  const double se = n > 1 ? sample_sd(x) / std::sqrt(static_cast<double>(n)) : 0.0;
  return make_estimate(sample_mean(x), se, n, m);
}

/// Binomial proportion with normal CI.
inline EstimateWithCI binomial_ci(std::size_t successes, std::size_t trials, Method m) {
  const double p = trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
  const double se = trials ? std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(trials)) : 0.0;
  return make_estimate(p, se, trials, m);
}

/// Batch-means standard error for autocorrelated sequences (ergodic averages).
inline EstimateWithCI batch_means_ci(const std::vector<double>& x, Method m,
                                     std::size_t n_batches = 100) {
  const std::size_t n = x.size();
  if (n < 2 * n_batches) return mean_ci(x, m);
  const std::size_t len = n / n_batches;
  std::vector<double> batches;
  batches.reserve(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += x[i];
    batches.push_back(s / static_cast<double>(len));
  }
  const double mu = sample_mean(batches);
  const double se = sample_sd(batches) / std::sqrt(static_cast<double>(n_batches));
  return make_estimate(mu, se, n, m);
}

/// Self-normalized ratio sum(num)/sum(den) with block-jackknife SE.
/// Pool entries are exchangeable rather than independent, so all pool-based
/// CIs go through this with 100 blocks.
inline EstimateWithCI ratio_jackknife(const std::vector<double>& num,
                                      const std::vector<double>& den, Method m,
                                      std::size_t n_blocks = 100) {
  const std::size_t n = num.size();
  if (n == 0 || den.size() != n) return EstimateWithCI{};
  const double sn = std::accumulate(num.begin(), num.end(), 0.0);
  const double sd = std::accumulate(den.begin(), den.end(), 0.0);
  const double r = sn / sd;
  if (n < 2 * n_blocks) return make_estimate(r, 0.0, n, m);
  const std::size_t len = n / n_blocks;
  std::vector<double> loo;
  loo.reserve(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    double bn = 0.0, bd = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) {
      bn += num[i];
      bd += den[i];
    }
    loo.push_back((sn - bn) / (sd - bd));
  }
  const double mu = sample_mean(loo);
  double ss = 0.0;
  for (double v : loo) ss += (v - mu) * (v - mu);
  const double B = static_cast<double>(n_blocks);
  const double se = std::sqrt((B - 1.0) / B * ss);
  return make_estimate(r, se, n, m);
}

/// Jackknife mean (den == 1).
inline EstimateWithCI mean_jackknife(const std::vector<double>& x, Method m,
                                     std::size_t n_blocks = 100) {
  return ratio_jackknife(x, std::vector<double>(x.size(), 1.0), m, n_blocks);
}

/// Paired difference of two self-normalized ratios sharing draw indices
/// (common random numbers), with block-jackknife SE of the difference.
inline EstimateWithCI ratio_diff_jackknife(const std::vector<double>& num1,
                                           const std::vector<double>& den1,
                                           const std::vector<double>& num2,
                                           const std::vector<double>& den2,
                                           std::size_t n_blocks = 100) {
  const std::size_t n = num1.size();
  const double sn1 = std::accumulate(num1.begin(), num1.end(), 0.0);
  const double sd1 = std::accumulate(den1.begin(), den1.end(), 0.0);
  const double sn2 = std::accumulate(num2.begin(), num2.end(), 0.0);
  const double sd2 = std::accumulate(den2.begin(), den2.end(), 0.0);
  const double d = sn1 / sd1 - sn2 / sd2;
  if (n < 2 * n_blocks) return make_estimate(d, 0.0, n, Method::closed_form_pool);
  const std::size_t len = n / n_blocks;
  std::vector<double> loo;
  loo.reserve(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    double bn1 = 0.0, bd1 = 0.0, bn2 = 0.0, bd2 = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) {
      bn1 += num1[i];
      bd1 += den1[i];
      bn2 += num2[i];
      bd2 += den2[i];
    }
    loo.push_back((sn1 - bn1) / (sd1 - bd1) - (sn2 - bn2) / (sd2 - bd2));
  }
  const double mu = sample_mean(loo);
  double ss = 0.0;
  for (double v : loo) ss += (v - mu) * (v - mu);
  const double B = static_cast<double>(n_blocks);
  const double se = std::sqrt((B - 1.0) / B * ss);
  return make_estimate(d, se, n, Method::closed_form_pool);
}

// ---- distributional tests ----

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n = a.size(), m = b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < n && j < m) {
    const double x = std::min(a[i], b[j]);
    while (i < n && a[i] <= x) ++i;
    while (j < m && b[j] <= x) ++j;
    const double fa = static_cast<double>(i) / static_cast<double>(n);
    const double fb = static_cast<double>(j) / static_cast<double>(m);
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

/// Asymptotic two-sample KS p-value. Conservative on discrete data.
inline double ks_pvalue(double d, std::size_t n, std::size_t m) {
  const double ne = static_cast<double>(n) * static_cast<double>(m) /
                    static_cast<double>(n + m);
  const double x = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * x * x);
    p += term;
    if (std::fabs(term) < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * p, 0.0, 1.0);
}

struct KsResult {
  double statistic;
  double p_value;
};

inline KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  const double d = ks_statistic(a, b);
  return KsResult{d, ks_pvalue(d, a.size(), b.size())};
}

namespace detail {

// Regularized upper incomplete gamma Q(a, x), series / continued fraction.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw DomainError("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    // P(a,x) by series, return 1 - P.
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
  }
  // Q(a,x) by continued fraction (Lentz).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

}  // namespace detail

/// Chi-square upper-tail p-value.
inline double chi2_pvalue(double stat, int df) {
  if (df <= 0) return 1.0;
  return detail::gamma_q(0.5 * df, 0.5 * stat);
}

struct Chi2Result {
  double statistic;
  int df;
  double p_value;
};

/// Pearson chi-square goodness of fit; expected given as probabilities.
inline Chi2Result chi2_goodness_of_fit(const std::vector<std::size_t>& observed,
                                       const std::vector<double>& probs) {
  double total = 0.0;
  for (std::size_t o : observed) total += static_cast<double>(o);
  double stat = 0.0;
  int df = -1;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = total * probs[i];
    if (e <= 0.0) continue;
    const double diff = static_cast<double>(observed[i]) - e;
    stat += diff * diff / e;
    ++df;
  }
  return Chi2Result{stat, df, chi2_pvalue(stat, df)};
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace gwharm
