#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gwharm/conductance.hpp"
#include "gwharm/errors.hpp"
#include "gwharm/measures.hpp"
#include "gwharm/offspring.hpp"
#include "gwharm/rde.hpp"
#include "gwharm/rng.hpp"
#include "gwharm/stats.hpp"
#include "gwharm/tree.hpp"
#include "gwharm/walk.hpp"

namespace gwharm {

/// Reference constants, exact for finite-support offspring laws.
struct ExactConstants {
  double m;                    // mean offspring
  double log_m;                // boundary dimension
  double gw_log_nu;            // dimension of the visibility measure
  double second_moment;        // sum k^2 p_k
  double third_moment;         // sum k^3 p_k
  double uniform_children;     // size-biased mean, sum k^2 p_k / m
  double walk_children_limit;  // (m^2 + sum k^2 p_k) / (2m)
};

inline ExactConstants exact_constants(const OffspringDistribution& dist) {
  ExactConstants c{};
  c.m = dist.mean();
  c.log_m = std::log(dist.mean());
  c.gw_log_nu = dist.log_moment();
  c.second_moment = dist.second_moment();
  c.third_moment = dist.third_moment();
  c.uniform_children = dist.second_moment() / dist.mean();
  c.walk_children_limit = (dist.mean() * dist.mean() + dist.second_moment()) /
                          (2.0 * dist.mean());
  return c;
}

/// Monte Carlo budgets. Zero n_draws means "pool size".
struct Budget {
  std::size_t pool_size = 100'000;
  std::size_t sweeps = 200;
  std::size_t n_draws = 0;
  std::size_t ray_steps = 2000;
  std::size_t ray_burnin = 100;
  int ray_margin = 30;       // loop-erasure stabilization margin (60 for lambda > 1)
  std::size_t walk_steps = 1'000'000;
  std::size_t walk_burnin = 1000;
  double tol = 1e-6;
  int ray_depth_cap = 30;             // per-vertex refinement cap along rays
  std::size_t ray_node_budget = 20'000;  // per-vertex refinement work cap
  std::size_t node_cap = 100'000'000;

  std::size_t draws() const { return n_draws ? n_draws : pool_size; }
  int margin_for(double lambda) const { return lambda > 1.0 ? 2 * ray_margin : ray_margin; }
};

// ---------------------------------------------------------------------------
// Closed-form estimators over a beta pool.
//
// Every stationary expectation in use is a ratio of means of functions of
// the triple (beta, nu+, C+); all of them are evaluated on the same draws
// (common random numbers), so ordering and monotonicity claims can be
// tested as paired statistics.
// ---------------------------------------------------------------------------

struct ClosedFormDraws {
  std::vector<double> w_harm;       // beta C+ / (lambda-1+beta+C+)
  std::vector<double> w_agw;        // (lambda+nu+) beta / (...)
  std::vector<double> nu_plus;
  std::vector<double> log_c_lambda; // log(C+ + lambda)
};

/// Draw j consumes the substream keyed by j, so rerunning with a different
/// lambda (same pool size) pairs draw-for-draw.
inline ClosedFormDraws closed_form_draws(const BetaPool& pool,
                                         const OffspringDistribution& dist,
                                         double lambda, std::size_t n,
                                         RngStream rng) {
  ClosedFormDraws d;
  d.w_harm.reserve(n);
  d.w_agw.reserve(n);
  d.nu_plus.reserve(n);
  d.log_c_lambda.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    RngStream r = rng.substream(j);
    const PairDraw p = draw_pair(pool, dist, r);
    d.w_harm.push_back(harm_weight(p.beta, p.c_plus, lambda));
    d.w_agw.push_back(agw_weight(p.beta, p.c_plus, p.nu_plus, lambda));
    d.nu_plus.push_back(p.nu_plus);
    d.log_c_lambda.push_back(std::log(p.c_plus + lambda));
  }
  return d;
}

/// All closed-form stationary quantities from one draw set.
struct ClosedFormEstimates {
  EstimateWithCI h;
  EstimateWithCI c;
  EstimateWithCI dim;            // h^-1 E[log(C+ + lambda) w_harm]
  EstimateWithCI harm_children;  // h^-1 E[nu+ w_harm]
  EstimateWithCI walk_children;  // c^-1 E[nu+ w_agw]
  EstimateWithCI rec_harm;       // h^-1 E[w_harm / nu+]
  EstimateWithCI rec_walk;       // c^-1 E[w_agw / nu+]
};

inline ClosedFormEstimates closed_form_estimates(const ClosedFormDraws& d) {
  const std::size_t n = d.w_harm.size();
  auto times = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
    return out;
  };
  std::vector<double> inv_nu(n);
  for (std::size_t i = 0; i < n; ++i) inv_nu[i] = 1.0 / d.nu_plus[i];

  ClosedFormEstimates e;
  e.h = mean_jackknife(d.w_harm, Method::closed_form_pool);
  e.c = mean_jackknife(d.w_agw, Method::closed_form_pool);
  e.dim = ratio_jackknife(times(d.log_c_lambda, d.w_harm), d.w_harm,
                          Method::closed_form_pool);
  e.harm_children = ratio_jackknife(times(d.nu_plus, d.w_harm), d.w_harm,
                                    Method::closed_form_pool);
  e.walk_children = ratio_jackknife(times(d.nu_plus, d.w_agw), d.w_agw,
                                    Method::closed_form_pool);
  e.rec_harm = ratio_jackknife(times(inv_nu, d.w_harm), d.w_harm,
                               Method::closed_form_pool);
  e.rec_walk = ratio_jackknife(times(inv_nu, d.w_agw), d.w_agw,
                               Method::closed_form_pool);
  return e;
}

inline ClosedFormEstimates closed_form_suite(const OffspringDistribution& dist,
                                             double lambda, const Budget& budget,
                                             RngStream rng) {
  const BetaPool pool =
      make_pool(dist, lambda, budget.pool_size, budget.sweeps, rng.substream(1));
  return closed_form_estimates(
      closed_form_draws(pool, dist, lambda, budget.draws(), rng.substream(2)));
}

// ---------------------------------------------------------------------------
// Ergodic estimators.
// ---------------------------------------------------------------------------

/// Per-vertex records along a harmonic ray: children count, log(C + lambda)
/// with a certified worst-case bias from the beta enclosure width.
struct RayErgodicRecords {
  std::vector<double> nu;
  std::vector<double> log_c_lambda;
  double mean_bias = 0.0;   // average certified half-width of log(C+lambda)
  double mean_width = 0.0;  // average beta enclosure width (truncation report)
  int depth_used = 0;
};

/// Walk-based harmonic-ray sampler with per-vertex certified conductance.
///
/// The ray is the loop-erased walk trajectory (the root geodesic of the
/// deepest visited vertex, taken with a stabilization margin). Conditional
/// on everything the walk revealed, the unrevealed continuation of each
/// descendant tree is plain GW, so lazily resampling it while refining
/// beta keeps every per-vertex value exactly distributed. The current
/// subtree is re-extracted at each descent, which drops off-ray branches
/// and keeps memory bounded.
inline RayErgodicRecords ray_ergodic_run(const OffspringDistribution& dist,
                                         double lambda, const Budget& budget,
                                         RngStream rng) {
  const std::size_t total = budget.ray_burnin + budget.ray_steps;
  RaySample rs = extract_ray_prefix(dist, lambda, static_cast<int>(total),
                                    budget.margin_for(lambda), rng.substream(1),
                                    200'000'000, budget.node_cap);
  Tree cur = std::move(rs.tree);
  std::vector<int> ray = std::move(rs.ray.nodes);

  RefineOptions opts;
  opts.max_depth = budget.ray_depth_cap;
  opts.max_nodes = budget.ray_node_budget;
  // When lambda >= min_k the certified enclosure is [0, hi]; the point
  // estimate sits near hi, so the honest per-vertex bias is the full
  // certified log-range down to log(lambda).
  const bool certified = frontier_lo(dist, lambda) > 0.0;
  RayErgodicRecords rec;
  rec.nu.reserve(budget.ray_steps);
  rec.log_c_lambda.reserve(budget.ray_steps);
  double bias_sum = 0.0, width_sum = 0.0;

  // Refinement growth accumulates below the moving ray position, so
  // whenever the tree grows past a size threshold it is re-rooted at the
  // current position to drop passed branches and keep memory bounded.
  // Node keys travel with the extracted copy, so trimming never changes
  // which tree is being revealed; it only frees memory.
  constexpr std::size_t kTrimSize = 4'000'000;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < total; ++k) {
    BetaInterval bi;
    try {
      bi = beta_refined_at(cur, ray[pos], lambda, budget.tol, opts);
    } catch (const MaxDepthError& e) {
      bi = e.best_interval;
    }
    rec.depth_used = std::max(rec.depth_used, bi.depth_used);
    if (k >= budget.ray_burnin) {
      const double c_hi = conductance_from_beta(std::min(bi.hi, 1.0 - 1e-15), lambda);
      const double c_mid = conductance_from_beta(bi.mid(), lambda);
      rec.nu.push_back(cur.ensure_children(ray[pos]));
      rec.log_c_lambda.push_back(std::log(c_mid + lambda));
      if (certified) {
        const double c_lo = conductance_from_beta(bi.lo, lambda);
        bias_sum += 0.5 * (std::log(c_hi + lambda) - std::log(c_lo + lambda));
      } else {
        bias_sum += std::log(c_hi + lambda) - std::log(lambda);
      }
      width_sum += bi.width();
    }
    ++pos;
    if (k + 1 < total &&
        (cur.size() > kTrimSize || cur.size() > budget.node_cap / 2)) {
      std::vector<int> map;
      Tree next = cur.extract_subtree(ray[pos], &map);
      std::vector<int> new_ray;
      new_ray.reserve(ray.size() - pos);
      for (std::size_t i = pos; i < ray.size(); ++i) new_ray.push_back(map[ray[i]]);
      cur = std::move(next);
      ray = std::move(new_ray);
      pos = 0;
    }
  }
  const auto n = static_cast<double>(budget.ray_steps);
  rec.mean_bias = bias_sum / n;
  rec.mean_width = width_sum / n;
  return rec;
}

/// Per-step children counts along a lambda-biased walk (burn-in dropped).
inline std::vector<double> walk_ergodic_run(const OffspringDistribution& dist,
                                            double lambda, const Budget& budget,
                                            RngStream rng) {
  Tree t(dist, rng.substream(1), budget.node_cap);
  WalkState st(t);
  RngStream wr = rng.substream(2);
  std::vector<double> nu;
  nu.reserve(budget.walk_steps);
  for (std::size_t s = 0; s < budget.walk_burnin + budget.walk_steps; ++s) {
    const double before = st.sum_nu;
    walk_step(st, lambda, wr);
    if (s >= budget.walk_burnin) nu.push_back(st.sum_nu - before);
  }
  return nu;
}

/// Harmonic-measure dimension d_lambda.
inline EstimateWithCI dim_harmonic(const OffspringDistribution& dist, double lambda,
                                   Method method, const Budget& budget,
                                   RngStream rng) {
  if (lambda <= 0.0 || lambda >= dist.mean())
    throw DomainError("dim_harmonic requires 0 < lambda < m");
  if (method == Method::closed_form_pool)
    return closed_form_suite(dist, lambda, budget, rng).dim;
  if (method != Method::ergodic_ray)
    throw ConfigError("dim_harmonic: method must be closed_form_pool or ergodic_ray");
  const RayErgodicRecords rec = ray_ergodic_run(dist, lambda, budget, rng);
  EstimateWithCI e = batch_means_ci(rec.log_c_lambda, Method::ergodic_ray);
  e.bias_bound = rec.mean_bias;
  return e;
}

enum class ChildrenTarget { harm_ray, walk_path };

/// Average number of children along the harmonic ray or the walk path.
inline EstimateWithCI children_average(const OffspringDistribution& dist, double lambda,
                                       ChildrenTarget target, Method method,
                                       const Budget& budget, RngStream rng) {
  if (lambda <= 0.0 || lambda >= dist.mean())
    throw DomainError("children_average requires 0 < lambda < m");
  if (method == Method::closed_form_pool) {
    const ClosedFormEstimates e = closed_form_suite(dist, lambda, budget, rng);
    return target == ChildrenTarget::harm_ray ? e.harm_children : e.walk_children;
  }
  if (target == ChildrenTarget::harm_ray) {
    const RayErgodicRecords rec = ray_ergodic_run(dist, lambda, budget, rng);
    return batch_means_ci(rec.nu, Method::ergodic_ray);
  }
  return batch_means_ci(walk_ergodic_run(dist, lambda, budget, rng),
                        Method::ergodic_walk);
}

/// Average reciprocal number of children; strictly above 1/m for both
/// targets on non-degenerate laws.
inline EstimateWithCI reciprocal_children_average(const OffspringDistribution& dist,
                                                  double lambda, ChildrenTarget target,
                                                  Method method, const Budget& budget,
                                                  RngStream rng) {
  if (lambda <= 0.0 || lambda >= dist.mean())
    throw DomainError("reciprocal_children_average requires 0 < lambda < m");
  if (method == Method::closed_form_pool) {
    const ClosedFormEstimates e = closed_form_suite(dist, lambda, budget, rng);
    return target == ChildrenTarget::harm_ray ? e.rec_harm : e.rec_walk;
  }
  std::vector<double> inv;
  if (target == ChildrenTarget::harm_ray) {
    const RayErgodicRecords rec = ray_ergodic_run(dist, lambda, budget, rng);
    inv.reserve(rec.nu.size());
    for (double v : rec.nu) inv.push_back(1.0 / v);
    return batch_means_ci(inv, Method::ergodic_ray);
  }
  const std::vector<double> nu = walk_ergodic_run(dist, lambda, budget, rng);
  inv.reserve(nu.size());
  for (double v : nu) inv.push_back(1.0 / v);
  return batch_means_ci(inv, Method::ergodic_walk);
}

// ---------------------------------------------------------------------------
// Sequences A(k) and B_lambda(k).
// ---------------------------------------------------------------------------

struct ABRow {
  int k;
  EstimateWithCI a;         // A(k) = E[beta S_k / (lambda-1+beta+S_k)]
  EstimateWithCI a_over_k;
  EstimateWithCI b;         // B(k) = E[(lambda+k) beta / (lambda-1+beta+S_k)]
  // Paired forward differences (defined for k < k_max):
  EstimateWithCI a_step;        // A(k+1) - A(k)
  EstimateWithCI a_over_k_step; // A(k+1)/(k+1) - A(k)/k
  EstimateWithCI b_step;        // B(k+1) - B(k)
};

/// All rows share the same beta draws and the same prefix sums S_k, so
/// every monotonicity statement is a paired statistic.
inline std::vector<ABRow> sequences_AB(const OffspringDistribution&, double lambda,
                                       int k_max, const BetaPool& pool, std::size_t n,
                                       RngStream rng) {
  if (k_max < 2) throw ConfigError("sequences_AB: k_max must be >= 2");
  std::vector<std::vector<double>> a_vals(k_max), b_vals(k_max);
  for (std::size_t j = 0; j < n; ++j) {
    RngStream r = rng.substream(j);
    const double beta = pool.draw(r);
    double s = 0.0;
    for (int k = 1; k <= k_max; ++k) {
      s += pool.draw(r);
      const double den = lambda - 1.0 + beta + s;
      a_vals[k - 1].push_back(beta * s / den);
      b_vals[k - 1].push_back((lambda + k) * beta / den);
    }
  }
  std::vector<ABRow> rows;
  for (int k = 1; k <= k_max; ++k) {
    ABRow row;
    row.k = k;
    row.a = mean_jackknife(a_vals[k - 1], Method::closed_form_pool);
    std::vector<double> aok(n), diff(n);
    for (std::size_t j = 0; j < n; ++j) aok[j] = a_vals[k - 1][j] / k;
    row.a_over_k = mean_jackknife(aok, Method::closed_form_pool);
    row.b = mean_jackknife(b_vals[k - 1], Method::closed_form_pool);
    if (k < k_max) {
      for (std::size_t j = 0; j < n; ++j) diff[j] = a_vals[k][j] - a_vals[k - 1][j];
      row.a_step = mean_jackknife(diff, Method::closed_form_pool);
      for (std::size_t j = 0; j < n; ++j)
        diff[j] = a_vals[k][j] / (k + 1) - a_vals[k - 1][j] / k;
      row.a_over_k_step = mean_jackknife(diff, Method::closed_form_pool);
      for (std::size_t j = 0; j < n; ++j) diff[j] = b_vals[k][j] - b_vals[k - 1][j];
      row.b_step = mean_jackknife(diff, Method::closed_form_pool);
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Lambda sweeps and paired comparisons.
// ---------------------------------------------------------------------------

struct SweepPoint {
  double lambda;
  std::map<std::string, EstimateWithCI> quantities;
};

struct SweepResult {
  std::vector<double> lambda_grid;
  std::vector<SweepPoint> points;
  ExactConstants constants;
};

/// Closed-form sweep over a lambda grid. Pool evolution and draws reuse
/// the same substreams at every grid point (common random numbers).
inline SweepResult sweep_lambda(const OffspringDistribution& dist,
                                const std::vector<double>& grid, const Budget& budget,
                                RngStream rng) {
  SweepResult out;
  out.lambda_grid = grid;
  out.constants = exact_constants(dist);
  for (double lambda : grid) {
    if (lambda <= 0.0 || lambda >= dist.mean())
      throw ConfigError("sweep grid point outside (0, m)");
    const BetaPool pool =
        make_pool(dist, lambda, budget.pool_size, budget.sweeps, rng.substream(1));
    const ClosedFormEstimates e = closed_form_estimates(
        closed_form_draws(pool, dist, lambda, budget.draws(), rng.substream(2)));
    SweepPoint pt;
    pt.lambda = lambda;
    pt.quantities["h"] = e.h;
    pt.quantities["c"] = e.c;
    pt.quantities["dim"] = e.dim;
    pt.quantities["harm_children"] = e.harm_children;
    pt.quantities["walk_children"] = e.walk_children;
    pt.quantities["rec_harm_children"] = e.rec_harm;
    pt.quantities["rec_walk_children"] = e.rec_walk;
    out.points.push_back(std::move(pt));
  }
  return out;
}

/// walk_children(lambda1) - walk_children(lambda2) as a paired statistic:
/// both sides share pool-evolution and draw randomness.
inline EstimateWithCI walk_children_paired_diff(const OffspringDistribution& dist,
                                                double lambda1, double lambda2,
                                                const Budget& budget, RngStream rng) {
  const BetaPool p1 =
      make_pool(dist, lambda1, budget.pool_size, budget.sweeps, rng.substream(1));
  const BetaPool p2 =
      make_pool(dist, lambda2, budget.pool_size, budget.sweeps, rng.substream(1));
  const ClosedFormDraws d1 =
      closed_form_draws(p1, dist, lambda1, budget.draws(), rng.substream(2));
  const ClosedFormDraws d2 =
      closed_form_draws(p2, dist, lambda2, budget.draws(), rng.substream(2));
  const std::size_t n = d1.w_agw.size();
  std::vector<double> num1(n), num2(n);
  for (std::size_t i = 0; i < n; ++i) {
    num1[i] = d1.nu_plus[i] * d1.w_agw[i];
    num2[i] = d2.nu_plus[i] * d2.w_agw[i];
  }
  return ratio_diff_jackknife(num1, d1.w_agw, num2, d2.w_agw);
}

// ---------------------------------------------------------------------------
// Theorem verification suite.
// ---------------------------------------------------------------------------

enum class Verdict { pass, inconclusive, fail, degenerate, conjecture_evidence };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::fail: return "fail";
    case Verdict::degenerate: return "degenerate";
    case Verdict::conjecture_evidence: return "conjecture_evidence";
  }
  return "unknown";
}

struct CheckEntry {
  std::string claim_id;
  std::string direction;  // human-readable inequality tested
  double lambda;
  double value;
  double z;  // signed separation in combined-SE units (or |delta|/tol for limits)
  Verdict verdict;
};

struct CheckReport {
  std::vector<CheckEntry> entries;
  bool any_fail = false;
  bool any_inconclusive = false;
};

namespace detail {

// Strict inequality value > threshold certified at 3 sigma.
inline CheckEntry strict_above(const std::string& id, const std::string& dir,
                               double lambda, const EstimateWithCI& e,
                               double threshold) {
  const double se = std::max(e.std_error, 1e-300);
  const double z = (e.mean - threshold) / se;
  Verdict v = Verdict::inconclusive;
  if (z > 3.0) v = Verdict::pass;
  else if (z < -3.0) v = Verdict::fail;
  return CheckEntry{id, dir, lambda, e.mean, z, v};
}

inline CheckEntry strict_below(const std::string& id, const std::string& dir,
                               double lambda, const EstimateWithCI& e,
                               double threshold) {
  CheckEntry c = strict_above(id, dir, lambda, e, threshold);
  c.z = -c.z;
  if (c.verdict == Verdict::pass) c.verdict = Verdict::fail;
  else if (c.verdict == Verdict::fail) c.verdict = Verdict::pass;
  return c;
}

// Proximity |value - target| <= tol (limit checks at endpoint grid values).
inline CheckEntry near(const std::string& id, const std::string& dir, double lambda,
                       const EstimateWithCI& e, double target, double tol) {
  const double delta = std::fabs(e.mean - target);
  Verdict v = delta <= tol ? Verdict::pass : Verdict::fail;
  return CheckEntry{id, dir, lambda, e.mean, delta / tol, v};
}

}  // namespace detail

/// Runs every statistically checkable claim of the two main theorems and
/// the supporting propositions on one offspring law. Strict inequalities
/// "pass" only with 3 sigma separation; a straddling CI is reported as
/// inconclusive rather than asserted. On a deterministic (b-ary) law all
/// strict comparisons degenerate to equalities and are reported as such.
inline CheckReport theorem_suite(const OffspringDistribution& dist, const Budget& budget,
                                 RngStream rng) {
  CheckReport rep;
  const ExactConstants cst = exact_constants(dist);

  if (dist.degenerate()) {
    const double b = dist.mean();
    for (double lambda : {0.25, 0.5, 1.0}) {
      if (lambda >= b) continue;
      const double beta = 1.0 - lambda / b;
      const double d = std::log(b);
      rep.entries.push_back(CheckEntry{"thm1.1_bracket", "d = GW[log nu] = log m", lambda,
                                       d, 0.0, Verdict::degenerate});
      rep.entries.push_back(CheckEntry{"thm1.2_harm", "harm_children = m", lambda, b, 0.0,
                                       Verdict::degenerate});
      rep.entries.push_back(CheckEntry{"thm1.2_walk", "walk_children = m", lambda, b, 0.0,
                                       Verdict::degenerate});
      rep.entries.push_back(CheckEntry{"remark_reciprocal", "reciprocals = 1/m", lambda,
                                       1.0 / b, 0.0, Verdict::degenerate});
      (void)beta;
    }
    return rep;
  }

  const double m = dist.mean();
  auto in_range = [&](double l) { return l > 0.0 && l < m; };

  std::vector<double> core;
  for (double l : {0.25, 0.5, 1.0, 1.25})
    if (in_range(l)) core.push_back(l);

  // Shared closed-form estimates per core lambda.
  std::map<double, ClosedFormEstimates> est;
  for (double l : core) est[l] = closed_form_suite(dist, l, budget, rng);

  // Theorem 1.1: GW[log nu] < d_lambda < log m.
  for (double l : core) {
    rep.entries.push_back(detail::strict_above("thm1.1_lower", "d > GW[log nu]", l,
                                               est[l].dim, cst.gw_log_nu));
    rep.entries.push_back(
        detail::strict_below("thm1.1_upper", "d < log m", l, est[l].dim, cst.log_m));
  }
  // Theorem 1.1 limits, tested as proximity at endpoint grid values.
  {
    const double l_lo = 0.01;
    const EstimateWithCI d_lo = closed_form_suite(dist, l_lo, budget, rng).dim;
    rep.entries.push_back(detail::near("thm1.1_limit0", "d(0.01) near GW[log nu]", l_lo,
                                       d_lo, cst.gw_log_nu, 0.02));
    const double l_hi = m * 14.0 / 15.0;
    const EstimateWithCI d_hi = closed_form_suite(dist, l_hi, budget, rng).dim;
    rep.entries.push_back(
        detail::near("thm1.1_limitm", "d(near m) near log m", l_hi, d_hi, cst.log_m, 0.03));
  }

  // Theorem 1.2 (i): m < harm_children < sum k^2 p_k / m.
  for (double l : core) {
    rep.entries.push_back(detail::strict_above("thm1.2i_lower", "harm_children > m", l,
                                               est[l].harm_children, m));
    rep.entries.push_back(detail::strict_below("thm1.2i_upper",
                                               "harm_children < size-biased mean", l,
                                               est[l].harm_children,
                                               cst.uniform_children));
  }

  // Theorem 1.2 (ii): walk_children vs m by the sign of lambda - 1.
  for (double l : {0.25, 0.5, 0.75}) {
    if (!in_range(l)) continue;
    rep.entries.push_back(detail::strict_below(
        "thm1.2ii_sub", "walk_children < m (lambda < 1)", l,
        est.count(l) ? est[l].walk_children
                     : closed_form_suite(dist, l, budget, rng).walk_children,
        m));
  }
  if (in_range(1.0)) {
    const EstimateWithCI e = est[1.0].walk_children;
    const double z = (e.mean - m) / std::max(e.std_error, 1e-300);
    rep.entries.push_back(CheckEntry{"thm1.2ii_eq", "walk_children = m (lambda = 1)", 1.0,
                                     e.mean, z,
                                     std::fabs(z) <= 3.0 ? Verdict::pass : Verdict::fail});
  }
  for (double l : {1.1, 1.25, m * 14.0 / 15.0}) {
    if (!in_range(l) || l <= 1.0) continue;
    const EstimateWithCI e = est.count(l)
                                 ? est[l].walk_children
                                 : closed_form_suite(dist, l, budget, rng).walk_children;
    rep.entries.push_back(
        detail::strict_above("thm1.2ii_super", "walk_children > m (lambda > 1)", l, e, m));
  }

  // Theorem 1.2 (iii): harm > walk as a paired comparison on shared draws.
  for (double l : core) {
    const BetaPool pool =
        make_pool(dist, l, budget.pool_size, budget.sweeps, rng.substream(1));
    const ClosedFormDraws d =
        closed_form_draws(pool, dist, l, budget.draws(), rng.substream(2));
    const std::size_t n = d.w_harm.size();
    std::vector<double> nh(n), nw(n);
    for (std::size_t i = 0; i < n; ++i) {
      nh[i] = d.nu_plus[i] * d.w_harm[i];
      nw[i] = d.nu_plus[i] * d.w_agw[i];
    }
    const EstimateWithCI diff = ratio_diff_jackknife(nh, d.w_harm, nw, d.w_agw);
    CheckEntry c = detail::strict_above("thm1.2iii", "harm_children > walk_children", l,
                                        diff, 0.0);
    if (l > 1.0) {
      // Conjectured by the source for lambda in (1, m): reported as
      // evidence, never as a theorem pass/fail.
      c.claim_id = "conjecture_iii";
      c.verdict = Verdict::conjecture_evidence;
    }
    rep.entries.push_back(c);
  }

  // Limits of walk_children (right limit at 0; limit at m with finite
  // third moment) and the non-monotonicity certificate.
  {
    const EstimateWithCI w005 = closed_form_suite(dist, 0.05, budget, rng).walk_children;
    rep.entries.push_back(
        detail::near("prop_walk_limit0", "walk_children(0.05) near m", 0.05, w005, m, 0.03));
    const double l_hi = m * 14.0 / 15.0;
    const EstimateWithCI whi = closed_form_suite(dist, l_hi, budget, rng).walk_children;
    rep.entries.push_back(detail::near("prop_walk_limitm",
                                       "walk_children(near m) near (m^2+sum k^2 p_k)/2m",
                                       l_hi, whi, cst.walk_children_limit, 0.05));
    const EstimateWithCI dip = walk_children_paired_diff(dist, 0.05, 0.5, budget, rng);
    rep.entries.push_back(detail::strict_above(
        "nonmonotone_dip", "walk_children(0.05) > walk_children(0.5)", 0.5, dip, 0.0));
    if (in_range(1.25)) {
      const EstimateWithCI rise = walk_children_paired_diff(dist, 1.25, 0.5, budget, rng);
      rep.entries.push_back(detail::strict_above(
          "nonmonotone_rise", "walk_children(1.25) > walk_children(0.5)", 1.25, rise, 0.0));
    }
  }

  // Reciprocal children averages, both targets, above 1/m.
  for (double l : core) {
    rep.entries.push_back(detail::strict_above("remark_rec_walk", "rec_walk > 1/m", l,
                                               est[l].rec_walk, 1.0 / m));
    rep.entries.push_back(detail::strict_above("remark_rec_harm", "rec_harm > 1/m", l,
                                               est[l].rec_harm, 1.0 / m));
  }

  // A(k) increasing, A(k)/k decreasing; sign of B steps matches sign(lambda-1).
  for (double l : {0.5, 1.25}) {
    if (!in_range(l)) continue;
    const BetaPool pool =
        make_pool(dist, l, budget.pool_size, budget.sweeps, rng.substream(1));
    const auto rows = sequences_AB(dist, l, 10, pool, budget.draws(), rng.substream(2));
    for (const auto& row : rows) {
      if (row.k >= 10) break;
      rep.entries.push_back(detail::strict_above(
          "seq_A_incr_k" + std::to_string(row.k), "A(k+1) > A(k)", l, row.a_step, 0.0));
      rep.entries.push_back(detail::strict_below("seq_Aok_decr_k" + std::to_string(row.k),
                                                 "A(k+1)/(k+1) < A(k)/k", l,
                                                 row.a_over_k_step, 0.0));
      if (l < 1.0)
        rep.entries.push_back(detail::strict_below(
            "seq_B_decr_k" + std::to_string(row.k), "B(k+1) < B(k), lambda < 1", l,
            row.b_step, 0.0));
      else
        rep.entries.push_back(detail::strict_above(
            "seq_B_incr_k" + std::to_string(row.k), "B(k+1) > B(k), lambda > 1", l,
            row.b_step, 0.0));
    }
  }

  for (const auto& e : rep.entries) {
    if (e.verdict == Verdict::fail) rep.any_fail = true;
    if (e.verdict == Verdict::inconclusive) rep.any_inconclusive = true;
  }
  return rep;
}

}  // namespace gwharm
