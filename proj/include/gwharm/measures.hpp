#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gwharm/conductance.hpp"
#include "gwharm/errors.hpp"
#include "gwharm/offspring.hpp"
#include "gwharm/rde.hpp"
#include "gwharm/rng.hpp"
#include "gwharm/stats.hpp"
#include "gwharm/tree.hpp"
#include "gwharm/walk.hpp"

namespace gwharm {

// ---------------------------------------------------------------------------
// Densities and normalizing constants.
//
// The harmonic-stationary measure and the augmented (walk-stationary)
// measure are both absolutely continuous with respect to the law of an
// independent pair (T, T+) of GW trees; their unnormalized weights only
// involve beta(T), C(T+) = sum of child betas of T+, and nu+. No tree is
// ever materialized for these estimators: betas come from an evolved pool.
// ---------------------------------------------------------------------------

/// Unnormalized harmonic-stationary weight beta * C+ / (lambda-1+beta+C+).
/// Bounded by beta (hence by 1).
inline double harm_weight(double beta_t, double c_plus, double lambda) {
  const double den = lambda - 1.0 + beta_t + c_plus;
  if (den <= 0.0)
    throw DomainError("harm_weight: lambda-1+beta+C+ <= 0 (inadmissible input)");
  return beta_t * c_plus / den;
}

/// Unnormalized walk-stationary weight (lambda+nu+) * beta / (lambda-1+beta+C+).
/// Bounded by lambda + nu+.
inline double agw_weight(double beta_t, double c_plus, int nu_plus, double lambda) {
  const double den = lambda - 1.0 + beta_t + c_plus;
  if (den <= 0.0)
    throw DomainError("agw_weight: lambda-1+beta+C+ <= 0 (inadmissible input)");
  return (lambda + nu_plus) * beta_t / den;
}

/// kappa(x) = E[ beta x / (lambda-1+beta+x) ], evaluated over the whole
/// pool. Bounded by E[beta] < 1 and strictly increasing in x.
inline EstimateWithCI kappa(double x, double lambda, const BetaPool& pool) {
  if (x < 0.0) throw DomainError("kappa: x must be nonnegative");
  std::vector<double> vals;
  vals.reserve(pool.size());
  for (double b : pool.values)
    vals.push_back(x == 0.0 ? 0.0 : b * x / (lambda - 1.0 + b + x));
  return mean_jackknife(vals, Method::closed_form_pool);
}

/// One draw of the (beta(T), nu+, C(T+)) triple from pool + offspring law.
struct PairDraw {
  double beta;
  int nu_plus;
  double c_plus;
};

inline PairDraw draw_pair(const BetaPool& pool, const OffspringDistribution& dist,
                          RngStream& rng) {
  PairDraw d;
  d.beta = pool.draw(rng);
  d.nu_plus = dist.sample(rng);
  d.c_plus = 0.0;
  for (int i = 0; i < d.nu_plus; ++i) d.c_plus += pool.draw(rng);
  return d;
}

/// h_lambda = E[ beta C+ / (lambda-1+beta+C+) ], in (0, 1).
inline EstimateWithCI estimate_h(const OffspringDistribution& dist, double lambda,
                                 const BetaPool& pool, std::size_t n, RngStream rng) {
  std::vector<double> vals;
  vals.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    RngStream r = rng.substream(j);
    const PairDraw d = draw_pair(pool, dist, r);
    vals.push_back(harm_weight(d.beta, d.c_plus, lambda));
  }
  return mean_jackknife(vals, Method::closed_form_pool);
}

/// c_lambda = E[ (lambda+nu+) beta / (lambda-1+beta+C+) ], < lambda + m.
inline EstimateWithCI estimate_c(const OffspringDistribution& dist, double lambda,
                                 const BetaPool& pool, std::size_t n, RngStream rng) {
  std::vector<double> vals;
  vals.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    RngStream r = rng.substream(j);
    const PairDraw d = draw_pair(pool, dist, r);
    vals.push_back(agw_weight(d.beta, d.c_plus, d.nu_plus, lambda));
  }
  return mean_jackknife(vals, Method::closed_form_pool);
}

/// One harmonic-flow transition at the root: returns the chosen child.
inline int harm_step(Tree& t, double lambda, double tol, RngStream& rng,
                     int node = Tree::kRoot, RefineOptions opts = {}) {
  const FlowProbs fp = harm_flow_probs_at(t, lambda, node, tol, opts);
  double u = rng.uniform();
  int pick = static_cast<int>(fp.probs.size()) - 1;
  for (std::size_t i = 0; i < fp.probs.size(); ++i) {
    u -= fp.probs[i];
    if (u < 0.0) {
      pick = static_cast<int>(i);
      break;
    }
  }
  return t.child(node, pick);
}

// ---------------------------------------------------------------------------
// Marked double tree (T joined with T+, plus a ray prefix in T) and the
// environment-seen-from-the-walk transition.
// ---------------------------------------------------------------------------

/// The pair (T, T+) with a marked ray prefix in T. The join orientation is
/// implicit: the root of T+ plays the parent of the root of T.
struct MarkedDoubleTree {
  Tree lower;            // T, rooted at e; ray[0] is its root
  Tree upper;            // T+, rooted at e+
  std::vector<int> ray;  // node ids in `lower`
};

inline MarkedDoubleTree make_marked_double_tree(const OffspringDistribution& dist,
                                                double lambda, int ray_len, double tol,
                                                RngStream rng,
                                                std::size_t node_cap = 100'000'000) {
  RaySample rs = sample_harmonic_ray_exact(dist, lambda, ray_len, tol,
                                           rng.substream(1), {}, node_cap);
  Tree upper(dist, rng.substream(2), node_cap);
  return MarkedDoubleTree{std::move(rs.tree), std::move(upper),
                          std::move(rs.ray.nodes)};
}

/// Extend the marked ray by `extra` harmonic-flow steps inside `lower`.
inline void extend_ray(MarkedDoubleTree& mdt, double lambda, int extra, double tol,
                       RngStream rng, RefineOptions opts = {}) {
  for (int i = 0; i < extra; ++i) {
    RngStream r = rng.substream(i);
    mdt.ray.push_back(harm_step(mdt.lower, lambda, tol, r, mdt.ray.back(), opts));
  }
}

namespace detail {

// Copy the descendant tree of (src, src_root) under the already-existing
// node dst_node of dst; transfers expansion state. Optionally records the
// src -> dst index mapping.
inline void copy_subtree_under(Tree& dst, int dst_node, const Tree& src, int src_root,
                               std::vector<int>* src_to_dst = nullptr) {
  std::vector<std::pair<int, int>> queue{{src_root, dst_node}};
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const auto [s, d] = queue[qi];
    if (src_to_dst) (*src_to_dst)[s] = d;
    if (!src.expanded(s)) continue;
    const int k = src.nu(s);
    const int first = dst.set_children(d, k);
    for (int i = 0; i < k; ++i) queue.emplace_back(src.child(s, i), first + i);
  }
}

}  // namespace detail

struct MarkedStepReport {
  bool ray_shifted;      // Case II
  int upper_child;       // Case I: which child of the upper root moved down
  int new_upper_root_nu; // children count of the new upper root (if expanded)
};

/// One transition of the environment chain on marked double trees:
/// with probability 1/(nu+ + lambda) per upper child i, the walk steps to
/// that child (the old root joins the lower tree, the ray gains it);
/// with probability lambda/(nu+ + lambda) the walk follows the marked ray
/// one level down (the lower root and its off-ray subtrees join the upper
/// tree, the ray shifts).
inline MarkedStepReport rw_marked_step(MarkedDoubleTree& mdt, double lambda,
                                       RngStream& rng,
                                       std::size_t node_cap = 100'000'000) {
  Tree& T = mdt.lower;
  Tree& U = mdt.upper;
  const int nu_plus = U.ensure_children(Tree::kRoot);
  const double u = rng.uniform() * (nu_plus + lambda);

  MarkedStepReport rep{};
  const RngStream fresh(rng.seed(), rng.next_u64());

  if (u >= lambda) {
    // Case I: upper child i becomes the new upper tree; the lower tree is
    // re-rooted at the old upper root e+, which is prepended to the ray.
    int i = static_cast<int>(u - lambda);
    if (i >= nu_plus) i = nu_plus - 1;
    rep.upper_child = i;

    Tree new_lower(T.dist(), fresh.substream(1), node_cap);
    new_lower.set_children(Tree::kRoot, nu_plus);  // e first, then upper kin
    std::vector<int> lower_map(T.size(), -1);
    detail::copy_subtree_under(new_lower, new_lower.child(Tree::kRoot, 0), T,
                               Tree::kRoot, &lower_map);
    int slot = 1;
    for (int j = 0; j < nu_plus; ++j) {
      if (j == i) continue;
      detail::copy_subtree_under(new_lower, new_lower.child(Tree::kRoot, slot), U,
                                 U.child(Tree::kRoot, j));
      ++slot;
    }
    std::vector<int> new_ray{Tree::kRoot};
    for (int x : mdt.ray) new_ray.push_back(lower_map[x]);

    Tree new_upper = U.extract_subtree(U.child(Tree::kRoot, i));
    T = std::move(new_lower);
    U = std::move(new_upper);
    mdt.ray = std::move(new_ray);
    rep.ray_shifted = false;
  } else {
    // Case II: the walk follows the ray; the lower tree becomes the
    // descendant tree of the ray child, everything else joins the upper.
    if (mdt.ray.size() < 2)
      throw RayExhaustedError("rw_marked_step: ray prefix too short to shift");
    const int k_node = mdt.ray[1];

    const int nu = T.ensure_children(Tree::kRoot);
    Tree new_upper(T.dist(), fresh.substream(2), node_cap);
    new_upper.set_children(Tree::kRoot, nu);  // e+ first, then off-ray siblings
    detail::copy_subtree_under(new_upper, new_upper.child(Tree::kRoot, 0), U,
                               Tree::kRoot);
    int slot = 1;
    for (int j = 0; j < nu; ++j) {
      const int c = T.child(Tree::kRoot, j);
      if (c == k_node) continue;
      detail::copy_subtree_under(new_upper, new_upper.child(Tree::kRoot, slot), T, c);
      ++slot;
    }

    std::vector<int> lower_map;
    Tree new_lower = T.extract_subtree(k_node, &lower_map);
    std::vector<int> new_ray;
    for (std::size_t r = 1; r < mdt.ray.size(); ++r) new_ray.push_back(lower_map[mdt.ray[r]]);

    T = std::move(new_lower);
    U = std::move(new_upper);
    mdt.ray = std::move(new_ray);
    rep.ray_shifted = true;
  }
  rep.new_upper_root_nu = U.expanded(Tree::kRoot) ? U.nu(Tree::kRoot) : -1;
  return rep;
}

// ---------------------------------------------------------------------------
// One-step stationarity tests.
//
// Invariance of a measure under a kernel is exactly one-step testable:
// with weight w(T) proportional to the density against the sampling law,
// E[w * (Pf - f)] = 0 for every bounded f. Samples are synthesized
// two-level trees whose leaf betas come from the evolved pool, and the
// before/after evaluations share all randomness (paired design).
// ---------------------------------------------------------------------------

enum class StationarityKind { harm, agw };

struct StationarityEntry {
  std::string functional;
  double mean_before;
  double mean_after;
  double z;
};

struct StationarityReport {
  StationarityKind kind;
  double lambda;
  bool negative_control;
  std::vector<StationarityEntry> entries;
};

namespace detail {

// Root summary of a synthesized subtree.
struct TreeView {
  int nu;
  double cond;  // sum of child betas
  double beta;  // cond / (lambda + cond)
};

struct SynthTree {
  TreeView root;
  std::vector<TreeView> children;  // child subtree summaries
};

inline SynthTree synth_two_level(const OffspringDistribution& dist,
                                 const BetaPool& pool, double lambda,
                                 RngStream& rng) {
  SynthTree t;
  t.root.nu = dist.sample(rng);
  t.root.cond = 0.0;
  for (int j = 0; j < t.root.nu; ++j) {
    TreeView c;
    c.nu = dist.sample(rng);
    c.cond = 0.0;
    for (int g = 0; g < c.nu; ++g) c.cond += pool.draw(rng);
    c.beta = c.cond / (lambda + c.cond);
    t.root.cond += c.beta;
    t.children.push_back(c);
  }
  t.root.beta = t.root.cond / (lambda + t.root.cond);
  return t;
}

using ViewFunctional = std::function<double(const TreeView&)>;

inline std::vector<std::pair<std::string, ViewFunctional>> default_view_functionals() {
  return {
      {"deg_capped", [](const TreeView& v) { return std::min(v.nu, 10); }},
      {"cond_capped", [](const TreeView& v) { return std::min(v.cond, 5.0); }},
      {"beta", [](const TreeView& v) { return v.beta; }},
      {"deg_ge_2", [](const TreeView& v) { return v.nu >= 2 ? 1.0 : 0.0; }},
  };
}

}  // namespace detail

/// Paired one-step invariance z-scores for the harmonic kernel
/// (weight kappa(C(T))) or the marked-walk kernel (the augmented-GW
/// weight). `negative_control` replaces the kernel's child law by the
/// uniform one, which must break stationarity.
inline StationarityReport stationarity_test(StationarityKind kind,
                                            const OffspringDistribution& dist,
                                            double lambda, const BetaPool& pool,
                                            std::size_t n, RngStream rng,
                                            bool negative_control = false) {
  const auto functionals = detail::default_view_functionals();
  const std::size_t nf = functionals.size();
  std::vector<std::vector<double>> before(nf), after(nf), diff(nf);
  std::vector<double> weights;
  weights.reserve(n);

  for (std::size_t s = 0; s < n; ++s) {
    RngStream r = rng.substream(s);
    if (kind == StationarityKind::harm) {
      const detail::SynthTree t = detail::synth_two_level(dist, pool, lambda, r);
      const double beta_other = pool.draw(r);
      const double w = harm_weight(beta_other, t.root.cond, lambda);
      weights.push_back(w);
      for (std::size_t fi = 0; fi < nf; ++fi) {
        const double f0 = functionals[fi].second(t.root);
        double pf = 0.0;
        for (int i = 0; i < t.root.nu; ++i) {
          const double p = negative_control
                               ? 1.0 / t.root.nu
                               : t.children[i].beta / t.root.cond;
          pf += p * functionals[fi].second(t.children[i]);
        }
        before[fi].push_back(w * f0);
        after[fi].push_back(w * pf);
        diff[fi].push_back(w * (pf - f0));
      }
    } else {
      const detail::SynthTree tl = detail::synth_two_level(dist, pool, lambda, r);
      const detail::SynthTree tu = detail::synth_two_level(dist, pool, lambda, r);
      const double beta_t = tl.root.beta;
      const double c_plus = tu.root.cond;
      const int nu_plus = tu.root.nu;
      const double w = agw_weight(beta_t, c_plus, nu_plus, lambda);
      weights.push_back(w);

      // State functionals are evaluated on the (beta(T), nu+, C+) view.
      auto state_view = [](double beta, int nup, double cp) {
        return detail::TreeView{nup, cp, beta};
      };
      const detail::TreeView cur = state_view(beta_t, nu_plus, c_plus);
      for (std::size_t fi = 0; fi < nf; ++fi) {
        const double f0 = functionals[fi].second(cur);
        double pf = 0.0;
        // Case I: upper child i moves down.
        for (int i = 0; i < nu_plus; ++i) {
          const double p = negative_control ? 1.0 / (nu_plus + 1.0)
                                            : 1.0 / (nu_plus + lambda);
          const double c_tilde = beta_t + (c_plus - tu.children[i].beta);
          const double beta_tilde = c_tilde / (lambda + c_tilde);
          pf += p * functionals[fi].second(
                        state_view(beta_tilde, tu.children[i].nu, tu.children[i].cond));
        }
        // Case II: the ray shifts through a harmonically chosen child of T.
        const double p_shift = negative_control ? 1.0 / (nu_plus + 1.0)
                                                : lambda / (nu_plus + lambda);
        const double beta_up = c_plus / (lambda + c_plus);
        for (int k = 0; k < tl.root.nu; ++k) {
          const double pk = negative_control
                                ? 1.0 / tl.root.nu
                                : tl.children[k].beta / tl.root.cond;
          const double c_plus_tilde =
              beta_up + (tl.root.cond - tl.children[k].beta);
          pf += p_shift * pk *
                functionals[fi].second(
                    state_view(tl.children[k].beta, tl.root.nu, c_plus_tilde));
        }
        before[fi].push_back(w * f0);
        after[fi].push_back(w * pf);
        diff[fi].push_back(w * (pf - f0));
      }
    }
  }

  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  StationarityReport rep{kind, lambda, negative_control, {}};
  for (std::size_t fi = 0; fi < nf; ++fi) {
    const double mb = std::accumulate(before[fi].begin(), before[fi].end(), 0.0) / wsum;
    const double ma = std::accumulate(after[fi].begin(), after[fi].end(), 0.0) / wsum;
    const double mu = sample_mean(diff[fi]);
    const double sd = sample_sd(diff[fi]);
    const double z =
        sd > 0.0 ? mu / (sd / std::sqrt(static_cast<double>(n))) : 0.0;
    rep.entries.push_back(StationarityEntry{functionals[fi].first, mb, ma, z});
  }
  return rep;
}

}  // namespace gwharm
