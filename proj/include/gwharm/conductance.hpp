#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gwharm/errors.hpp"
#include "gwharm/rng.hpp"
#include "gwharm/stats.hpp"
#include "gwharm/tree.hpp"

namespace gwharm {

/// Certified enclosure of the escape probability beta(T) of the infinite
/// continuation of a partially revealed tree.
struct BetaInterval {
  double lo = 0.0;
  double hi = 1.0;
  int depth_used = 0;

  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

/// Refinement hit the depth cap before reaching the requested width; the
/// best certified interval rides along.
class MaxDepthError : public GwError {
public:
  MaxDepthError(const std::string& msg, BetaInterval best)
      : GwError(msg), best_interval(best) {}
  BetaInterval best_interval;
};

namespace detail {

// One bottom-up sweep of beta = S / (lambda + S) over nodes of depth
// <= horizon, with the given value assigned at depth == horizon.
// Children always have larger indices than their parent, so a reverse
// index scan is bottom-up. Returns per-node values (unused slots are -1).
inline std::vector<double> beta_sweep(const Tree& t, double lambda, int horizon,
                                      double frontier_value) {
  std::vector<double> beta(t.size(), -1.0);
  for (std::size_t ri = t.size(); ri-- > 0;) {
    const int x = static_cast<int>(ri);
    const int d = t.depth(x);
    if (d > horizon) continue;
    if (d == horizon) {
      beta[ri] = frontier_value;
      continue;
    }
    const int k = t.nu(x);
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += beta[t.child(x, i)];
    beta[ri] = s / (lambda + s);
  }
  return beta;
}

}  // namespace detail

/// Largest valid frontier lower value: every leafless continuation of the
/// law has minimum degree >= min_k, and among such trees the min_k-ary
/// tree minimizes escape, so beta >= max(0, 1 - lambda / min_k). When
/// lambda >= min_k this is 0, which the recursion never improves (a unary
/// continuation is recurrent), so no positive certified lower bound
/// exists at all in that regime.
inline double frontier_lo(const OffspringDistribution& dist, double lambda) {
  return std::max(0.0, 1.0 - lambda / dist.min_k());
}

/// Certified bounds on beta of every node at depth <= horizon, from the
/// universal frontier values frontier_lo and 1. The recursion is
/// coordinatewise monotone, so the enclosures are rigorous for any
/// leafless continuation and nested in the horizon.
struct BetaBoundsAll {
  std::vector<double> lo;
  std::vector<double> hi;
  int depth_used;

  BetaInterval at(int node) const { return BetaInterval{lo[node], hi[node], depth_used}; }
};

inline BetaBoundsAll beta_bounds_all(const Tree& t, double lambda, int depth) {
  if (depth > t.depth_complete())
    throw DepthUnavailableError("beta_bounds: tree not expanded to requested depth");
  BetaBoundsAll out;
  out.lo = detail::beta_sweep(t, lambda, depth, frontier_lo(t.dist(), lambda));
  out.hi = detail::beta_sweep(t, lambda, depth, 1.0);
  out.depth_used = depth;
  return out;
}

inline BetaInterval beta_bounds(const Tree& t, double lambda, int depth) {
  return beta_bounds_all(t, lambda, depth).at(Tree::kRoot);
}

struct RefineOptions {
  int start_depth = 4;
  int depth_step = 4;
  int max_depth = 3000;
  std::size_t max_nodes = 8'000'000;  // refinement work budget per call
};

/// Interval recursion for the deterministic b-ary tree. Every subtree is
/// identical, so one (lo, hi) pair per level replaces the full sweep.
inline BetaInterval beta_interval_bary(int b, double lambda, int depth) {
  double lo = std::max(0.0, 1.0 - lambda / b), hi = 1.0;
  for (int d = 0; d < depth; ++d) {
    lo = b * lo / (lambda + b * lo);
    hi = b * hi / (lambda + b * hi);
  }
  return BetaInterval{lo, hi, depth};
}

namespace detail {

/// Shared fast path: certified refinement on a single-atom law without
/// growing any tree (full expansion would be exponential in the depth).
inline BetaInterval beta_refined_bary(int b, double lambda, double tol,
                                      const RefineOptions& opts) {
  BetaInterval best = beta_interval_bary(b, lambda, opts.start_depth);
  int d = opts.start_depth;
  while (best.width() >= tol) {
    if (d >= opts.max_depth)
      throw MaxDepthError("beta_refined: depth cap reached at width " +
                              std::to_string(best.width()),
                          best);
    d = std::min(d + opts.depth_step, opts.max_depth);
    best = beta_interval_bary(b, lambda, d);
  }
  return best;
}

/// Sensitivity-guided refinement of beta at `root`.
///
/// The monotone sweeps give valid bounds for ANY choice of where the
/// frontier sits, so the engine is free to deepen only where it matters:
/// each round it expands the frontier nodes whose first-order influence
/// on the root (product of lambda/(lambda+S)^2 along the path) times
/// their width dominates, then resweeps. Uniform-depth growth costs
/// millions of nodes per tree near lambda = 1; this needs thousands.
///
/// When lambda < min_k the result is a certified enclosure. Otherwise
/// the certified lower bound is identically zero and never improves, so
/// the engine returns the empirical band [hi - R, hi] where R is the
/// total first-order influence of the remaining frontier (conservative
/// to first order, but not a rigorous enclosure).
inline BetaInterval beta_adaptive(Tree& t, int root, double lambda, double tol,
                                  const RefineOptions& opts) {
  const double flo = frontier_lo(t.dist(), lambda);
  const bool certified = flo > 0.0;

  struct ANode {
    std::int32_t tn;           // node id in the backing tree
    std::int32_t first_child;  // index into this array
    std::int32_t n_child;      // -1 while frontier
    std::int32_t depth;        // relative to root
    double lo, hi, infl;
  };
  std::vector<ANode> a;
  a.push_back(ANode{static_cast<std::int32_t>(root), 0, -1, 0, flo, 1.0, 1.0});

  std::vector<std::size_t> frontier, expand;

  for (;;) {
    // Bottom-up sweeps (children are appended behind their parent).
    for (std::size_t ri = a.size(); ri-- > 0;) {
      ANode& nd = a[ri];
      if (nd.n_child < 0) {
        nd.lo = flo;
        nd.hi = 1.0;
        continue;
      }
      double slo = 0.0, shi = 0.0;
      for (std::int32_t i = 0; i < nd.n_child; ++i) {
        slo += a[nd.first_child + i].lo;
        shi += a[nd.first_child + i].hi;
      }
      nd.lo = slo / (lambda + slo);
      nd.hi = shi / (lambda + shi);
    }
    // Top-down influence. In certified mode the width recursion
    // hi - lo = lambda * (S_hi - S_lo) / ((lambda+S_hi)(lambda+S_lo))
    // makes the factor exact: the frontier contributions sum to the root
    // width. In empirical mode S_lo is identically 0, which would make
    // unary stretches look non-contracting, so the error-contraction
    // estimate uses S_hi twice (hi approximates beta once locally
    // converged).
    a[0].infl = 1.0;
    frontier.clear();
    int depth_used = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const ANode& nd = a[i];
      if (nd.n_child < 0) {
        frontier.push_back(i);
        depth_used = std::max(depth_used, static_cast<int>(nd.depth));
        continue;
      }
      double slo = 0.0, shi = 0.0;
      for (std::int32_t j = 0; j < nd.n_child; ++j) {
        slo += a[nd.first_child + j].lo;
        shi += a[nd.first_child + j].hi;
      }
      const double factor =
          certified ? lambda / ((lambda + shi) * (lambda + slo))
                    : lambda / ((lambda + shi) * (lambda + shi));
      for (std::int32_t j = 0; j < nd.n_child; ++j)
        a[nd.first_child + j].infl = nd.infl * factor;
    }

    BetaInterval out{a[0].lo, a[0].hi, depth_used};
    if (!certified) {
      double infl_sum = 0.0;
      for (std::size_t f : frontier) infl_sum += a[f].infl;
      out.lo = std::max(0.0, a[0].hi - infl_sum);
    }
    if (out.width() < tol) return out;

    // Deepen the highest-contribution frontier nodes, at least half the
    // current active size per round, so the total sweep cost over all
    // rounds stays a small multiple of the final size.
    double r_max = 0.0;
    for (std::size_t f : frontier)
      r_max = std::max(r_max, a[f].infl * (a[f].hi - a[f].lo));
    expand.clear();
    for (std::size_t f : frontier) {
      if (a[f].depth >= opts.max_depth) continue;
      if (a[f].infl * (a[f].hi - a[f].lo) >= r_max / 1024.0 && r_max > 0.0)
        expand.push_back(f);
    }
    if (expand.empty() || a.size() > opts.max_nodes)
      throw MaxDepthError("beta_refined: refinement budget reached at width " +
                              std::to_string(out.width()),
                          out);
    const std::size_t batch = std::max<std::size_t>(64, a.size() / 2);
    if (expand.size() > batch) {
      std::nth_element(expand.begin(), expand.begin() + batch, expand.end(),
                       [&](std::size_t x, std::size_t y) {
                         return a[x].infl * (a[x].hi - a[x].lo) >
                                a[y].infl * (a[y].hi - a[y].lo);
                       });
      expand.resize(batch);
    }
    for (std::size_t f : expand) {
      const int k = t.ensure_children(a[f].tn);
      a[f].first_child = static_cast<std::int32_t>(a.size());
      a[f].n_child = static_cast<std::int32_t>(k);
      for (int i = 0; i < k; ++i)
        a.push_back(ANode{static_cast<std::int32_t>(t.child(a[f].tn, i)), 0, -1,
                          static_cast<std::int32_t>(a[f].depth + 1), flo, 1.0, 0.0});
    }
  }
}

}  // namespace detail

/// Grow the tree until the root enclosure is narrower than tol.
/// Near lambda = m the bounds converge slowly; the depth cap then raises
/// MaxDepthError carrying the best certified interval.
///
/// When lambda >= min_k the certified lower bound is identically 0 (see
/// frontier_lo), so the loop instead stabilizes the monotone decreasing
/// upper sequence: it stops once consecutive horizons differ by less than
/// tol and returns the band [hi - delta, hi]. That band is an empirical
/// convergence estimate, not a rigorous enclosure.
inline BetaInterval beta_refined(Tree& t, double lambda, double tol,
                                 RefineOptions opts = {}) {
  if (tol <= 0.0) throw ConfigError("beta_refined: tol must be positive");
  if (t.dist().degenerate())
    return detail::beta_refined_bary(t.dist().max_k(), lambda, tol, opts);
  return detail::beta_adaptive(t, Tree::kRoot, lambda, tol, opts);
}

/// C(T) = lambda * beta / (1 - beta).
inline double conductance_from_beta(double beta, double lambda) {
  if (beta < 0.0 || beta > 1.0) throw DomainError("beta outside [0, 1]");
  if (beta == 1.0) throw BetaOneError("beta = 1: infinite conductance");
  return lambda * beta / (1.0 - beta);
}

/// Inverse map beta = C / (lambda + C).
inline double beta_from_conductance(double c, double lambda) {
  return c / (lambda + c);
}

/// Harmonic flow probabilities over the children of `node`:
/// HARM(u) = beta(T_u) / sum_w beta(T_w), from refined midpoints.
struct FlowProbs {
  std::vector<double> probs;
  std::vector<double> child_beta;  // interval midpoints
  double max_width = 0.0;          // worst certified child width
};

inline FlowProbs harm_flow_probs(Tree& t, double lambda, int node, double tol,
                                 RefineOptions opts = {}) {
  const int k = t.ensure_children(node);
  FlowProbs out;
  out.child_beta.reserve(k);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    Tree sub = t.extract_subtree(t.child(node, i));
    const BetaInterval bi = beta_refined(sub, lambda, tol, opts);
    out.max_width = std::max(out.max_width, bi.width());
    out.child_beta.push_back(bi.mid());
    total += bi.mid();
  }
  out.probs.reserve(k);
  for (double b : out.child_beta) out.probs.push_back(b / total);
  return out;
}

/// Residuals of the algebraic conductance identities, evaluated with
/// C = lambda*beta/(1-beta). Residuals are relative to the magnitude of
/// the terms so they stay meaningful as beta approaches 1.
struct IdentityReport {
  double resid_roundtrip;
  double resid_symmetry;
  double resid_identity_a;
  double resid_identity_b;
  double max_residual;
};

inline IdentityReport check_conductance_identities(double beta_t, double beta_u,
                                                   double lambda) {
  const double c_t = conductance_from_beta(beta_t, lambda);
  const double c_u = conductance_from_beta(beta_u, lambda);

  auto rel = [](double a, double b) {
    return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
  };

  IdentityReport r{};
  r.resid_roundtrip = std::max(rel(beta_from_conductance(c_t, lambda), beta_t),
                               rel(beta_from_conductance(c_u, lambda), beta_u));
  r.resid_symmetry = rel(beta_u * c_t / (lambda - 1.0 + beta_u + c_t),
                         beta_t * c_u / (lambda - 1.0 + beta_t + c_u));
  const double lhs = (lambda - 1.0 + beta_t + c_u) * (1.0 + c_t / lambda);
  const double mid = lambda * (1.0 + c_t / lambda) * (1.0 + c_u / lambda) - 1.0;
  const double rhs = (lambda - 1.0 + beta_u + c_t) * (1.0 + c_u / lambda);
  r.resid_identity_a = rel(lhs, mid);
  r.resid_identity_b = rel(mid, rhs);
  r.max_residual = std::max({r.resid_roundtrip, r.resid_symmetry, r.resid_identity_a,
                             r.resid_identity_b});
  return r;
}

/// Independent Monte Carlo estimate of beta: walks started at the root of
/// T_* with an absorbing parent; reaching escape_depth counts as escaped.
/// The truncation biases upward by at most the chance of backtracking
/// escape_depth levels. Test oracle only.
inline EstimateWithCI mc_escape_oracle(Tree& t, double lambda, std::size_t n_walks,
                                       int escape_depth, RngStream rng) {
  std::size_t escaped = 0;
  for (std::size_t w = 0; w < n_walks; ++w) {
    RngStream r = rng.substream(w);
    int cur = Tree::kRoot;
    for (;;) {
      if (t.depth(cur) >= escape_depth) {
        ++escaped;
        break;
      }
      const int k = t.ensure_children(cur);
      const double u = r.uniform() * (k + lambda);
      if (u < lambda) {
        if (cur == Tree::kRoot) break;  // absorbed at the virtual parent
        cur = t.parent(cur);
      } else {
        int i = static_cast<int>(u - lambda);
        if (i >= k) i = k - 1;
        cur = t.child(cur, i);
      }
    }
  }
  return binomial_ci(escaped, n_walks, Method::ergodic_walk);
}

}  // namespace gwharm
