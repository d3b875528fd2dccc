#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "gwharm/conductance.hpp"
#include "gwharm/errors.hpp"
#include "gwharm/offspring.hpp"
#include "gwharm/rng.hpp"
#include "gwharm/tree.hpp"

namespace gwharm {

/// Lambda-biased walk on a lazily grown tree. From the root all
/// transitions go to children with equal probability; elsewhere the
/// parent is taken with probability lambda / (nu + lambda) and each child
/// with probability 1 / (nu + lambda).
struct WalkState {
  Tree* tree = nullptr;
  int current = Tree::kRoot;
  std::size_t step_count = 0;
  int max_depth_reached = 0;
  int deepest_node = Tree::kRoot;  // first vertex that attained max depth
  double sum_nu = 0.0;
  double sum_inv_nu = 0.0;
  bool retain_trajectory = false;
  std::vector<int> trajectory;

  explicit WalkState(Tree& t, bool retain = false)
      : tree(&t), retain_trajectory(retain) {
    if (retain) trajectory.push_back(Tree::kRoot);
  }
};

inline void walk_step(WalkState& state, double lambda, RngStream& rng) {
  Tree& t = *state.tree;
  const int x = state.current;
  const int k = t.ensure_children(x);
  state.sum_nu += k;
  state.sum_inv_nu += 1.0 / k;
  ++state.step_count;

  int next;
  if (x == Tree::kRoot) {
    next = t.child(x, static_cast<int>(rng.uniform_below(k)));
  } else {
    const double u = rng.uniform() * (k + lambda);
    if (u < lambda) {
      next = t.parent(x);
    } else {
      int i = static_cast<int>(u - lambda);
      if (i >= k) i = k - 1;
      next = t.child(x, i);
    }
  }
  state.current = next;
  if (t.depth(next) > state.max_depth_reached) {
    state.max_depth_reached = t.depth(next);
    state.deepest_node = next;
  }
  if (state.retain_trajectory) state.trajectory.push_back(next);
}

/// Ray prefix: node addresses from the root, consecutive entries being
/// parent/child. `certified` is true only for exact flow sampling.
struct RayPrefix {
  std::vector<int> nodes;
  bool certified = false;
  int margin_used = 0;
};

/// A ray together with the tree its addresses live in.
struct RaySample {
  Tree tree;
  RayPrefix ray;
};

inline std::vector<int> ray_degrees(Tree& t, const RayPrefix& ray) {
  std::vector<int> deg;
  deg.reserve(ray.nodes.size());
  for (int x : ray.nodes) deg.push_back(t.ensure_children(x));
  return deg;
}

/// Loop-erased ray prefix: run the walk until it has visited depth
/// L + M; in a tree the loop-erased path to the deepest visited vertex is
/// its root geodesic, so the depth-<=L ancestors of that vertex form the
/// prefix. The margin M controls the (geometrically decaying) chance that
/// the walk later backtracks below level L, hence certified = false.
inline RaySample extract_ray_prefix(const OffspringDistribution& dist, double lambda,
                                    int L, int margin, RngStream rng,
                                    std::size_t max_steps = 200'000'000,
                                    std::size_t node_cap = 100'000'000) {
  Tree t(dist, rng.substream(1), node_cap);
  WalkState st(t);
  RngStream wr = rng.substream(2);
  while (st.max_depth_reached < L + margin) {
    if (st.step_count >= max_steps)
      throw StepLimitError("extract_ray_prefix: step limit before reaching depth");
    walk_step(st, lambda, wr);
  }
  std::vector<int> path = t.path_from_root(st.deepest_node);
  path.resize(static_cast<std::size_t>(L) + 1);
  return RaySample{std::move(t), RayPrefix{std::move(path), false, margin}};
}

/// Beta enclosure for the descendant tree of `node`, growing only that
/// subtree of the main tree. Same semantics as beta_refined: certified
/// sandwich when lambda < min_k, empirical stabilization band of the
/// upper sequence otherwise.
inline BetaInterval beta_refined_at(Tree& t, int node, double lambda, double tol,
                                    RefineOptions opts = {}) {
  if (t.dist().degenerate())
    return detail::beta_refined_bary(t.dist().max_k(), lambda, tol, opts);
  return detail::beta_adaptive(t, node, lambda, tol, opts);
}

/// Flow probabilities at `node` computed in place (the refined subtrees
/// stay in the tree, preserving the joint law when the ray descends).
/// A refinement that hits its budget contributes its best interval; the
/// resulting width is reported through max_width rather than thrown,
/// since flow sampling only needs the ratios.
inline FlowProbs harm_flow_probs_at(Tree& t, double lambda, int node, double tol,
                                    RefineOptions opts = {}) {
  const int k = t.ensure_children(node);
  FlowProbs out;
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    BetaInterval bi;
    try {
      bi = beta_refined_at(t, t.child(node, i), lambda, tol, opts);
    } catch (const MaxDepthError& e) {
      bi = e.best_interval;
    }
    out.max_width = std::max(out.max_width, bi.width());
    out.child_beta.push_back(bi.mid());
    total += bi.mid();
  }
  for (double b : out.child_beta) out.probs.push_back(b / total);
  return out;
}

/// Sample the first L steps of the harmonic ray by exact flow sampling;
/// total-variation error at most L * tol from the per-step enclosures.
inline RaySample sample_harmonic_ray_exact(const OffspringDistribution& dist,
                                           double lambda, int L, double tol,
                                           RngStream rng, RefineOptions opts = {},
                                           std::size_t node_cap = 100'000'000) {
  Tree t(dist, rng.substream(1), node_cap);
  RngStream cr = rng.substream(2);
  std::vector<int> nodes{Tree::kRoot};
  int cur = Tree::kRoot;
  for (int step = 0; step < L; ++step) {
    const FlowProbs fp = harm_flow_probs_at(t, lambda, cur, tol, opts);
    double u = cr.uniform();
    int pick = static_cast<int>(fp.probs.size()) - 1;
    for (std::size_t i = 0; i < fp.probs.size(); ++i) {
      u -= fp.probs[i];
      if (u < 0.0) {
        pick = static_cast<int>(i);
        break;
      }
    }
    cur = t.child(cur, pick);
    nodes.push_back(cur);
  }
  return RaySample{std::move(t), RayPrefix{std::move(nodes), true, 0}};
}

enum class PathStatistic {
  children,
  reciprocal_children,
  log_flow,
  log_conductance_plus_lambda
};

/// Path average (1/n) sum statistic(x_k). For the conductance statistic
/// this is the ergodic functional whose ray average converges to the
/// harmonic-measure dimension.
inline double birkhoff_average(const std::vector<int>& path, Tree& t,
                               PathStatistic stat, double lambda = 1.0,
                               double tol = 1e-6, RefineOptions opts = {}) {
  if (path.empty()) throw ConfigError("birkhoff_average: empty path");
  double sum = 0.0;
  std::size_t n = 0;
  switch (stat) {
    case PathStatistic::children:
      for (int x : path) sum += t.ensure_children(x);
      n = path.size();
      break;
    case PathStatistic::reciprocal_children:
      for (int x : path) sum += 1.0 / t.ensure_children(x);
      n = path.size();
      break;
    case PathStatistic::log_conductance_plus_lambda:
      for (int x : path) {
        const BetaInterval bi = beta_refined_at(t, x, lambda, tol, opts);
        sum += std::log(conductance_from_beta(bi.mid(), lambda) + lambda);
      }
      n = path.size();
      break;
    case PathStatistic::log_flow: {
      // log 1/HARM(x_{k+1} | x_k) = log C(T_{x_k}) - log beta(T_{x_{k+1}}).
      if (path.size() < 2) throw ConfigError("log_flow needs a path of length >= 2");
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const BetaInterval bp = beta_refined_at(t, path[i], lambda, tol, opts);
        const BetaInterval bc = beta_refined_at(t, path[i + 1], lambda, tol, opts);
        sum += std::log(conductance_from_beta(bp.mid(), lambda)) - std::log(bc.mid());
      }
      n = path.size() - 1;
      break;
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace gwharm
