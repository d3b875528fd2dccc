#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gwharm/errors.hpp"
#include "gwharm/offspring.hpp"
#include "gwharm/rng.hpp"

namespace gwharm {

/// Rooted ordered tree sampled lazily from an offspring law.
///
/// Nodes are index-addressed; children of a node are stored contiguously
/// and always carry larger indices than their parent, so a reverse index
/// scan is a valid bottom-up traversal. A node whose children have not
/// been sampled yet is a frontier node (n_child == -1).
///
/// Each node's offspring count is drawn from a stream keyed by a 64-bit
/// key assigned when the node is created (the root's key comes from the
/// base stream, a child's key is mixed from its parent's key and its
/// index). The realized tree therefore depends only on the base stream,
/// never on the order in which it is explored: growing in stages, along
/// a walk, or through selective refinement all reveal the same tree.
class Tree {
public:
  static constexpr int kRoot = 0;
  static constexpr int kNoParent = -1;
  static constexpr int kUnexpanded = -1;

  struct Node {
    std::int32_t parent;
    std::int32_t first_child;
    std::int32_t n_child;  // kUnexpanded until sampled
    std::int32_t depth;
    std::uint64_t key;     // determines this node's offspring draw
  };

  Tree(const OffspringDistribution& dist, RngStream base,
       std::size_t node_cap = 100'000'000)
      : dist_(dist), base_(base), node_cap_(node_cap) {
    nodes_.push_back(Node{kNoParent, 0, kUnexpanded, 0,
                          RngStream::mix_key(0x9e3779b97f4a7c15ULL, 0)});
  }

  const OffspringDistribution& dist() const { return dist_; }
  std::size_t size() const { return nodes_.size(); }
  int depth_complete() const { return depth_complete_; }
  std::size_t node_cap() const { return node_cap_; }

  int parent(int x) const { return nodes_[x].parent; }
  int depth(int x) const { return nodes_[x].depth; }
  bool expanded(int x) const { return nodes_[x].n_child != kUnexpanded; }

  /// Number of children; node must be expanded.
  int nu(int x) const {
    if (!expanded(x)) throw DepthUnavailableError("node not expanded");
    return nodes_[x].n_child;
  }

  int child(int x, int i) const { return nodes_[x].first_child + i; }

  /// Sample the children of node x if not done yet; returns nu(x).
  int ensure_children(int x) {
    Node& nd = nodes_[x];
    if (nd.n_child != kUnexpanded) return nd.n_child;
    RngStream r = base_.substream(nd.key);
    const int k = dist_.sample(r);
    if (nodes_.size() + static_cast<std::size_t>(k) > node_cap_)
      throw ResourceLimitError("tree node cap exceeded");
    const auto first = static_cast<std::int32_t>(nodes_.size());
    const std::int32_t d = nd.depth;
    const std::uint64_t key = nd.key;
    nd.first_child = first;
    nd.n_child = k;
    for (int i = 0; i < k; ++i)
      nodes_.push_back(Node{static_cast<std::int32_t>(x), 0, kUnexpanded, d + 1,
                            RngStream::mix_key(key, static_cast<std::uint64_t>(i) + 1)});
    return k;
  }

  /// Expand every node above `target_depth`; previously sampled nodes are
  /// never altered.
  void grow_to_depth(int target_depth) {
    if (target_depth < depth_complete_)
      throw DepthUnavailableError("grow_to_depth below depth_complete");
    // Children are appended behind their parent, so one forward scan over
    // the growing vector reaches every node that needs expansion.
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].depth < target_depth && nodes_[i].n_child == kUnexpanded)
        ensure_children(static_cast<int>(i));
    }
    depth_complete_ = target_depth;
  }

  std::vector<int> frontier() const {
    std::vector<int> f;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].n_child == kUnexpanded) f.push_back(static_cast<int>(i));
    return f;
  }

  std::size_t level_size(int d) const {
    std::size_t c = 0;
    for (const auto& nd : nodes_)
      if (nd.depth == d) ++c;
    return c;
  }

  /// Root-to-x node path.
  std::vector<int> path_from_root(int x) const {
    std::vector<int> p;
    for (int v = x; v != kNoParent; v = nodes_[v].parent) p.push_back(v);
    std::vector<int> out(p.rbegin(), p.rend());
    return out;
  }

  /// Manual construction: give an unexpanded node exactly k children.
  /// Used when trees are rearranged (joins of marked double trees).
  int set_children(int parent, int k) {
    Node& nd = nodes_[parent];
    if (nd.n_child != kUnexpanded) throw DomainError("set_children: node already expanded");
    if (nodes_.size() + static_cast<std::size_t>(k) > node_cap_)
      throw ResourceLimitError("tree node cap exceeded");
    const auto first = static_cast<std::int32_t>(nodes_.size());
    const std::int32_t d = nd.depth;
    const std::uint64_t key = nd.key;
    nd.first_child = first;
    nd.n_child = static_cast<std::int32_t>(k);
    for (int i = 0; i < k; ++i)
      nodes_.push_back(Node{static_cast<std::int32_t>(parent), 0, kUnexpanded, d + 1,
                            RngStream::mix_key(key, static_cast<std::uint64_t>(i) + 1)});
    return first;
  }

  /// Copy of the descendant tree of u, re-rooted at u. Node keys travel
  /// with the copy, so future lazy growth reveals exactly what growing
  /// the original tree would have revealed (extraction is purely a
  /// memory operation). If `src_to_dst` is given it receives the index
  /// remapping (size() entries, -1 for nodes outside the subtree).
  Tree extract_subtree(int u, std::vector<int>* src_to_dst = nullptr) const {
    Tree out(dist_, base_, node_cap_);
    out.nodes_.clear();
    const std::int32_t base_depth = nodes_[u].depth;
    if (src_to_dst) src_to_dst->assign(nodes_.size(), -1);
    std::vector<int> queue{u};
    std::vector<std::int32_t> remap_parent{kNoParent};
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const Node& src = nodes_[queue[qi]];
      if (src_to_dst) (*src_to_dst)[queue[qi]] = static_cast<int>(qi);
      Node nd{remap_parent[qi], 0, src.n_child, src.depth - base_depth, src.key};
      if (src.n_child != kUnexpanded) {
        nd.first_child = static_cast<std::int32_t>(queue.size());
        for (int i = 0; i < src.n_child; ++i) {
          queue.push_back(src.first_child + i);
          remap_parent.push_back(static_cast<std::int32_t>(qi));
        }
      }
      out.nodes_.push_back(nd);
    }
    out.depth_complete_ =
        depth_complete_ > base_depth ? depth_complete_ - base_depth : 0;
    return out;
  }

  /// Copy truncated at `depth`: nodes below are dropped, nodes at `depth`
  /// become frontier again. Keys travel with the copy, so regrowing a
  /// truncated node reveals the same continuation the original tree had
  /// (truncation is purely a memory operation).
  Tree truncated(int max_depth, std::vector<int>* src_to_dst = nullptr) const {
    Tree out(dist_, base_, node_cap_);
    out.nodes_.clear();
    if (src_to_dst) src_to_dst->assign(nodes_.size(), -1);
    std::vector<int> queue{kRoot};
    std::vector<std::int32_t> remap_parent{kNoParent};
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const Node& src = nodes_[queue[qi]];
      if (src_to_dst) (*src_to_dst)[queue[qi]] = static_cast<int>(qi);
      Node nd{remap_parent[qi], 0, kUnexpanded, src.depth, src.key};
      if (src.n_child != kUnexpanded && src.depth < max_depth) {
        nd.n_child = src.n_child;
        nd.first_child = static_cast<std::int32_t>(queue.size());
        for (int i = 0; i < src.n_child; ++i) {
          queue.push_back(src.first_child + i);
          remap_parent.push_back(static_cast<std::int32_t>(qi));
        }
      }
      out.nodes_.push_back(nd);
    }
    out.depth_complete_ = std::min(depth_complete_, max_depth);
    return out;
  }

private:
  std::vector<Node> nodes_;
  OffspringDistribution dist_;
  RngStream base_;
  std::size_t node_cap_;
  int depth_complete_ = 0;
};

/// Sample a fresh tree expanded down to `depth`.
inline Tree sample_tree(const OffspringDistribution& dist, int depth, RngStream rng,
                        std::size_t node_cap = 100'000'000) {
  Tree t(dist, rng, node_cap);
  t.grow_to_depth(depth);
  return t;
}

}  // namespace gwharm
