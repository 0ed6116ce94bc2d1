#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "popdcop/core/model.hpp"

namespace popdcop {

/// BFS spanning tree over the constraint graph. Root is at level 0 and `height` is the
/// deepest level, so a two-level chain below the root has height 2.
struct PseudoTree {
  AgentId root = 0;
  std::vector<std::optional<AgentId>> parent;
  std::vector<std::vector<AgentId>> children;
  std::vector<int> level;
  int height = 0;

  int size() const { return static_cast<int>(level.size()); }
};

using Adjacency = std::vector<std::vector<AgentId>>;

inline Adjacency adjacency_of(const DcopInstance& inst) {
  Adjacency adj(static_cast<std::size_t>(inst.agent_count()));
  for (int a = 0; a < inst.agent_count(); ++a) adj[static_cast<std::size_t>(a)] = inst.neighbors(a);
  return adj;
}

/// Each non-root agent's parent is its lowest-id neighbor on the previous level.
inline PseudoTree build_bfs_tree(const Adjacency& adj, AgentId root) {
  const int n = static_cast<int>(adj.size());
  if (root < 0 || root >= n) throw std::invalid_argument("root " + std::to_string(root) + " is not an agent");
  PseudoTree t;
  t.root = root;
  t.level.assign(static_cast<std::size_t>(n), -1);
  t.parent.assign(static_cast<std::size_t>(n), std::nullopt);
  t.children.assign(static_cast<std::size_t>(n), {});

  std::deque<AgentId> queue{root};
  t.level[static_cast<std::size_t>(root)] = 0;
  while (!queue.empty()) {
    AgentId a = queue.front();
    queue.pop_front();
    for (AgentId b : adj[static_cast<std::size_t>(a)]) {
      if (t.level[static_cast<std::size_t>(b)] < 0) {
        t.level[static_cast<std::size_t>(b)] = t.level[static_cast<std::size_t>(a)] + 1;
        queue.push_back(b);
      }
    }
  }
  for (AgentId a = 0; a < n; ++a) {
    if (t.level[static_cast<std::size_t>(a)] < 0) {
      throw InstanceError("agent " + std::to_string(a) + " is unreachable from root " + std::to_string(root));
    }
  }
  for (AgentId a = 0; a < n; ++a) {
    if (a == root) continue;
    const int want = t.level[static_cast<std::size_t>(a)] - 1;
    std::optional<AgentId> best;
    for (AgentId b : adj[static_cast<std::size_t>(a)]) {
      if (t.level[static_cast<std::size_t>(b)] == want && (!best || b < *best)) best = b;
    }
    t.parent[static_cast<std::size_t>(a)] = best;
    t.children[static_cast<std::size_t>(*best)].push_back(a);
  }
  for (auto& c : t.children) std::sort(c.begin(), c.end());
  t.height = *std::max_element(t.level.begin(), t.level.end());
  return t;
}

inline PseudoTree build_bfs_tree(const DcopInstance& inst, AgentId root) {
  return build_bfs_tree(adjacency_of(inst), root);
}

inline int tree_height(const PseudoTree& t) {
  return t.level.empty() ? 0 : *std::max_element(t.level.begin(), t.level.end());
}

/// Maximum-degree agent, lowest id on ties.
inline AgentId default_root(const DcopInstance& inst) {
  AgentId best = 0;
  for (AgentId a = 1; a < inst.agent_count(); ++a) {
    if (inst.degree(a) > inst.degree(best)) best = a;
  }
  return best;
}

}  // namespace popdcop
