#include <gtest/gtest.h>

#include "support.hpp"

using namespace popdcop;
using namespace testsupport;

TEST(PseudoTree, WorkedExampleRootedAtX4) {
  auto t = build_bfs_tree(four_agents(), kX4);
  EXPECT_EQ(t.height, 2);
  EXPECT_EQ(t.level, (std::vector<int>{2, 1, 2, 0}));
  EXPECT_EQ(t.parent[1], kX4);
  EXPECT_EQ(t.parent[0], 1);
  EXPECT_EQ(t.parent[2], 1);
  EXPECT_FALSE(t.parent[3].has_value());
  EXPECT_EQ(t.children[1], (std::vector<AgentId>{0, 2}));
  EXPECT_EQ(t.children[3], (std::vector<AgentId>{1}));
}

TEST(PseudoTree, DefaultRootIsMaxDegree) {
  auto inst = four_agents();
  EXPECT_EQ(default_root(inst), 1);
  auto t = build_bfs_tree(inst, default_root(inst));
  EXPECT_EQ(t.height, 1);
  EXPECT_EQ(t.children[1], (std::vector<AgentId>{0, 2, 3}));
}

TEST(PseudoTree, UnreachableAgentThrows) {
  Adjacency adj = {{1}, {0}, {}};
  EXPECT_THROW(build_bfs_tree(adj, 0), InstanceError);
  EXPECT_THROW(build_bfs_tree(adj, 5), std::invalid_argument);
}

TEST(PseudoTree, BfsLevelsAreShortestPathDistances) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    auto inst = small_random(s, 12, 3);
    auto adj = adjacency_of(inst);
    const int n = inst.agent_count();
    for (AgentId root = 0; root < n; ++root) {
      auto t = build_bfs_tree(adj, root);
      // Independent distances by Bellman-style relaxation.
      std::vector<int> dist(static_cast<std::size_t>(n), n + 1);
      dist[static_cast<std::size_t>(root)] = 0;
      for (int round = 0; round < n; ++round) {
        for (AgentId a = 0; a < n; ++a) {
          for (AgentId b : adj[static_cast<std::size_t>(a)]) {
            dist[static_cast<std::size_t>(b)] = std::min(dist[static_cast<std::size_t>(b)], dist[static_cast<std::size_t>(a)] + 1);
          }
        }
      }
      EXPECT_EQ(t.level, dist);
      EXPECT_EQ(t.height, *std::max_element(dist.begin(), dist.end()));
      EXPECT_EQ(tree_height(t), t.height);
      int edges = 0;
      for (AgentId a = 0; a < n; ++a) {
        if (a == root) continue;
        const AgentId p = *t.parent[static_cast<std::size_t>(a)];
        EXPECT_EQ(t.level[static_cast<std::size_t>(p)] + 1, t.level[static_cast<std::size_t>(a)]);
        const auto& nb = adj[static_cast<std::size_t>(a)];
        EXPECT_NE(std::find(nb.begin(), nb.end(), p), nb.end());
        const auto& ch = t.children[static_cast<std::size_t>(p)];
        EXPECT_NE(std::find(ch.begin(), ch.end(), a), ch.end());
        ++edges;
      }
      EXPECT_EQ(edges, n - 1);
    }
  }
}
