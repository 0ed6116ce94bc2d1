#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "popdcop/popdcop.hpp"

namespace testsupport {

using namespace popdcop;

/// The four-agent worked example. Agent k holds x_{k+1}; value v stands for domain value v+1.
inline RawInstance four_agent_raw() {
  RawInstance raw;
  raw.agents = 4;
  raw.domains = {2, 2, 2, 2};
  raw.constraints = {
      {0, 1, CostTable::from_rows({{7, 12}, {3, 15}})},
      {1, 2, CostTable::from_rows({{2, 7}, {11, 18}})},
      {1, 3, CostTable::from_rows({{8, 4}, {15, 6}})},
      {0, 2, CostTable::from_rows({{9, 13}, {12, 5}})},
  };
  return raw;
}

inline DcopInstance four_agents() { return validate_instance(four_agent_raw()); }
inline std::shared_ptr<const DcopInstance> four_agents_ptr() {
  return std::make_shared<const DcopInstance>(four_agents());
}

/// Paper-style one-based values to zero-based assignment.
inline Assignment one_based(std::initializer_list<int> xs) {
  Assignment a;
  for (int x : xs) a.push_back(x - 1);
  return a;
}

inline constexpr AgentId kX4 = 3;  // root of the worked example's pseudo-tree

/// Connected random instance: random spanning tree plus extra edges, mixed domain sizes.
inline DcopInstance small_random(std::uint64_t seed, int max_agents = 6, int max_domain = 4, bool with_cap = false) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nd(2, max_agents), dd(2, max_domain);
  std::uniform_int_distribution<Cost> cost(0, 50);
  RawInstance raw;
  raw.agents = nd(rng);
  for (int a = 0; a < raw.agents; ++a) raw.domains.push_back(dd(rng));
  std::vector<std::vector<bool>> used(static_cast<std::size_t>(raw.agents),
                                      std::vector<bool>(static_cast<std::size_t>(raw.agents), false));
  auto add = [&](int i, int j) {
    if (i == j || used[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) return;
    used[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
    used[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = true;
    CostTable t(raw.domains[static_cast<std::size_t>(i)], raw.domains[static_cast<std::size_t>(j)]);
    for (auto& c : t.cells) c = cost(rng);
    raw.constraints.push_back({i, j, std::move(t)});
  };
  for (int a = 1; a < raw.agents; ++a) {
    std::uniform_int_distribution<int> p(0, a - 1);
    add(p(rng), a);
  }
  std::bernoulli_distribution extra(0.4);
  for (int i = 0; i < raw.agents; ++i) {
    for (int j = i + 1; j < raw.agents; ++j) {
      if (extra(rng)) add(i, j);
    }
  }
  if (with_cap) raw.global_cap = GlobalCapConstraint{std::max(1, raw.agents / 3), 40};
  return validate_instance(std::move(raw));
}

inline Assignment random_assignment(const DcopInstance& inst, std::mt19937_64& rng) {
  Assignment a;
  for (AgentId i = 0; i < inst.agent_count(); ++i) {
    std::uniform_int_distribution<Value> v(0, inst.domain_size(i) - 1);
    a.push_back(v(rng));
  }
  return a;
}

/// Independent cost oracle: walks the raw tables and the value histogram.
inline Cost oracle_cost(const DcopInstance& inst, const Assignment& a) {
  Cost total = 0;
  for (const auto& c : inst.constraints()) {
    total += c.table.cells[static_cast<std::size_t>(a[static_cast<std::size_t>(c.i)]) * c.table.cols +
                           a[static_cast<std::size_t>(c.j)]];
  }
  if (inst.global_cap()) {
    std::vector<int> count(64, 0);
    for (Value v : a) ++count[static_cast<std::size_t>(v)];
    for (int n : count) total += n > inst.global_cap()->cap ? inst.global_cap()->penalty * (n - inst.global_cap()->cap) : 0;
  }
  return total;
}

/// Independent exhaustive minimum by recursion.
inline Cost oracle_optimum(const DcopInstance& inst) {
  Assignment a(static_cast<std::size_t>(inst.agent_count()), 0);
  Cost best = std::numeric_limits<Cost>::max();
  std::function<void(int)> rec = [&](int i) {
    if (i == inst.agent_count()) {
      best = std::min(best, oracle_cost(inst, a));
      return;
    }
    for (Value v = 0; v < inst.domain_size(i); ++v) {
      a[static_cast<std::size_t>(i)] = v;
      rec(i + 1);
    }
  };
  rec(0);
  return best;
}

inline bool non_increasing(const std::vector<std::pair<std::int64_t, Cost>>& log) {
  for (std::size_t k = 1; k < log.size(); ++k) {
    if (log[k].second > log[k - 1].second) return false;
  }
  return true;
}

/// Planner issuing one fixed call, used to drive the local-search program directly.
class FixedCallPlanner : public als::CallPlanner {
 public:
  explicit FixedCallPlanner(als::CallControl c) : c_(std::move(c)) { c_.last = true; }
  std::optional<als::CallControl> next(const als::CallFeedback* previous) override {
    if (previous) return std::nullopt;
    return c_;
  }

 private:
  als::CallControl c_;
};

}  // namespace testsupport
