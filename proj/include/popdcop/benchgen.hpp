#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "popdcop/core/model.hpp"
#include "popdcop/sim/rng.hpp"

namespace popdcop::benchgen {

using Edge = std::pair<AgentId, AgentId>;
using EdgeList = std::vector<Edge>;

inline constexpr int kMaxConnectRetries = 10000;

inline sim::Rng family_rng(std::uint64_t seed, std::string_view family, std::uint64_t sub = 0) {
  return sim::make_stream(seed, -1, family, sub);
}

inline bool connected(int n, const EdgeList& edges) {
  std::vector<std::vector<AgentId>> adj(static_cast<std::size_t>(n));
  for (auto [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<AgentId> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const AgentId a = stack.back();
    stack.pop_back();
    for (AgentId b : adj[static_cast<std::size_t>(a)]) {
      if (!seen[static_cast<std::size_t>(b)]) {
        seen[static_cast<std::size_t>(b)] = 1;
        ++count;
        stack.push_back(b);
      }
    }
  }
  return count == n;
}

/// G(n, p), resampled on an incremented sub-seed until connected.
inline EdgeList erdos_renyi(int n, double p, std::uint64_t seed, std::string_view family) {
  if (n < 2) throw std::invalid_argument("need at least 2 agents");
  if (!(p > 0 && p <= 1)) throw std::invalid_argument("density must be in (0, 1]");
  for (int attempt = 0; attempt < kMaxConnectRetries; ++attempt) {
    auto rng = family_rng(seed, family, static_cast<std::uint64_t>(attempt));
    std::bernoulli_distribution coin(p);
    EdgeList edges;
    for (AgentId a = 0; a < n; ++a) {
      for (AgentId b = a + 1; b < n; ++b) {
        if (coin(rng)) edges.emplace_back(a, b);
      }
    }
    if (connected(n, edges)) return edges;
  }
  throw std::runtime_error("no connected G(n, p) sample after " + std::to_string(kMaxConnectRetries) + " attempts");
}

inline EdgeList grid_edges(int rows, int cols) {
  if (rows < 1 || cols < 1 || rows * cols < 2) throw std::invalid_argument("grid needs at least 2 cells");
  EdgeList edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const AgentId a = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(a, a + 1);
      if (r + 1 < rows) edges.emplace_back(a, a + cols);
    }
  }
  return edges;
}

/// Uniform random labelled tree on n nodes via a Pruefer sequence.
inline EdgeList random_tree(int n, sim::Rng& rng) {
  EdgeList edges;
  if (n < 2) return edges;
  if (n == 2) return {{0, 1}};
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<int> code(static_cast<std::size_t>(n - 2));
  for (auto& c : code) c = pick(rng);
  std::vector<int> degree(static_cast<std::size_t>(n), 1);
  for (int c : code) ++degree[static_cast<std::size_t>(c)];
  std::set<int> leaves;
  for (int v = 0; v < n; ++v) {
    if (degree[static_cast<std::size_t>(v)] == 1) leaves.insert(v);
  }
  for (int c : code) {
    const int leaf = *leaves.begin();
    leaves.erase(leaves.begin());
    edges.emplace_back(std::min(leaf, c), std::max(leaf, c));
    if (--degree[static_cast<std::size_t>(c)] == 1) leaves.insert(c);
  }
  const int u = *leaves.begin();
  const int v = *std::next(leaves.begin());
  edges.emplace_back(u, v);
  return edges;
}

/// Random tree on m0 nodes, then each new node links to m distinct nodes drawn with
/// probability proportional to their current degree.
inline EdgeList barabasi_albert(int n, int m0, int m, std::uint64_t seed) {
  if (m0 < 2 || n < m0) throw std::invalid_argument("scale-free needs 2 <= m0 <= n");
  if (m < 1 || m > m0) throw std::invalid_argument("scale-free needs 1 <= m <= m0");
  auto rng = family_rng(seed, "scale_free");
  EdgeList edges = random_tree(m0, rng);
  std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
  for (auto [a, b] : edges) {
    degree[static_cast<std::size_t>(a)] += 1;
    degree[static_cast<std::size_t>(b)] += 1;
  }
  for (AgentId v = m0; v < n; ++v) {
    std::vector<double> w(degree.begin(), degree.begin() + v);
    std::vector<AgentId> targets;
    for (int k = 0; k < m; ++k) {
      std::discrete_distribution<AgentId> dist(w.begin(), w.end());
      const AgentId t = dist(rng);
      w[static_cast<std::size_t>(t)] = 0;
      targets.push_back(t);
    }
    for (AgentId t : targets) {
      edges.emplace_back(t, v);
      degree[static_cast<std::size_t>(t)] += 1;
      degree[static_cast<std::size_t>(v)] += 1;
    }
  }
  return edges;
}

inline CostTable uniform_table(int rows, int cols, Cost lo, Cost hi, sim::Rng& rng) {
  std::uniform_int_distribution<Cost> cost(lo, hi);
  CostTable t(rows, cols);
  for (auto& c : t.cells) c = cost(rng);
  return t;
}

inline void check_cost_range(Cost lo, Cost hi) {
  if (lo < 0 || lo > hi) throw std::invalid_argument("cost range must satisfy 0 <= lo <= hi");
}

inline RawInstance skeleton(int n, int domain, std::string family, std::uint64_t seed, nlohmann::json params) {
  if (domain < 1) throw std::invalid_argument("domain size must be >= 1");
  RawInstance raw;
  raw.agents = n;
  raw.domains.assign(static_cast<std::size_t>(n), domain);
  raw.meta = InstanceMeta{std::move(family), seed, std::move(params)};
  return raw;
}

inline DcopInstance gen_random_dcop(int n, double density, int domain, Cost cost_lo, Cost cost_hi,
                                    std::uint64_t seed) {
  check_cost_range(cost_lo, cost_hi);
  auto raw = skeleton(n, domain, "random", seed,
                      {{"n", n}, {"density", density}, {"domain", domain}, {"cost_lo", cost_lo}, {"cost_hi", cost_hi}});
  auto edges = erdos_renyi(n, density, seed, "random.graph");
  auto rng = family_rng(seed, "random.costs");
  for (auto [a, b] : edges) raw.constraints.push_back({a, b, uniform_table(domain, domain, cost_lo, cost_hi, rng)});
  return validate_instance(std::move(raw));
}

inline DcopInstance gen_sensor_grid(int rows, int cols, int positions = 12, Cost util_lo = 1, Cost util_hi = 100,
                                    std::uint64_t seed = 0) {
  check_cost_range(util_lo, util_hi);
  auto raw = skeleton(rows * cols, positions, "sensor_grid", seed,
                      {{"rows", rows}, {"cols", cols}, {"positions", positions}, {"util_lo", util_lo},
                       {"util_hi", util_hi}});
  auto rng = family_rng(seed, "sensor_grid.costs");
  for (auto [a, b] : grid_edges(rows, cols)) {
    raw.constraints.push_back({a, b, uniform_table(positions, positions, util_lo, util_hi, rng)});
  }
  return validate_instance(std::move(raw));
}

inline DcopInstance gen_scale_free(int n = 100, int m0 = 20, int m = 3, int domain = 10, Cost cost_lo = 1,
                                   Cost cost_hi = 100, std::uint64_t seed = 0) {
  check_cost_range(cost_lo, cost_hi);
  auto raw = skeleton(n, domain, "scale_free", seed,
                      {{"n", n}, {"m0", m0}, {"m", m}, {"domain", domain}, {"cost_lo", cost_lo}, {"cost_hi", cost_hi}});
  auto edges = barabasi_albert(n, m0, m, seed);
  auto rng = family_rng(seed, "scale_free.costs");
  for (auto [a, b] : edges) raw.constraints.push_back({a, b, uniform_table(domain, domain, cost_lo, cost_hi, rng)});
  return validate_instance(std::move(raw));
}

inline DcopInstance gen_graph_coloring(int n = 120, double density = 0.05, int colors = 3, Cost penalty_lo = 1,
                                       Cost penalty_hi = 100, std::optional<GlobalCapConstraint> cap = std::nullopt,
                                       std::uint64_t seed = 0) {
  check_cost_range(penalty_lo, penalty_hi);
  nlohmann::json params{{"n", n},           {"density", density},       {"colors", colors},
                        {"penalty_lo", penalty_lo}, {"penalty_hi", penalty_hi}};
  if (cap) params["global_cap"] = {{"cap", cap->cap}, {"penalty", cap->penalty}};
  auto raw = skeleton(n, colors, "coloring", seed, std::move(params));
  auto edges = erdos_renyi(n, density, seed, "coloring.graph");
  auto rng = family_rng(seed, "coloring.costs");
  std::uniform_int_distribution<Cost> pen(penalty_lo, penalty_hi);
  for (auto [a, b] : edges) {
    CostTable t(colors, colors);
    const Cost w = pen(rng);
    for (int c = 0; c < colors; ++c) t.at(c, c) = w;
    raw.constraints.push_back({a, b, std::move(t)});
  }
  raw.global_cap = cap;
  return validate_instance(std::move(raw));
}

inline constexpr int kBorderPoints = 10;
inline constexpr int kMaxIntensity = 30;
inline constexpr double kTrackingScale = 1000.0;

struct Point {
  double x = 0;
  double y = 0;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Position q of a side x side lattice centred in cell (row, col).
inline Point cell_position(int row, int col, int q, int side) {
  const int qx = q % side;
  const int qy = q / side;
  return {col + (qx + 0.5) / side, row + (qy + 0.5) / side};
}

/// Grid agents choosing one of `positions` (a square number) spots in their cell. Each edge
/// has a target on its shared border; the cost of a position pair is
/// round(1000 * IR * (distance factor + environment factor)).
inline DcopInstance gen_target_tracking(int rows, int cols, int positions = 25, std::uint64_t seed = 0) {
  const int side = static_cast<int>(std::lround(std::sqrt(positions)));
  if (side < 1 || side * side != positions) throw std::invalid_argument("positions must be a square number");
  auto raw = skeleton(rows * cols, positions, "target_tracking", seed,
                      {{"rows", rows}, {"cols", cols}, {"positions", positions}});
  auto rng = family_rng(seed, "target_tracking");
  std::uniform_int_distribution<int> border(0, kBorderPoints - 1);
  std::uniform_int_distribution<int> intensity(1, kMaxIntensity);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto [a, b] : grid_edges(rows, cols)) {
    const int ra = a / cols, ca = a % cols, rb = b / cols, cb = b % cols;
    const double along = (border(rng) + 0.5) / kBorderPoints;
    const Point target = ra == rb ? Point{static_cast<double>(cb), ra + along} : Point{ca + along, static_cast<double>(rb)};
    const int ir = intensity(rng);
    std::vector<double> da(static_cast<std::size_t>(positions)), db(static_cast<std::size_t>(positions));
    for (int q = 0; q < positions; ++q) {
      da[static_cast<std::size_t>(q)] = distance(cell_position(ra, ca, q, side), target);
      db[static_cast<std::size_t>(q)] = distance(cell_position(rb, cb, q, side), target);
    }
    const double max_mean = (*std::max_element(da.begin(), da.end()) + *std::max_element(db.begin(), db.end())) / 2;
    CostTable t(positions, positions);
    for (int p = 0; p < positions; ++p) {
      for (int q = 0; q < positions; ++q) {
        const double mean = (da[static_cast<std::size_t>(p)] + db[static_cast<std::size_t>(q)]) / 2;
        const double dl = 2.0 * mean / max_mean + (1.0 - unit(rng));
        t.at(p, q) = std::max<Cost>(1, std::llround(kTrackingScale * ir * dl));
      }
    }
    raw.constraints.push_back({a, b, std::move(t)});
  }
  return validate_instance(std::move(raw));
}

/// Family name plus its parameters, as used by the CLI and experiment configs.
struct GenSpec {
  std::string family;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
};

inline DcopInstance generate(const GenSpec& s) {
  const auto& p = s.params;
  auto get = [&](const char* key, auto fallback) { return p.value(key, fallback); };
  if (s.family == "random") {
    return gen_random_dcop(get("n", 70), get("density", 0.1), get("domain", 10), get("cost_lo", Cost{1}),
                           get("cost_hi", Cost{100}), s.seed);
  }
  if (s.family == "sensor_grid") {
    return gen_sensor_grid(get("rows", 7), get("cols", 7), get("positions", 12), get("util_lo", Cost{1}),
                           get("util_hi", Cost{100}), s.seed);
  }
  if (s.family == "scale_free") {
    return gen_scale_free(get("n", 100), get("m0", 20), get("m", 3), get("domain", 10), get("cost_lo", Cost{1}),
                          get("cost_hi", Cost{100}), s.seed);
  }
  if (s.family == "coloring") {
    std::optional<GlobalCapConstraint> cap;
    if (p.contains("global_cap")) {
      cap = GlobalCapConstraint{p["global_cap"].value("cap", 40), p["global_cap"].value("penalty", Cost{500})};
    }
    return gen_graph_coloring(get("n", 120), get("density", 0.05), get("colors", 3), get("penalty_lo", Cost{1}),
                              get("penalty_hi", Cost{100}), cap, s.seed);
  }
  if (s.family == "target_tracking") {
    return gen_target_tracking(get("rows", 7), get("cols", 7), get("positions", 25), s.seed);
  }
  throw std::invalid_argument("unknown generator family '" + s.family + "'");
}

}  // namespace popdcop::benchgen
