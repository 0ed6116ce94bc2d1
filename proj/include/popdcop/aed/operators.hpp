#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "popdcop/core/model.hpp"
#include "popdcop/sim/rng.hpp"

namespace popdcop::aed {

/// A (partial or complete) assignment with its cached fitness. Unassigned slots hold kUnassigned.
struct Individual {
  std::vector<Value> values;
  Cost fitness = 0;

  Individual() = default;
  explicit Individual(int agents) : values(static_cast<std::size_t>(agents), kUnassigned) {}

  bool complete() const {
    for (Value v : values) {
      if (v == kUnassigned) return false;
    }
    return true;
  }
  std::size_t assigned_count() const {
    std::size_t c = 0;
    for (Value v : values) c += (v != kUnassigned);
    return c;
  }

  friend bool operator==(const Individual&, const Individual&) = default;
};

struct AedParams {
  int initial_population = 0;  // IN; 0 picks ER * max degree
  int exchange_rate = 1;       // ER
  double alpha = 3.0;
  double beta = 3.0;
  double epsilon = 1.0;
  std::int64_t iterations = 100;

  void check() const {
    if (initial_population < 0) throw std::invalid_argument("IN must be >= 1 (or 0 for the default)");
    if (exchange_rate < 1) throw std::invalid_argument("ER must be >= 1");
    if (alpha < 0 || beta < 0) throw std::invalid_argument("alpha and beta must be >= 0");
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be > 0");
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  }
};

/// Union of assignments, fitness summed. Overlapping slots must agree.
inline Individual merge(const Individual& a, const Individual& b) {
  if (a.values.empty()) return b;
  if (b.values.empty()) return a;
  if (a.values.size() != b.values.size()) throw std::logic_error("merge: individuals have different widths");
  Individual out = a;
  for (std::size_t k = 0; k < b.values.size(); ++k) {
    const Value v = b.values[k];
    if (v == kUnassigned) continue;
    if (out.values[k] != kUnassigned && out.values[k] != v) {
      throw std::logic_error("merge: individuals disagree on agent " + std::to_string(k));
    }
    out.values[k] = v;
  }
  out.fitness = a.fitness + b.fitness;
  return out;
}

/// Index-wise merge of two ordered populations.
inline std::vector<Individual> merge(std::span<const Individual> a, std::span<const Individual> b) {
  if (a.size() != b.size()) throw std::logic_error("merge: populations have different sizes");
  std::vector<Individual> out;
  out.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out.push_back(merge(a[k], b[k]));
  return out;
}

/// Normalized advantage (|worst - c| + eps) / (|worst - best| + eps) raised to `exponent`, then
/// normalized to a distribution. Shared by mutation (over costs) and selection (over fitness).
inline std::vector<double> proportional_distribution(std::span<const Cost> costs, double exponent, double epsilon) {
  if (costs.empty()) throw std::invalid_argument("empty distribution");
  Cost best = costs[0];
  Cost worst = costs[0];
  for (Cost c : costs) {
    best = std::min(best, c);
    worst = std::max(worst, c);
  }
  const double denom = static_cast<double>(worst - best) + epsilon;
  std::vector<double> p(costs.size());
  double total = 0;
  for (std::size_t k = 0; k < costs.size(); ++k) {
    const double adv = (static_cast<double>(worst - costs[k]) + epsilon) / denom;
    p[k] = std::pow(adv, exponent);
    total += p[k];
  }
  for (auto& x : p) x /= total;
  return p;
}

inline std::vector<double> mutation_distribution(std::span<const Cost> mutation_costs, double beta, double epsilon) {
  return proportional_distribution(mutation_costs, beta, epsilon);
}

inline std::vector<double> selection_distribution(std::span<const Individual> population, double alpha,
                                                  double epsilon) {
  std::vector<Cost> f;
  f.reserve(population.size());
  for (const auto& ind : population) f.push_back(ind.fitness);
  return proportional_distribution(f, alpha, epsilon);
}

/// Cost of each candidate value for the agent's slot of a complete individual: incident table
/// costs plus, when a cap is active, the penalty change relative to the current value.
inline std::vector<Cost> mutation_costs(const AgentView& view, const Individual& ind) {
  const Value current = ind.values[static_cast<std::size_t>(view.self())];
  std::vector<Cost> costs(static_cast<std::size_t>(view.domain_size()));
  for (Value d = 0; d < view.domain_size(); ++d) {
    costs[static_cast<std::size_t>(d)] = view.local_cost_in(d, ind.values);
  }
  if (view.global_cap()) {
    ValueHistogram h(static_cast<std::size_t>(view.value_range()), 0);
    for (Value v : ind.values) ++h[static_cast<std::size_t>(v)];
    for (Value d = 0; d < view.domain_size(); ++d) {
      costs[static_cast<std::size_t>(d)] += cap_penalty_delta(*view.global_cap(), h, current, d);
    }
  }
  return costs;
}

inline std::size_t sample_index(std::span<const double> p, sim::Rng& rng) {
  std::discrete_distribution<std::size_t> dist(p.begin(), p.end());
  return dist(rng);
}

/// Mutates a copy of every individual at the agent's position; fitness is updated by the delta.
inline std::vector<Individual> reproduce(const AgentView& view, std::span<const Individual> population,
                                         const AedParams& params, sim::Rng& rng) {
  std::vector<Individual> out;
  out.reserve(population.size());
  const auto self = static_cast<std::size_t>(view.self());
  for (const auto& ind : population) {
    auto costs = mutation_costs(view, ind);
    auto p = mutation_distribution(costs, params.beta, params.epsilon);
    const auto chosen = static_cast<Value>(sample_index(p, rng));
    Individual child = ind;
    const Value old_value = child.values[self];
    child.fitness += costs[static_cast<std::size_t>(chosen)] - costs[static_cast<std::size_t>(old_value)];
    child.values[self] = chosen;
    out.push_back(std::move(child));
  }
  return out;
}

/// `target_size` independent draws with replacement, fitness-proportionate.
inline std::vector<Individual> reinsert(std::span<const Individual> population, std::size_t target_size,
                                        double alpha, double epsilon, sim::Rng& rng) {
  if (population.empty()) throw std::invalid_argument("reinsert: empty population");
  auto p = selection_distribution(population, alpha, epsilon);
  std::discrete_distribution<std::size_t> dist(p.begin(), p.end());
  std::vector<Individual> out;
  out.reserve(target_size);
  for (std::size_t k = 0; k < target_size; ++k) out.push_back(population[dist(rng)]);
  return out;
}

/// Seeded Fisher-Yates shuffle followed by contiguous blocks of `block` individuals, one block
/// per neighbor in neighbor order.
inline std::vector<std::vector<Individual>> partition_for_migration(std::vector<Individual> population,
                                                                    int neighbors, int block, sim::Rng& rng) {
  if (static_cast<std::size_t>(neighbors) * block != population.size()) {
    throw std::logic_error("migration needs |N_i|*ER individuals, have " + std::to_string(population.size()));
  }
  for (std::size_t k = population.size(); k > 1; --k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::swap(population[k - 1], population[pick(rng)]);
  }
  std::vector<std::vector<Individual>> blocks(static_cast<std::size_t>(neighbors));
  for (std::size_t k = 0; k < population.size(); ++k) {
    blocks[k / static_cast<std::size_t>(block)].push_back(std::move(population[k]));
  }
  return blocks;
}

}  // namespace popdcop::aed
