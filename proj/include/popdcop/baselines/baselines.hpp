#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>

#include "popdcop/als/local_search.hpp"
#include "popdcop/dpsa/annealing.hpp"

namespace popdcop::baselines {

struct DsaParams {
  double p = 0.8;

  void check() const {
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument("DSA activation probability must be in [0, 1]");
  }
};

/// Best response (lowest value on ties); adopted with probability p when it does not
/// increase the local cost.
inline Value dsa_c_step(const AgentView& view, Value current, std::span<const Value> nbr, double p, sim::Rng& rng) {
  Value best = 0;
  Cost best_cost = view.local_cost(0, nbr);
  for (Value d = 1; d < view.domain_size(); ++d) {
    const Cost c = view.local_cost(d, nbr);
    if (c < best_cost) {
      best = d;
      best_cost = c;
    }
  }
  const Cost gain = view.local_cost(current, nbr) - best_cost;
  if (gain < 0 || p <= 0) return current;
  if (p >= 1) return best;
  std::bernoulli_distribution coin(p);
  return coin(rng) ? best : current;
}

/// DSAN temperature Max_Iteration / i^2.
inline double dsan_temperature(std::int64_t i, double max_iteration) {
  if (i < 1) throw std::invalid_argument("DSAN iteration index starts at 1");
  return max_iteration / (static_cast<double>(i) * static_cast<double>(i));
}

inline Value dsan_fixed_step(const AgentView& view, Value current, std::span<const Value> nbr, std::int64_t i,
                             double max_iteration, sim::Rng& rng) {
  return dpsa::sa_accept_step(view, current, nbr, dsan_temperature(i, max_iteration), rng).value;
}

struct DsaCRule {
  double p = 0.8;
  Value operator()(const AgentView& view, Value current, std::span<const Value> nbr, const als::CallControl&, int,
                   std::int64_t, sim::Rng& rng) const {
    return dsa_c_step(view, current, nbr, p, rng);
  }
};

struct DsanRule {
  double max_iteration = 0;  // 0 uses the call length
  Value operator()(const AgentView& view, Value current, std::span<const Value> nbr, const als::CallControl& call,
                   int, std::int64_t l, sim::Rng& rng) const {
    const double m = max_iteration > 0 ? max_iteration : static_cast<double>(call.length);
    return dsan_fixed_step(view, current, nbr, l, m, rng);
  }
};

using DsaCAgent = als::ParallelLocalSearch<DsaCRule>;
using DsanAgent = als::ParallelLocalSearch<DsanRule>;

inline constexpr int kParallelInstances = 10;

/// `instances` independent runs tracked by Modified-ALS.
inline auto dsa_c_factory(DsaParams params, std::int64_t iterations, int instances = kParallelInstances,
                          als::LsOptions options = {}) {
  params.check();
  options.systems = instances;
  return [params, iterations, options](const sim::AgentContext& ctx) {
    std::unique_ptr<als::CallPlanner> planner;
    if (ctx.is_root()) planner = std::make_unique<als::FixedRunPlanner>(iterations);
    return DsaCAgent(ctx, DsaCRule{params.p}, options, std::move(planner));
  };
}

inline auto dsan_factory(std::int64_t iterations, double max_iteration = 0, int instances = kParallelInstances,
                         als::LsOptions options = {}) {
  options.systems = instances;
  return [iterations, max_iteration, options](const sim::AgentContext& ctx) {
    std::unique_ptr<als::CallPlanner> planner;
    if (ctx.is_root()) planner = std::make_unique<als::FixedRunPlanner>(iterations);
    return DsanAgent(ctx, DsanRule{max_iteration}, options, std::move(planner));
  };
}

}  // namespace popdcop::baselines
