#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "popdcop/als/local_search.hpp"
#include "popdcop/dpsa/annealing.hpp"

namespace popdcop::dpsa {

struct DpsaParams {
  int systems = 10;  // K
  int rounds = 12;   // R_max
  int calls_per_round = 1;  // S_max
  std::int64_t call_length = 100;  // S_len
  int elite = 3;  // G
  double learn_rate = 0.5;
  double sensitivity = 0.01;
  Theta theta{ThetaKind::uniform, 1e-3, 1e3};
  GbConfig gb{};
  std::int64_t total_iterations = 1000;

  void check() const {
    if (systems < 1) throw std::invalid_argument("K must be >= 1");
    if (rounds < 0) throw std::invalid_argument("R_max must be >= 0");
    if (calls_per_round < 1) throw std::invalid_argument("S_max must be >= 1");
    if (call_length < 1) throw std::invalid_argument("S_len must be >= 1");
    if (elite < 1 || elite > systems) throw std::invalid_argument("G must be in [1, K]");
    if (!(learn_rate > 0 && learn_rate <= 1)) throw std::invalid_argument("learn_rate must be in (0, 1]");
    if (sensitivity < 0) throw std::invalid_argument("sensitivity must be >= 0");
    if (total_iterations < 1) throw std::invalid_argument("total iterations must be >= 1");
    if (theta.kind == ThetaKind::uniform && !(theta.first > 0 && theta.first <= theta.second)) {
      throw std::invalid_argument("uniform theta needs 0 < T_min <= T_max");
    }
    if (theta.kind == ThetaKind::gaussian && theta.second < 0) throw std::invalid_argument("sigma must be >= 0");
  }
};

/// Simulated annealing move: constant per-system temperature while learning, linear
/// cooling over [t_min, t_max] otherwise.
struct AnnealingRule {
  Value operator()(const AgentView& view, Value current, std::span<const Value> nbr, const als::CallControl& call,
                   int k, std::int64_t l, sim::Rng& rng) const {
    const double t = scheduler(l, k, call.learning, call.temperatures, call.t_min, call.t_max, call.length);
    return sa_accept_step(view, current, nbr, t, rng).value;
  }
};

struct RoundRecord {
  int round = 0;
  std::vector<double> temperatures;
  std::vector<double> feedback;
  Theta theta_after;
};

/// Root-side DPSA driver: optional greedy-baseline pruning, CE rounds, then the final run.
class DpsaPlanner : public als::CallPlanner {
 public:
  DpsaPlanner(DpsaParams params, sim::Rng rng) : p_(std::move(params)), rng_(std::move(rng)), theta_(p_.theta) {
    p_.check();
    remaining_ = p_.total_iterations;
    if (p_.gb.enabled) {
      gb_.emplace(p_.gb);
      stage_ = Stage::gb_baseline;
    } else {
      stage_ = p_.rounds > 0 ? Stage::ce : Stage::final_run;
    }
  }

  std::optional<als::CallControl> next(const als::CallFeedback* previous) override {
    if (previous) absorb(*previous);
    if (remaining_ <= 0) return std::nullopt;
    switch (stage_) {
      case Stage::gb_baseline:
        return learning_call(std::vector<double>(static_cast<std::size_t>(p_.systems), 0.0));
      case Stage::gb_probe:
        return learning_call(
            std::vector<double>(static_cast<std::size_t>(p_.systems), gb_->probe_temperature()));
      case Stage::ce:
        if (calls_in_round_ == 0) {
          round_temps_ = sample_temperatures(theta_, p_.systems, rng_);
          round_sum_.assign(static_cast<std::size_t>(p_.systems), 0.0);
        }
        return learning_call(round_temps_);
      case Stage::final_run: {
        als::CallControl c;
        c.length = remaining_;
        const auto [lo, hi] = theta_.region(kMinGaussianTemperature);
        c.t_min = lo;
        c.t_max = hi;
        c.last = true;
        remaining_ = 0;
        final_started_ = true;
        return c;
      }
    }
    return std::nullopt;
  }

  const Theta& theta() const { return theta_; }
  const Theta& initial_theta() const { return p_.theta; }
  const std::optional<GreedyBaselineSearch>& greedy_baseline() const { return gb_; }
  const std::vector<RoundRecord>& rounds() const { return rounds_; }
  bool stopped_early() const { return stopped_early_; }
  bool final_started() const { return final_started_; }

 private:
  enum class Stage { gb_baseline, gb_probe, ce, final_run };

  als::CallControl learning_call(std::vector<double> temps) {
    als::CallControl c;
    c.learning = true;
    c.same_init = true;
    c.temperatures = std::move(temps);
    c.length = std::min(p_.call_length, remaining_);
    remaining_ -= c.length;
    c.last = remaining_ == 0;
    return c;
  }

  void absorb(const als::CallFeedback& fb) {
    std::vector<double> e(fb.best.begin(), fb.best.end());
    switch (stage_) {
      case Stage::gb_baseline:
        gb_->set_baseline(std::move(e));
        stage_ = gb_->finished() ? after_gb() : Stage::gb_probe;
        break;
      case Stage::gb_probe:
        gb_->observe(e);
        if (gb_->finished()) stage_ = after_gb();
        break;
      case Stage::ce: {
        for (std::size_t k = 0; k < e.size(); ++k) round_sum_[k] += e[k] / p_.calls_per_round;
        if (++calls_in_round_ < p_.calls_per_round) break;
        calls_in_round_ = 0;
        const double gamma = sensitivity_bound(p_.sensitivity, static_cast<double>(fb.meta_best));
        theta_ = ce_update(theta_, round_temps_, round_sum_, p_.elite, gamma, p_.learn_rate);
        rounds_.push_back(RoundRecord{static_cast<int>(rounds_.size()) + 1, round_temps_, round_sum_, theta_});
        const auto [mn, mx] = std::minmax_element(round_sum_.begin(), round_sum_.end());
        if (*mx - *mn <= gamma) {
          stopped_early_ = true;
          stage_ = Stage::final_run;
        } else if (static_cast<int>(rounds_.size()) >= p_.rounds) {
          stage_ = Stage::final_run;
        }
        break;
      }
      case Stage::final_run:
        break;
    }
  }

  Stage after_gb() {
    theta_ = gb_->theta();
    if (gb_->converged() || p_.rounds == 0) return Stage::final_run;
    return Stage::ce;
  }

  DpsaParams p_;
  sim::Rng rng_;
  Theta theta_;
  std::optional<GreedyBaselineSearch> gb_;
  Stage stage_ = Stage::final_run;
  std::int64_t remaining_ = 0;
  int calls_in_round_ = 0;
  std::vector<double> round_temps_;
  std::vector<double> round_sum_;
  std::vector<RoundRecord> rounds_;
  bool stopped_early_ = false;
  bool final_started_ = false;
};

using DpsaAgent = als::ParallelLocalSearch<AnnealingRule>;

inline auto dpsa_factory(DpsaParams params, als::LsOptions options = {}) {
  params.check();
  options.systems = params.systems;
  return [params, options](const sim::AgentContext& ctx) {
    std::unique_ptr<als::CallPlanner> planner;
    if (ctx.is_root()) planner = std::make_unique<DpsaPlanner>(params, ctx.make_rng("dpsa.theta"));
    return DpsaAgent(ctx, AnnealingRule{}, options, std::move(planner));
  };
}

}  // namespace popdcop::dpsa
