#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "popdcop/core/model.hpp"
#include "popdcop/sim/rng.hpp"
#include "popdcop/stats.hpp"

namespace popdcop::dpsa {

/// Acceptance probability min(1, exp(gain / t)). At t == 0 a move is accepted iff gain >= 0.
inline double acceptance_probability(double gain, double temperature) {
  if (gain >= 0) return 1.0;
  if (temperature <= 0) return 0.0;
  return std::exp(gain / temperature);
}

struct AcceptResult {
  Value value;
  bool accepted;
  Cost gain;
};

/// One annealing move for one system: propose a uniform value, accept with
/// min(1, exp(gain/t)) where gain = local cost now - local cost after the switch.
inline AcceptResult sa_accept_step(const AgentView& view, Value current, std::span<const Value> neighbor_values,
                                   double temperature, sim::Rng& rng) {
  std::uniform_int_distribution<Value> pick(0, view.domain_size() - 1);
  const Value v = pick(rng);
  const Cost gain = view.local_cost(current, neighbor_values) - view.local_cost(v, neighbor_values);
  const double p = acceptance_probability(static_cast<double>(gain), temperature);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const bool accept = p >= 1.0 || coin(rng) < p;
  return {accept ? v : current, accept, gain};
}

/// Linear cooling over the learned region: T_min + (T_max - T_min)(L - l)/L.
inline double linear_temperature(std::int64_t l, std::int64_t length, double t_min, double t_max) {
  if (length < 1) throw std::invalid_argument("schedule length must be >= 1");
  return t_min + (t_max - t_min) * static_cast<double>(length - l) / static_cast<double>(length);
}

enum class ThetaKind { uniform, gaussian };

/// Parameters of the temperature distribution: [T_min, T_max] for uniform, [mu, sigma] for gaussian.
struct Theta {
  ThetaKind kind = ThetaKind::uniform;
  double first = 1e-3;
  double second = 1e3;

  /// Region used by the final run's scheduler.
  std::pair<double, double> region(double floor = 1e-6) const {
    if (kind == ThetaKind::uniform) return {first, second};
    return {std::max(first - second, floor), std::max(first + second, floor)};
  }
};

/// Temperature of system k at iteration l: constant during learning, linear otherwise.
inline double scheduler(std::int64_t l, int k, bool is_learning, std::span<const double> constants, double t_min,
                        double t_max, std::int64_t length) {
  if (is_learning) return constants[static_cast<std::size_t>(k)];
  return linear_temperature(l, length, t_min, t_max);
}

/// K evenly spaced points over [T_min, T_max], both endpoints included.
inline std::vector<double> stratified_samples(const Theta& theta, int k_count) {
  if (theta.kind != ThetaKind::uniform) throw std::invalid_argument("stratified sampling needs a uniform theta");
  if (k_count < 2) throw std::invalid_argument("stratified sampling needs K >= 2");
  std::vector<double> t(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    t[static_cast<std::size_t>(k)] =
        theta.first + (theta.second - theta.first) * static_cast<double>(k) / static_cast<double>(k_count - 1);
  }
  return t;
}

inline constexpr double kMinGaussianTemperature = 1e-6;

/// Stratified for uniform theta; independent normal draws clipped to stay positive otherwise.
inline std::vector<double> sample_temperatures(const Theta& theta, int k_count, sim::Rng& rng) {
  if (theta.kind == ThetaKind::uniform) {
    if (k_count == 1) return {0.5 * (theta.first + theta.second)};
    return stratified_samples(theta, k_count);
  }
  std::normal_distribution<double> normal(theta.first, std::max(theta.second, 0.0));
  std::vector<double> t(static_cast<std::size_t>(k_count));
  for (auto& x : t) x = theta.second > 0 ? std::max(normal(rng), kMinGaussianTemperature)
                                         : std::max(theta.first, kMinGaussianTemperature);
  return t;
}

/// Cross-entropy step: keep samples whose feedback is within `gamma` of the G-th best,
/// refit theta on them and blend with the learning rate.
inline Theta ce_update(const Theta& theta, std::span<const double> temps, std::span<const double> feedback, int elite,
                       double gamma, double learn_rate) {
  if (temps.size() != feedback.size() || temps.empty()) throw std::invalid_argument("|T| must equal |E| and be > 0");
  if (elite < 1 || elite > static_cast<int>(temps.size())) throw std::invalid_argument("G must be in [1, K]");
  std::vector<double> sorted(feedback.begin(), feedback.end());
  std::nth_element(sorted.begin(), sorted.begin() + (elite - 1), sorted.end());
  const double threshold = sorted[static_cast<std::size_t>(elite - 1)] + gamma;
  std::vector<double> selected;
  for (std::size_t k = 0; k < temps.size(); ++k) {
    if (feedback[k] <= threshold) selected.push_back(temps[k]);
  }
  Theta fresh = theta;
  if (theta.kind == ThetaKind::uniform) {
    fresh.first = *std::min_element(selected.begin(), selected.end());
    fresh.second = *std::max_element(selected.begin(), selected.end());
  } else {
    const double mean = std::accumulate(selected.begin(), selected.end(), 0.0) / static_cast<double>(selected.size());
    double var = 0;
    for (double x : selected) var += (x - mean) * (x - mean);
    fresh.first = mean;
    fresh.second = std::sqrt(var / static_cast<double>(selected.size()));
  }
  Theta out = theta;
  // Single rounding: theta + lr * (fresh - theta).
  out.first = std::fma(learn_rate, fresh.first - theta.first, theta.first);
  out.second = std::fma(learn_rate, fresh.second - theta.second, theta.second);
  return out;
}

inline double sensitivity_bound(double sensitivity, double best_cost) { return sensitivity * best_cost; }

using stats::ci99;

/// True when E is conclusively costlier than B: the lower 99% bound of mean(E) lies above the
/// upper 99% bound of mean(B).
inline bool statistically_worse(std::span<const double> e, std::span<const double> b) {
  return ci99(e).lo > ci99(b).hi;
}

// ---------------------------------------------------------------------------
// Greedy baseline search

struct GbConfig {
  bool enabled = false;
  double l_min = -18;
  double l_max = 18;
  double width = 1.0;  // stop once l_max - l_min <= width (decades)
  int max_rounds = 64;
  double epsilon_floor = 1e-3;
};

/// Log-domain bisection for the highest temperature that still performs like t = 0.
class GreedyBaselineSearch {
 public:
  explicit GreedyBaselineSearch(GbConfig cfg) : cfg_(cfg), l_min_(cfg.l_min), l_max_(cfg.l_max) {
    if (!(cfg.l_min < cfg.l_max)) throw std::invalid_argument("greedy baseline needs l_min < l_max");
  }

  void set_baseline(std::vector<double> b) { baseline_ = std::move(b); }
  bool has_baseline() const { return !baseline_.empty(); }

  bool converged() const { return l_max_ - l_min_ <= cfg_.width; }
  bool finished() const { return converged() || rounds_ >= cfg_.max_rounds; }

  double midpoint() const { return 0.5 * (l_min_ + l_max_); }
  double probe_temperature() const { return std::pow(10.0, midpoint()); }

  void observe(std::span<const double> e) {
    if (baseline_.empty()) throw std::logic_error("greedy baseline not measured yet");
    const double mid = midpoint();
    if (statistically_worse(e, baseline_)) {
      l_max_ = mid;
    } else {
      l_min_ = mid;
    }
    ++rounds_;
  }

  double ght() const { return probe_temperature(); }
  Theta theta() const { return Theta{ThetaKind::uniform, std::min(cfg_.epsilon_floor, ght()), ght()}; }
  double l_min() const { return l_min_; }
  double l_max() const { return l_max_; }
  int rounds() const { return rounds_; }

 private:
  GbConfig cfg_;
  double l_min_;
  double l_max_;
  int rounds_ = 0;
  std::vector<double> baseline_;
};

struct GbResult {
  Theta theta;
  double ght = 0;
  double l_min = 0;
  double l_max = 0;
  int rounds = 0;
  bool converged = false;
};

/// Drives the search against any feedback source. `feedback(t)` returns the per-system best
/// costs of one simulate call at constant temperature t (t == 0 gives the baseline).
inline GbResult gb_search(const GbConfig& cfg, const std::function<std::vector<double>(double)>& feedback) {
  GreedyBaselineSearch gb(cfg);
  gb.set_baseline(feedback(0.0));
  while (!gb.finished()) gb.observe(feedback(gb.probe_temperature()));
  return {gb.theta(), gb.ght(), gb.l_min(), gb.l_max(), gb.rounds(), gb.converged()};
}

}  // namespace popdcop::dpsa
