#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "popdcop/als/modified_als.hpp"
#include "popdcop/sim/engine.hpp"

namespace popdcop::als {

/// One simulate call as broadcast from the root.
struct CallControl {
  std::int64_t call = 0;
  sim::Phase start = 0;  // phase at which every agent initializes its systems
  std::int64_t length = 1;
  bool learning = false;
  bool same_init = false;  // copy one random value across all systems
  bool last = false;
  std::int64_t iteration_offset = 0;  // iterations consumed by earlier calls
  std::vector<double> temperatures;   // per system, learning calls
  double t_min = 0;                   // linear schedule, non-learning calls
  double t_max = 0;
};

struct AlsUp {
  std::int64_t call = 0;
  std::int64_t tag = 0;
  std::vector<Cost> sums;
};

/// Everything one agent sends one neighbor in one phase.
struct LsMessage {
  std::int64_t call = 0;
  std::int64_t tag = -1;
  std::vector<Value> values;  // K values, one per system; empty when none
  std::optional<AlsUp> up;
  std::optional<CallControl> control;
  std::optional<StateTag> adopt;
};

inline std::size_t value_payload_bytes(const LsMessage& m) { return 4 * m.values.size(); }
inline std::size_t als_payload_bytes(const LsMessage& m) { return m.up ? 8 * m.up->sums.size() : 0; }

inline std::size_t wire_size(const LsMessage& m) {
  std::size_t bytes = 16 + value_payload_bytes(m) + als_payload_bytes(m);
  if (m.up) bytes += 16;
  if (m.control) bytes += 64 + 8 * m.control->temperatures.size();
  if (m.adopt) bytes += 24;
  return bytes;
}

struct CallFeedback {
  std::int64_t call = 0;
  std::vector<Cost> best;  // per-system best cost within the call
  Cost meta_best = kNoCost;
};

/// Root-side policy deciding the sequence of simulate calls.
class CallPlanner {
 public:
  virtual ~CallPlanner() = default;
  /// `previous` is null for the first call. The returned control must set `last` on the
  /// final call; `call`, `start` and `iteration_offset` are filled in by the caller.
  virtual std::optional<CallControl> next(const CallFeedback* previous) = 0;
};

/// A single non-learning call over the whole budget.
class FixedRunPlanner : public CallPlanner {
 public:
  explicit FixedRunPlanner(std::int64_t iterations) : iterations_(iterations) {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  }

  std::optional<CallControl> next(const CallFeedback* previous) override {
    if (previous) return std::nullopt;
    CallControl c;
    c.length = iterations_;
    c.last = true;
    return c;
  }

 private:
  std::int64_t iterations_;
};

struct LsOptions {
  int systems = 1;                         // K
  std::optional<Assignment> initial;       // overrides the first call's initial values
  bool record_states = false;              // keep every (call, tag) state for offline checks
};

/// K parallel local-search systems with Modified-ALS cost tracking over the BFS tree.
///
/// A call with start phase Q and length L uses offsets o = phase - Q. At o = 0 every agent
/// initializes and sends its values; at 1 <= o <= L+1 it receives the state o-1 of its
/// neighbors, records its owned cost for that state and, while o <= L, takes one move per
/// system and sends the result. Owned costs climb the tree one level per phase; the root
/// finalizes state tag tau at o = tau + 1 + H.
template <class Rule>
class ParallelLocalSearch {
 public:
  using Payload = LsMessage;

  ParallelLocalSearch(const sim::AgentContext& ctx, Rule rule, LsOptions options,
                      std::unique_ptr<CallPlanner> planner = nullptr)
      : rule_(std::move(rule)),
        options_(std::move(options)),
        planner_(std::move(planner)),
        init_rng_(ctx.make_rng("ls.init")),
        history_(2 * static_cast<std::size_t>(ctx.height) + 2) {
    if (options_.systems < 1) throw std::invalid_argument("K must be >= 1");
    if (ctx.is_root() && !planner_) throw std::invalid_argument("root agent needs a call planner");
    const auto k_count = static_cast<std::size_t>(options_.systems);
    system_rngs_.reserve(k_count);
    for (std::size_t k = 0; k < k_count; ++k) system_rngs_.push_back(ctx.make_rng("ls.system", k));
    x_.assign(k_count, 0);
    if (options_.initial && options_.initial->size() != static_cast<std::size_t>(ctx.view.agent_count())) {
      throw std::invalid_argument("initial assignment has the wrong size");
    }
  }

  void step(const sim::AgentContext& ctx, sim::Phase phase, std::span<const sim::Envelope<LsMessage>> inbox,
            sim::Outbox<LsMessage>& out) {
    outgoing_.assign(static_cast<std::size_t>(ctx.degree()), std::nullopt);
    if (ctx.is_root() && phase == 0) schedule_next(ctx, phase, nullptr);
    absorb(ctx, inbox);
    if (call_ && phase >= call_->start) run_call(ctx, phase);
    for (std::size_t j = 0; j < outgoing_.size(); ++j) {
      if (outgoing_[j]) out.send(ctx.neighbors[j], std::move(*outgoing_[j]));
    }
    if (report_) {
      out.report_cost(*report_);
      report_.reset();
    }
  }

  bool done() const { return done_; }

  Value decision() const { return decision_; }
  const std::vector<Value>& values() const { return x_; }
  const std::optional<CallControl>& current_call() const { return call_; }
  CallPlanner* planner() const { return planner_.get(); }
  const AlsRootTracker& tracker() const { return tracker_; }
  /// Root only: (global iteration, meta-best cost) after each finalized state.
  const std::vector<std::pair<std::int64_t, Cost>>& anytime_log() const { return anytime_log_; }
  /// Root only: every finalized (call, tag) with its per-system global costs.
  const std::vector<AlsUp>& finalized() const { return finalized_; }
  const std::map<std::pair<std::int64_t, std::int64_t>, std::vector<Value>>& recorded_states() const {
    return recorded_;
  }
  std::size_t bank_size() const { return bank_.size(); }

 private:
  LsMessage& to(const sim::AgentContext& ctx, AgentId who) {
    auto& slot = outgoing_[static_cast<std::size_t>(ctx.neighbor_index(who))];
    if (!slot) slot.emplace();
    return *slot;
  }

  void schedule_next(const sim::AgentContext& ctx, sim::Phase phase, const CallFeedback* fb) {
    auto next = planner_->next(fb);
    if (!next) throw std::logic_error("planner stopped without marking a last call");
    next->call = next_call_id_++;
    next->start = phase + ctx.height;
    next->iteration_offset = consumed_;
    consumed_ += next->length;
    tracker_.start_call(next->call, options_.systems);
    for (AgentId c : ctx.children) to(ctx, c).control = *next;
    call_ = std::move(next);
  }

  void absorb(const sim::AgentContext& ctx, std::span<const sim::Envelope<LsMessage>> inbox) {
    const auto deg = static_cast<std::size_t>(ctx.degree());
    const auto k_count = static_cast<std::size_t>(options_.systems);
    for (const auto& env : inbox) {
      const auto& m = env.payload;
      if (m.control) {
        call_ = *m.control;
        for (AgentId c : ctx.children) to(ctx, c).control = *m.control;
      }
      if (m.adopt) {
        adopt(*m.adopt);
        for (AgentId c : ctx.children) to(ctx, c).adopt = *m.adopt;
      }
      if (!m.values.empty()) {
        if (m.values.size() != k_count) throw sim::ProtocolError("value message does not carry K values");
        if (bank_.empty()) bank_.assign(k_count * deg, kUnassigned);
        const auto j = static_cast<std::size_t>(ctx.neighbor_index(env.sender));
        for (std::size_t k = 0; k < k_count; ++k) bank_[k * deg + j] = m.values[k];
        bank_call_ = m.call;
        bank_tag_ = m.tag;
        ++bank_count_;
      }
      if (m.up) child_sums_[m.up->tag].push_back(m.up->sums);
    }
  }

  void adopt(const StateTag& t) {
    auto v = history_.lookup(t);
    if (!v) {
      throw std::logic_error("state (" + std::to_string(t.call) + ", " + std::to_string(t.tag) +
                             ") left the value history before its adopt notice arrived");
    }
    decision_ = *v;
  }

  void record_state(std::int64_t tag) {
    history_.record(call_->call, tag, x_);
    if (options_.record_states) recorded_[{call_->call, tag}] = x_;
  }

  void send_values(const sim::AgentContext& ctx, std::int64_t tag) {
    for (AgentId nb : ctx.neighbors) {
      auto& m = to(ctx, nb);
      m.call = call_->call;
      m.tag = tag;
      m.values = x_;
    }
  }

  void initialize(const sim::AgentContext& ctx) {
    const auto& view = ctx.view;
    std::uniform_int_distribution<Value> pick(0, view.domain_size() - 1);
    if (call_->call == 0 && options_.initial) {
      std::fill(x_.begin(), x_.end(), (*options_.initial)[static_cast<std::size_t>(ctx.id)]);
    } else if (call_->same_init) {
      std::fill(x_.begin(), x_.end(), pick(init_rng_));
    } else {
      for (auto& v : x_) v = pick(init_rng_);
    }
    if (call_->call == 0) decision_ = x_[0];
  }

  void run_call(const sim::AgentContext& ctx, sim::Phase phase) {
    const std::int64_t o = phase - call_->start;
    const std::int64_t len = call_->length;
    const std::int64_t h = ctx.height;
    const auto k_count = static_cast<std::size_t>(options_.systems);

    if (o >= 1 && o <= len + 1) {
      if (bank_count_ != ctx.degree() || bank_call_ != call_->call || bank_tag_ != o - 1) {
        throw sim::ProtocolError("agent " + std::to_string(ctx.id) + " missing neighbor values at phase " +
                                 std::to_string(phase));
      }
      contributions_[o - 1] = als_contribution(ctx.view, x_, bank_);
      bank_count_ = 0;
    }

    const std::int64_t tau = o - 1 - (h - ctx.level);
    if (tau >= 0 && tau <= len) aggregate(ctx, tau);

    if (o == 0) {
      initialize(ctx);
      record_state(0);
      send_values(ctx, 0);
    } else if (o <= len) {
      const auto deg = static_cast<std::size_t>(ctx.degree());
      for (std::size_t k = 0; k < k_count; ++k) {
        std::span<const Value> nbr(bank_.data() + k * deg, deg);
        x_[k] = rule_(ctx.view, x_[k], nbr, *call_, static_cast<int>(k), o, system_rngs_[k]);
      }
      record_state(o);
      send_values(ctx, o);
    }

    if (o == len + 1 + h) {
      if (ctx.is_root() && !call_->last) {
        CallFeedback fb{call_->call, tracker_.call_best(), tracker_.meta_best()};
        schedule_next(ctx, phase, &fb);
      } else if (call_->last) {
        // The deepest adopt notice for the last tag arrives H phases after finalization.
        drain_until_ = phase + h;
      }
    }
    if (drain_until_ && phase >= *drain_until_) done_ = true;
  }

  void aggregate(const sim::AgentContext& ctx, std::int64_t tau) {
    auto own = contributions_.find(tau);
    if (own == contributions_.end()) throw std::logic_error("own ALS contribution missing");
    std::vector<Cost> sums = std::move(own->second);
    contributions_.erase(own);
    auto kids = child_sums_.find(tau);
    const std::size_t arrived = kids == child_sums_.end() ? 0 : kids->second.size();
    if (arrived != ctx.children.size()) {
      throw sim::ProtocolError("agent " + std::to_string(ctx.id) + " missing child ALS sums for tag " +
                               std::to_string(tau));
    }
    if (kids != child_sums_.end()) {
      for (const auto& s : kids->second) {
        for (std::size_t k = 0; k < sums.size(); ++k) sums[k] += s[k];
      }
      child_sums_.erase(kids);
    }
    if (!ctx.is_root()) {
      to(ctx, *ctx.parent).up = AlsUp{call_->call, tau, std::move(sums)};
      return;
    }
    finalized_.push_back(AlsUp{call_->call, tau, sums});
    if (auto win = tracker_.finalize(tau, sums)) {
      adopt(*win);
      for (AgentId c : ctx.children) to(ctx, c).adopt = *win;
    }
    report_ = tracker_.meta_best();
    // Tag L of one call and tag 0 of the next share a global iteration.
    const std::int64_t global = call_->iteration_offset + tau;
    if (!anytime_log_.empty() && anytime_log_.back().first == global) {
      anytime_log_.back().second = tracker_.meta_best();
    } else {
      anytime_log_.emplace_back(global, tracker_.meta_best());
    }
  }

  Rule rule_;
  LsOptions options_;
  std::unique_ptr<CallPlanner> planner_;
  sim::Rng init_rng_;
  std::vector<sim::Rng> system_rngs_;

  std::optional<CallControl> call_;
  std::vector<Value> x_;
  std::vector<Value> bank_;
  std::int64_t bank_call_ = -1;
  std::int64_t bank_tag_ = -1;
  int bank_count_ = 0;
  std::map<std::int64_t, std::vector<Cost>> contributions_;
  std::map<std::int64_t, std::vector<std::vector<Cost>>> child_sums_;
  ValueHistory history_;
  Value decision_ = 0;

  AlsRootTracker tracker_;
  std::int64_t next_call_id_ = 0;
  std::int64_t consumed_ = 0;
  std::optional<Cost> report_;
  std::vector<std::pair<std::int64_t, Cost>> anytime_log_;
  std::vector<AlsUp> finalized_;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<Value>> recorded_;

  std::vector<std::optional<LsMessage>> outgoing_;
  std::optional<sim::Phase> drain_until_;
  bool done_ = false;
};

/// Upper bound on barriers for `iterations` total moves split into at most `iterations` calls.
inline sim::Phase ls_phase_budget(int height, std::int64_t iterations) {
  return iterations * (2 * static_cast<sim::Phase>(height) + 3) + 2 * height + 4;
}

}  // namespace popdcop::als
