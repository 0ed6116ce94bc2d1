#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "popdcop/core/model.hpp"

namespace popdcop::als {

inline constexpr Cost kNoCost = std::numeric_limits<Cost>::max();

/// Per-system cost of the edges this agent owns. `neighbor_bank` is laid out system-major:
/// entry k*degree + j is neighbor j's value in system k.
inline std::vector<Cost> als_contribution(const AgentView& view, std::span<const Value> own,
                                          std::span<const Value> neighbor_bank) {
  const auto deg = static_cast<std::size_t>(view.degree());
  if (neighbor_bank.size() != own.size() * deg) throw std::invalid_argument("neighbor bank has the wrong size");
  std::vector<Cost> out(own.size());
  for (std::size_t k = 0; k < own.size(); ++k) {
    out[k] = view.owned_cost(own[k], neighbor_bank.subspan(k * deg, deg));
  }
  return out;
}

/// Identifies one evaluated state: iteration `tag` of simulate call `call`, system `system`.
struct StateTag {
  std::int64_t call = 0;
  int system = 0;
  std::int64_t tag = 0;

  friend auto operator<=>(const StateTag&, const StateTag&) = default;
};

/// Root-side bookkeeping: best per system within the current call, and the meta-best across
/// every call and system so far. Meta-best only moves on strict improvement, so among equal
/// costs the earliest (call, system, iteration) tag wins.
class AlsRootTracker {
 public:
  void start_call(std::int64_t call, int systems) {
    call_ = call;
    call_best_.assign(static_cast<std::size_t>(systems), kNoCost);
    call_best_tag_.assign(static_cast<std::size_t>(systems), 0);
    finalized_ = 0;
  }

  /// Records the global costs of iteration `tag`. Returns the winning state when the
  /// meta-best improved.
  std::optional<StateTag> finalize(std::int64_t tag, std::span<const Cost> sums) {
    if (sums.size() != call_best_.size()) throw std::logic_error("ALS sums do not match system count");
    std::optional<StateTag> improved;
    for (std::size_t k = 0; k < sums.size(); ++k) {
      if (sums[k] < call_best_[k]) {
        call_best_[k] = sums[k];
        call_best_tag_[k] = tag;
      }
      if (sums[k] < meta_cost_) {
        meta_cost_ = sums[k];
        meta_tag_ = StateTag{call_, static_cast<int>(k), tag};
        improved = meta_tag_;
      }
    }
    ++finalized_;
    return improved;
  }

  /// Feedback vector E: per-system best cost within the call.
  const std::vector<Cost>& call_best() const { return call_best_; }
  std::int64_t finalized_count() const { return finalized_; }
  Cost meta_best() const { return meta_cost_; }
  const StateTag& meta_tag() const { return meta_tag_; }
  bool has_meta() const { return meta_cost_ != kNoCost; }

 private:
  std::int64_t call_ = 0;
  std::vector<Cost> call_best_;
  std::vector<std::int64_t> call_best_tag_;
  std::int64_t finalized_ = 0;
  Cost meta_cost_ = kNoCost;
  StateTag meta_tag_;
};

/// Bounded history of this agent's own per-system values, keyed by (call, iteration).
class ValueHistory {
 public:
  explicit ValueHistory(std::size_t capacity = 1) : capacity_(capacity) {}

  void record(std::int64_t call, std::int64_t tag, std::vector<Value> values) {
    entries_.push_back(Entry{call, tag, std::move(values)});
    while (entries_.size() > capacity_) entries_.pop_front();
  }

  std::optional<Value> lookup(const StateTag& t) const {
    for (const auto& e : entries_) {
      if (e.call == t.call && e.tag == t.tag) return e.values.at(static_cast<std::size_t>(t.system));
    }
    return std::nullopt;
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::int64_t call;
    std::int64_t tag;
    std::vector<Value> values;
  };
  std::size_t capacity_;
  std::deque<Entry> entries_;
};

}  // namespace popdcop::als
