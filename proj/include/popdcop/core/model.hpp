#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace popdcop {

using AgentId = int;
using Value = int;
using Cost = std::int64_t;

inline constexpr Value kUnassigned = -1;

/// Raised when an instance description violates the model invariants.
class InstanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense |D_i| x |D_j| table, row-major, rows indexed by the first agent's value.
struct CostTable {
  int rows = 0;
  int cols = 0;
  std::vector<Cost> cells;

  CostTable() = default;
  CostTable(int r, int c, Cost fill = 0) : rows(r), cols(c), cells(static_cast<std::size_t>(r) * c, fill) {}

  static CostTable from_rows(const std::vector<std::vector<Cost>>& rows_in) {
    CostTable t;
    t.rows = static_cast<int>(rows_in.size());
    t.cols = rows_in.empty() ? 0 : static_cast<int>(rows_in.front().size());
    for (const auto& row : rows_in) {
      if (static_cast<int>(row.size()) != t.cols) {
        throw InstanceError("ragged cost table: rows have different lengths");
      }
      t.cells.insert(t.cells.end(), row.begin(), row.end());
    }
    return t;
  }

  Cost at(Value r, Value c) const { return cells[static_cast<std::size_t>(r) * cols + c]; }
  Cost& at(Value r, Value c) { return cells[static_cast<std::size_t>(r) * cols + c]; }

  friend bool operator==(const CostTable&, const CostTable&) = default;
};

struct Constraint {
  AgentId i = 0;
  AgentId j = 0;
  CostTable table;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

/// Soft cardinality cap: every agent beyond `cap` on the same value costs `penalty`.
struct GlobalCapConstraint {
  int cap = 0;
  Cost penalty = 0;

  Cost penalty_for(int count) const { return count > cap ? penalty * (count - cap) : 0; }

  friend bool operator==(const GlobalCapConstraint&, const GlobalCapConstraint&) = default;
};

struct InstanceMeta {
  std::string generator;
  std::uint64_t seed = 0;
  nlohmann::json params = nlohmann::json::object();
};

/// Unvalidated description, e.g. freshly parsed from a file or built by a generator.
struct RawInstance {
  int agents = 0;
  std::vector<int> domains;
  std::vector<Constraint> constraints;
  std::optional<GlobalCapConstraint> global_cap;
  InstanceMeta meta;
};

/// One incident edge as seen from an agent. `forward` is true when the agent is the
/// constraint's `i` (row) side.
struct Link {
  AgentId neighbor = 0;
  std::size_t constraint = 0;
  bool forward = true;
};

using Assignment = std::vector<Value>;

class DcopInstance;
DcopInstance validate_instance(RawInstance raw);

/// Validated, immutable problem. One variable per agent; agent ids are 0..n-1.
class DcopInstance {
 public:
  int agent_count() const { return static_cast<int>(domains_.size()); }
  int domain_size(AgentId a) const { return domains_[static_cast<std::size_t>(a)]; }
  const std::vector<int>& domains() const { return domains_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::optional<GlobalCapConstraint>& global_cap() const { return cap_; }
  const InstanceMeta& meta() const { return meta_; }

  /// Incident links sorted by neighbor id.
  std::span<const Link> links(AgentId a) const { return links_[static_cast<std::size_t>(a)]; }
  int degree(AgentId a) const { return static_cast<int>(links_[static_cast<std::size_t>(a)].size()); }
  std::vector<AgentId> neighbors(AgentId a) const {
    std::vector<AgentId> out;
    for (const auto& l : links(a)) out.push_back(l.neighbor);
    return out;
  }

  Cost link_cost(const Link& l, Value own, Value other) const {
    const auto& t = constraints_[l.constraint].table;
    return l.forward ? t.at(own, other) : t.at(other, own);
  }

  int max_domain_size() const { return *std::max_element(domains_.begin(), domains_.end()); }

 private:
  friend DcopInstance validate_instance(RawInstance raw);
  DcopInstance() = default;

  std::vector<int> domains_;
  std::vector<Constraint> constraints_;
  std::optional<GlobalCapConstraint> cap_;
  InstanceMeta meta_;
  std::vector<std::vector<Link>> links_;
};

inline DcopInstance validate_instance(RawInstance raw) {
  if (raw.agents < 2) throw InstanceError("instance needs at least two agents");
  if (static_cast<int>(raw.domains.size()) != raw.agents) {
    throw InstanceError("domains array has " + std::to_string(raw.domains.size()) + " entries, expected " +
                        std::to_string(raw.agents));
  }
  for (int a = 0; a < raw.agents; ++a) {
    if (raw.domains[static_cast<std::size_t>(a)] < 1) {
      throw InstanceError("agent " + std::to_string(a) + " has an empty domain");
    }
  }
  if (raw.global_cap && (raw.global_cap->cap < 0 || raw.global_cap->penalty < 0)) {
    throw InstanceError("global cap and penalty must be non-negative");
  }

  DcopInstance inst;
  inst.links_.resize(static_cast<std::size_t>(raw.agents));
  std::set<std::pair<AgentId, AgentId>> seen;
  for (std::size_t c = 0; c < raw.constraints.size(); ++c) {
    const auto& con = raw.constraints[c];
    const auto tag = "constraint (" + std::to_string(con.i) + "," + std::to_string(con.j) + ")";
    if (con.i < 0 || con.j < 0 || con.i >= raw.agents || con.j >= raw.agents) {
      throw InstanceError(tag + " references an unknown agent");
    }
    if (con.i == con.j) throw InstanceError(tag + " is a self-loop");
    if (!seen.emplace(std::min(con.i, con.j), std::max(con.i, con.j)).second) {
      throw InstanceError("duplicate " + tag);
    }
    const int want_rows = raw.domains[static_cast<std::size_t>(con.i)];
    const int want_cols = raw.domains[static_cast<std::size_t>(con.j)];
    if (con.table.rows != want_rows || con.table.cols != want_cols ||
        con.table.cells.size() != static_cast<std::size_t>(want_rows) * want_cols) {
      throw InstanceError(tag + " table is " + std::to_string(con.table.rows) + "x" +
                          std::to_string(con.table.cols) + ", expected " + std::to_string(want_rows) + "x" +
                          std::to_string(want_cols));
    }
    if (std::any_of(con.table.cells.begin(), con.table.cells.end(), [](Cost v) { return v < 0; })) {
      throw InstanceError(tag + " has a negative cost");
    }
    inst.links_[static_cast<std::size_t>(con.i)].push_back(Link{con.j, c, true});
    inst.links_[static_cast<std::size_t>(con.j)].push_back(Link{con.i, c, false});
  }
  for (auto& ls : inst.links_) {
    std::sort(ls.begin(), ls.end(), [](const Link& a, const Link& b) { return a.neighbor < b.neighbor; });
  }

  // Connectivity.
  std::vector<char> reached(static_cast<std::size_t>(raw.agents), 0);
  std::vector<AgentId> stack{0};
  reached[0] = 1;
  while (!stack.empty()) {
    AgentId a = stack.back();
    stack.pop_back();
    for (const auto& l : inst.links_[static_cast<std::size_t>(a)]) {
      if (!reached[static_cast<std::size_t>(l.neighbor)]) {
        reached[static_cast<std::size_t>(l.neighbor)] = 1;
        stack.push_back(l.neighbor);
      }
    }
  }
  for (int a = 0; a < raw.agents; ++a) {
    if (!reached[static_cast<std::size_t>(a)]) {
      throw InstanceError("constraint graph is disconnected: agent " + std::to_string(a) +
                          " is unreachable from agent 0");
    }
  }

  inst.domains_ = std::move(raw.domains);
  inst.constraints_ = std::move(raw.constraints);
  inst.cap_ = raw.global_cap;
  inst.meta_ = std::move(raw.meta);
  return inst;
}

// ---------------------------------------------------------------------------
// Local view

/// What a single agent is allowed to see: its own domain, its incident tables and the
/// (public) global cap parameters.
class AgentView {
 public:
  AgentView() = default;
  AgentView(const DcopInstance& inst, AgentId self) : inst_(&inst), self_(self), links_(inst.links(self)) {}

  AgentId self() const { return self_; }
  int domain_size() const { return inst_->domain_size(self_); }
  int degree() const { return static_cast<int>(links_.size()); }
  int agent_count() const { return inst_->agent_count(); }
  int value_range() const { return inst_->max_domain_size(); }
  AgentId neighbor(int idx) const { return links_[static_cast<std::size_t>(idx)].neighbor; }
  const std::optional<GlobalCapConstraint>& global_cap() const { return inst_->global_cap(); }

  Cost edge_cost(int idx, Value own, Value other) const {
    return inst_->link_cost(links_[static_cast<std::size_t>(idx)], own, other);
  }

  /// Sum of incident table entries; `neighbor_values` follows link order.
  Cost local_cost(Value own, std::span<const Value> neighbor_values) const {
    if (neighbor_values.size() != links_.size()) {
      throw std::invalid_argument("agent " + std::to_string(self_) + " expects " + std::to_string(links_.size()) +
                                  " neighbor values, got " + std::to_string(neighbor_values.size()));
    }
    Cost sum = 0;
    for (std::size_t k = 0; k < links_.size(); ++k) sum += inst_->link_cost(links_[k], own, neighbor_values[k]);
    return sum;
  }

  /// Same, reading neighbor values out of a full (possibly partial) assignment.
  Cost local_cost_in(Value own, std::span<const Value> assignment) const {
    Cost sum = 0;
    for (const auto& l : links_) sum += inst_->link_cost(l, own, assignment[static_cast<std::size_t>(l.neighbor)]);
    return sum;
  }

  /// Edges owned by this agent (lower id owns), so that summing over all agents counts each once.
  Cost owned_cost(Value own, std::span<const Value> neighbor_values) const {
    Cost sum = 0;
    for (std::size_t k = 0; k < links_.size(); ++k) {
      if (self_ < links_[k].neighbor) sum += inst_->link_cost(links_[k], own, neighbor_values[k]);
    }
    return sum;
  }

 private:
  const DcopInstance* inst_ = nullptr;
  AgentId self_ = 0;
  std::span<const Link> links_;
};

// ---------------------------------------------------------------------------
// Cost evaluation

using ValueHistogram = std::vector<int>;

inline ValueHistogram value_histogram(const DcopInstance& inst, std::span<const Value> a) {
  ValueHistogram h(static_cast<std::size_t>(inst.max_domain_size()), 0);
  for (Value v : a) ++h[static_cast<std::size_t>(v)];
  return h;
}

inline Cost cap_penalty(const GlobalCapConstraint& cap, const ValueHistogram& h) {
  Cost total = 0;
  for (int c : h) total += cap.penalty_for(c);
  return total;
}

/// Penalty change when one agent moves from `old_value` to `new_value`; `h` includes the mover.
inline Cost cap_penalty_delta(const GlobalCapConstraint& cap, const ValueHistogram& h, Value old_value,
                              Value new_value) {
  if (old_value == new_value) return 0;
  const int co = h[static_cast<std::size_t>(old_value)];
  const int cn = h[static_cast<std::size_t>(new_value)];
  return cap.penalty_for(co - 1) - cap.penalty_for(co) + cap.penalty_for(cn + 1) - cap.penalty_for(cn);
}

inline bool is_complete(const DcopInstance& inst, std::span<const Value> a) {
  if (static_cast<int>(a.size()) != inst.agent_count()) return false;
  for (int i = 0; i < inst.agent_count(); ++i) {
    if (a[static_cast<std::size_t>(i)] < 0 || a[static_cast<std::size_t>(i)] >= inst.domain_size(i)) return false;
  }
  return true;
}

/// Sum of binary tables without the global penalty.
inline Cost table_cost(const DcopInstance& inst, std::span<const Value> a) {
  Cost sum = 0;
  for (const auto& c : inst.constraints()) {
    sum += c.table.at(a[static_cast<std::size_t>(c.i)], a[static_cast<std::size_t>(c.j)]);
  }
  return sum;
}

inline Cost evaluate_global_cost(const DcopInstance& inst, std::span<const Value> a) {
  if (!is_complete(inst, a)) throw std::invalid_argument("evaluate_global_cost needs a complete assignment");
  Cost sum = table_cost(inst, a);
  if (inst.global_cap()) sum += cap_penalty(*inst.global_cap(), value_histogram(inst, a));
  return sum;
}

inline Cost local_cost(const DcopInstance& inst, AgentId agent, Value value, std::span<const Value> neighbor_values) {
  return AgentView(inst, agent).local_cost(value, neighbor_values);
}

/// local_cost(new) - local_cost(old), plus the cap-penalty delta when a histogram is supplied.
inline Cost delta_local_cost(const DcopInstance& inst, AgentId agent, Value old_value, Value new_value,
                             std::span<const Value> neighbor_values, const ValueHistogram* histogram = nullptr) {
  if (old_value == new_value) return 0;
  AgentView view(inst, agent);
  Cost d = view.local_cost(new_value, neighbor_values) - view.local_cost(old_value, neighbor_values);
  if (histogram && inst.global_cap()) d += cap_penalty_delta(*inst.global_cap(), *histogram, old_value, new_value);
  return d;
}

/// Exhaustive minimum. Ties keep the lexicographically first assignment (agent 0 most significant).
inline std::pair<Assignment, Cost> brute_force_optimum(const DcopInstance& inst, double max_states = 1e7) {
  double states = 1;
  for (int d : inst.domains()) states *= d;
  if (states > max_states) {
    throw std::length_error("instance too large for exhaustive search: " + std::to_string(states) + " states");
  }
  const int n = inst.agent_count();
  Assignment cur(static_cast<std::size_t>(n), 0);
  Assignment best = cur;
  Cost best_cost = std::numeric_limits<Cost>::max();
  while (true) {
    Cost c = evaluate_global_cost(inst, cur);
    if (c < best_cost) {
      best_cost = c;
      best = cur;
    }
    int pos = n - 1;
    while (pos >= 0) {
      if (++cur[static_cast<std::size_t>(pos)] < inst.domain_size(pos)) break;
      cur[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return {best, best_cost};
}

}  // namespace popdcop
