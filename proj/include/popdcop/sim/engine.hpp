#pragma once

#include <chrono>
#include <concepts>
#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "popdcop/core/model.hpp"
#include "popdcop/pseudo_tree.hpp"
#include "popdcop/sim/rng.hpp"

namespace popdcop::sim {

using Phase = std::int64_t;

/// Everything an agent may know about its place in the system.
struct AgentContext {
  AgentId id = 0;
  std::vector<AgentId> neighbors;  // sorted, same order as view links
  std::optional<AgentId> parent;
  std::vector<AgentId> children;
  int level = 0;
  int height = 0;
  std::uint64_t seed = 0;
  AgentView view;

  bool is_root() const { return !parent.has_value(); }
  int degree() const { return static_cast<int>(neighbors.size()); }
  int neighbor_index(AgentId who) const {
    for (std::size_t k = 0; k < neighbors.size(); ++k) {
      if (neighbors[k] == who) return static_cast<int>(k);
    }
    return -1;
  }
  Rng make_rng(std::string_view label, std::uint64_t sub = 0) const { return make_stream(seed, id, label, sub); }
};

template <class Payload>
struct Envelope {
  AgentId sender = 0;
  AgentId receiver = 0;
  Phase phase_tag = 0;
  Payload payload;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class Payload>
class Outbox {
 public:
  Outbox(const AgentContext& ctx, Phase phase) : ctx_(&ctx), phase_(phase) {}

  void send(AgentId to, Payload payload) {
    if (ctx_->neighbor_index(to) < 0) {
      throw ProtocolError("agent " + std::to_string(ctx_->id) + " tried to send to non-neighbor agent " +
                          std::to_string(to) + " at phase " + std::to_string(phase_));
    }
    sent_.push_back(Envelope<Payload>{ctx_->id, to, phase_, std::move(payload)});
  }

  void report_cost(Cost c) { reported_ = c; }

  std::vector<Envelope<Payload>>& sent() { return sent_; }
  const std::optional<Cost>& reported() const { return reported_; }

 private:
  const AgentContext* ctx_;
  Phase phase_;
  std::vector<Envelope<Payload>> sent_;
  std::optional<Cost> reported_;
};

template <class P>
concept AgentProgram = requires(P& p, const P& cp, const AgentContext& ctx, Phase ph,
                                std::span<const Envelope<typename P::Payload>> inbox,
                                Outbox<typename P::Payload>& out, const typename P::Payload& msg) {
  p.step(ctx, ph, inbox, out);
  { cp.done() } -> std::convertible_to<bool>;
  { wire_size(msg) } -> std::convertible_to<std::size_t>;
};

struct BarrierRecord {
  Phase barrier = 0;
  std::vector<std::uint32_t> agent_msgs;
  std::uint64_t payload_bytes = 0;
  std::optional<Cost> anytime_cost;

  std::uint64_t total_msgs() const {
    std::uint64_t s = 0;
    for (auto m : agent_msgs) s += m;
    return s;
  }
};

struct RunTrace {
  std::vector<BarrierRecord> records;

  void write_csv(std::ostream& os) const {
    os << "barrier,agent_msgs_total,payload_bytes,anytime_cost\n";
    for (const auto& r : records) {
      os << r.barrier << ',' << r.total_msgs() << ',' << r.payload_bytes << ',';
      if (r.anytime_cost) os << *r.anytime_cost;
      os << '\n';
    }
  }
};

struct EngineOptions {
  std::optional<AgentId> root;  // default: max-degree agent
  unsigned threads = 1;
  bool keep_envelopes = false;  // expose the last barrier's envelopes for inspection
};

/// Synchronous simulator: messages sent during phase t are delivered at phase t+1.
template <AgentProgram Program>
class Engine {
 public:
  using Payload = typename Program::Payload;

  template <class Factory>
  Engine(std::shared_ptr<const DcopInstance> instance, Factory&& factory, std::uint64_t seed, EngineOptions opts = {})
      : instance_(std::move(instance)), opts_(opts) {
    const int n = instance_->agent_count();
    tree_ = build_bfs_tree(*instance_, opts_.root.value_or(default_root(*instance_)));
    contexts_.reserve(static_cast<std::size_t>(n));
    for (AgentId a = 0; a < n; ++a) {
      AgentContext ctx;
      ctx.id = a;
      ctx.neighbors = instance_->neighbors(a);
      ctx.parent = tree_.parent[static_cast<std::size_t>(a)];
      ctx.children = tree_.children[static_cast<std::size_t>(a)];
      ctx.level = tree_.level[static_cast<std::size_t>(a)];
      ctx.height = tree_.height;
      ctx.seed = seed;
      ctx.view = AgentView(*instance_, a);
      contexts_.push_back(std::move(ctx));
    }
    programs_.reserve(static_cast<std::size_t>(n));
    for (AgentId a = 0; a < n; ++a) programs_.push_back(factory(contexts_[static_cast<std::size_t>(a)]));
    inboxes_.resize(static_cast<std::size_t>(n));
  }

  /// Executes one barrier: every agent steps on its mailbox snapshot, then all outgoing
  /// envelopes are routed for delivery at the next phase.
  BarrierRecord step() {
    const std::size_t n = programs_.size();
    std::vector<Outbox<Payload>> outs;
    outs.reserve(n);
    for (std::size_t a = 0; a < n; ++a) outs.emplace_back(contexts_[a], phase_);

    auto run_range = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t a = lo; a < hi; ++a) {
        programs_[a].step(contexts_[a], phase_, std::span<const Envelope<Payload>>(inboxes_[a]), outs[a]);
      }
    };
    const unsigned threads = std::min<unsigned>(opts_.threads, static_cast<unsigned>(n));
    if (threads <= 1) {
      run_range(0, n);
    } else {
      std::vector<std::exception_ptr> errors(threads);
      {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
          pool.emplace_back([&, t] {
            try {
              run_range(std::min(n, t * chunk), std::min(n, (t + 1) * chunk));
            } catch (...) {
              errors[t] = std::current_exception();
            }
          });
        }
      }
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }

    BarrierRecord rec;
    rec.barrier = phase_;
    rec.agent_msgs.assign(n, 0);
    for (auto& box : inboxes_) box.clear();
    last_sent_.clear();
    for (std::size_t a = 0; a < n; ++a) {
      if (outs[a].reported()) {
        if (rec.anytime_cost) {
          throw ProtocolError("more than one agent reported an anytime cost at phase " + std::to_string(phase_));
        }
        rec.anytime_cost = outs[a].reported();
      }
      for (auto& env : outs[a].sent()) {
        ++rec.agent_msgs[a];
        rec.payload_bytes += wire_size(env.payload);
        if (opts_.keep_envelopes) last_sent_.push_back(env);
        inboxes_[static_cast<std::size_t>(env.receiver)].push_back(std::move(env));
      }
    }
    trace_.records.push_back(rec);
    ++phase_;
    return rec;
  }

  /// Runs up to `budget` barriers, stopping early once every agent reports done or the
  /// optional wall-clock deadline passes. Returns the records of this call only.
  RunTrace run_phases(Phase budget, std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt) {
    if (budget < 1) throw std::invalid_argument("barrier budget must be at least 1");
    RunTrace out;
    for (Phase b = 0; b < budget && !all_done(); ++b) {
      if (deadline && std::chrono::steady_clock::now() >= *deadline) break;
      out.records.push_back(step());
    }
    return out;
  }

  bool all_done() const {
    for (const auto& p : programs_) {
      if (!p.done()) return false;
    }
    return true;
  }

  Phase phase() const { return phase_; }
  const PseudoTree& tree() const { return tree_; }
  const DcopInstance& instance() const { return *instance_; }
  const AgentContext& context(AgentId a) const { return contexts_[static_cast<std::size_t>(a)]; }
  const Program& program(AgentId a) const { return programs_[static_cast<std::size_t>(a)]; }
  const std::vector<Program>& programs() const { return programs_; }
  const RunTrace& trace() const { return trace_; }
  const std::vector<Envelope<Payload>>& last_sent() const { return last_sent_; }

 private:
  std::shared_ptr<const DcopInstance> instance_;
  EngineOptions opts_;
  PseudoTree tree_;
  std::vector<AgentContext> contexts_;
  std::vector<Program> programs_;
  std::vector<std::vector<Envelope<Payload>>> inboxes_;
  std::vector<Envelope<Payload>> last_sent_;
  RunTrace trace_;
  Phase phase_ = 0;
};

template <class Factory>
auto build_engine(std::shared_ptr<const DcopInstance> instance, Factory&& factory, std::uint64_t seed,
                  EngineOptions opts = {}) {
  using Program = std::invoke_result_t<Factory&, const AgentContext&>;
  return Engine<Program>(std::move(instance), std::forward<Factory>(factory), seed, opts);
}

}  // namespace popdcop::sim
