#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "popdcop/aed/operators.hpp"
#include "popdcop/sim/engine.hpp"

namespace popdcop::aed {

struct AedMessage {
  enum class Kind : std::uint8_t { init_share, init_up, init_down, found, update, migration };
  Kind kind = Kind::migration;
  std::int64_t version = 0;
  AgentId finder = -1;
  std::vector<Individual> individuals;
};

inline std::size_t wire_size(const AedMessage& m) {
  std::size_t bytes = 16;
  for (const auto& ind : m.individuals) bytes += 8 + 4 * ind.assigned_count();
  return bytes;
}

/// An individual together with the agent that first reported it.
struct Candidate {
  Individual individual;
  AgentId finder = -1;

  Cost fitness() const { return individual.fitness; }
};

/// Equal fitness breaks toward the lower finder id.
inline bool better(const Candidate& a, const Candidate& b) {
  return a.fitness() != b.fitness() ? a.fitness() < b.fitness() : a.finder < b.finder;
}

/// LB, the versioned GB history and pending Found/Update messages of one agent.
class AnytimeRegistry {
 public:
  static constexpr Cost kInfinite = std::numeric_limits<Cost>::max();

  struct Outgoing {
    std::optional<AedMessage> update;  // to children
    std::optional<AedMessage> found;   // to parent
  };

  void consider(const Candidate& c) {
    if (!local_best_ || better(c, *local_best_)) local_best_ = c;
  }

  const std::optional<Candidate>& local_best() const { return local_best_; }

  /// Latest GB version with tag not exceeding `version`.
  const Candidate* global_best_at(std::int64_t version) const {
    auto it = history_.upper_bound(version);
    if (it == history_.begin()) return nullptr;
    return &std::prev(it)->second;
  }

  Cost global_best_fitness_at(std::int64_t version) const {
    const auto* gb = global_best_at(version);
    return gb ? gb->fitness() : kInfinite;
  }

  const std::map<std::int64_t, Candidate>& history() const { return history_; }

  /// Send-phase half of the anytime update: decides what to report this iteration.
  Outgoing prepare(std::int64_t itr, bool is_root) {
    Outgoing out;
    if (local_best_ && local_best_->fitness() < global_best_fitness_at(itr)) {
      if (is_root) {
        history_[itr] = *local_best_;
        out.update = make_message(AedMessage::Kind::update, itr, *local_best_);
      } else {
        out.found = make_message(AedMessage::Kind::found, itr, *local_best_);
      }
    }
    if (pending_update_) {
      out.update = std::move(*pending_update_);
      pending_update_.reset();
    }
    return out;
  }

  void on_update(const AedMessage& m, std::int64_t itr, int height) {
    if (m.version < itr - height + 1) {
      ++stale_updates_;
      return;
    }
    Candidate c{m.individuals.at(0), m.finder};
    history_[m.version] = c;
    consider(c);
    pending_update_ = m;
  }

  void on_found(const AedMessage& m) { consider(Candidate{m.individuals.at(0), m.finder}); }

  /// Drops versions no longer reachable by GB^{j} queries with j >= itr - height + 1.
  void prune(std::int64_t itr, int height) {
    const std::int64_t window_start = itr - height + 1;
    auto keep = history_.upper_bound(window_start);
    if (keep == history_.begin()) return;
    --keep;  // latest version <= window start stays
    history_.erase(history_.begin(), keep);
  }

  std::int64_t stale_updates() const { return stale_updates_; }

 private:
  static AedMessage make_message(AedMessage::Kind kind, std::int64_t version, const Candidate& c) {
    AedMessage m;
    m.kind = kind;
    m.version = version;
    m.finder = c.finder;
    m.individuals.push_back(c.individual);
    return m;
  }

  std::optional<Candidate> local_best_;
  std::map<std::int64_t, Candidate> history_;
  std::optional<AedMessage> pending_update_;
  std::int64_t stale_updates_ = 0;
};

/// One AED agent. INIT occupies phases [0, 1+2H]; iteration t then uses a send phase
/// 2+2H+2(t-1) followed by a receive phase.
class AedAgent {
 public:
  using Payload = AedMessage;

  AedAgent(const sim::AgentContext& ctx, AedParams params, int initial_population)
      : params_(params),
        initial_population_(initial_population),
        init_rng_(ctx.make_rng("aed.init")),
        mutate_rng_(ctx.make_rng("aed.mutate")),
        select_rng_(ctx.make_rng("aed.select")),
        migrate_rng_(ctx.make_rng("aed.migrate")) {
    params_.check();
    if (initial_population_ < 1) throw std::invalid_argument("initial population must be >= 1");
  }

  void step(const sim::AgentContext& ctx, sim::Phase phase, std::span<const sim::Envelope<AedMessage>> inbox,
            sim::Outbox<AedMessage>& out) {
    const int h = ctx.height;
    const sim::Phase init_end = 1 + 2 * static_cast<sim::Phase>(h);
    if (phase <= init_end) {
      init_step(ctx, phase, inbox, out);
      return;
    }
    const sim::Phase rel = phase - init_end - 1;
    const std::int64_t itr = rel / 2 + 1;
    if (itr > params_.iterations) return;
    if (!init_done_) throw std::logic_error("AED INIT did not complete by phase " + std::to_string(init_end));
    if (rel % 2 == 0) {
      send_phase(ctx, itr, out);
    } else {
      receive_phase(ctx, itr, inbox, out);
    }
  }

  bool done() const { return iteration_ >= params_.iterations && finished_receive_; }

  const std::vector<Individual>& population() const { return population_; }
  const AnytimeRegistry& registry() const { return registry_; }
  Value decision() const { return decision_; }
  std::int64_t iteration() const { return iteration_; }
  bool init_done() const { return init_done_; }
  /// Fitness of B (best of P and its offspring) in the most recent send phase.
  Cost last_best_fitness() const { return last_best_fitness_; }
  /// Root only: (iteration, fitness of the adopted GB version) for iterations >= H.
  const std::vector<std::pair<std::int64_t, Cost>>& anytime_log() const { return anytime_log_; }

 private:
  void init_step(const sim::AgentContext& ctx, sim::Phase phase, std::span<const sim::Envelope<AedMessage>> inbox,
                 sim::Outbox<AedMessage>& out) {
    const auto& view = ctx.view;
    const int n = view.agent_count();
    if (phase == 0) {
      std::uniform_int_distribution<Value> pick(0, view.domain_size() - 1);
      decision_ = pick(init_rng_);
      population_.assign(static_cast<std::size_t>(initial_population_), Individual(n));
      for (auto& ind : population_) ind.values[static_cast<std::size_t>(ctx.id)] = pick(init_rng_);
      AedMessage m;
      m.kind = AedMessage::Kind::init_share;
      m.individuals = population_;
      for (AgentId nb : ctx.neighbors) out.send(nb, m);
      return;
    }
    for (const auto& env : inbox) {
      const auto& m = env.payload;
      switch (m.kind) {
        case AedMessage::Kind::init_share:
          population_ = merge(population_, m.individuals);
          ++shares_received_;
          break;
        case AedMessage::Kind::init_up:
          up_buffer_.push_back(m.individuals);
          break;
        case AedMessage::Kind::init_down:
          population_ = m.individuals;
          adopt_initial_population(ctx, out);
          break;
        default:
          throw std::logic_error("unexpected AED message during INIT");
      }
    }
    if (phase == 1) {
      if (shares_received_ != ctx.degree()) {
        throw std::logic_error("agent " + std::to_string(ctx.id) + " missing INIT shares");
      }
      for (auto& ind : population_) {
        ind.fitness = view.local_cost_in(ind.values[static_cast<std::size_t>(ctx.id)], ind.values);
      }
    }
    if (!sent_up_ && static_cast<int>(up_buffer_.size()) == static_cast<int>(ctx.children.size())) {
      for (const auto& child_pop : up_buffer_) population_ = merge(population_, child_pop);
      up_buffer_.clear();
      sent_up_ = true;
      if (!ctx.is_root()) {
        AedMessage m;
        m.kind = AedMessage::Kind::init_up;
        m.individuals = population_;
        out.send(*ctx.parent, std::move(m));
      } else {
        for (auto& ind : population_) {
          if (ind.fitness % 2 != 0) throw std::logic_error("INIT produced an odd doubled fitness");
          ind.fitness /= 2;
          if (view.global_cap()) {
            ValueHistogram hist(static_cast<std::size_t>(view.value_range()), 0);
            for (Value v : ind.values) ++hist[static_cast<std::size_t>(v)];
            ind.fitness += cap_penalty(*view.global_cap(), hist);
          }
        }
        adopt_initial_population(ctx, out);
      }
    }
  }

  void adopt_initial_population(const sim::AgentContext& ctx, sim::Outbox<AedMessage>& out) {
    for (const auto& ind : population_) {
      if (!ind.complete()) throw std::logic_error("INIT produced an incomplete individual");
    }
    AedMessage m;
    m.kind = AedMessage::Kind::init_down;
    m.individuals = population_;
    for (AgentId c : ctx.children) out.send(c, m);
    init_done_ = true;
  }

  void send_phase(const sim::AgentContext& ctx, std::int64_t itr, sim::Outbox<AedMessage>& out) {
    iteration_ = itr;
    finished_receive_ = false;
    const auto& view = ctx.view;
    auto offspring = reproduce(view, population_, params_, mutate_rng_);
    population_.insert(population_.end(), std::make_move_iterator(offspring.begin()),
                       std::make_move_iterator(offspring.end()));

    std::size_t best = 0;
    for (std::size_t k = 1; k < population_.size(); ++k) {
      if (population_[k].fitness < population_[best].fitness) best = k;
    }
    last_best_fitness_ = population_[best].fitness;
    registry_.consider(Candidate{population_[best], ctx.id});

    const std::size_t target = static_cast<std::size_t>(ctx.degree()) * params_.exchange_rate;
    population_ = reinsert(population_, target, params_.alpha, params_.epsilon, select_rng_);

    auto outgoing = registry_.prepare(itr, ctx.is_root());
    if (outgoing.update) {
      for (AgentId c : ctx.children) out.send(c, *outgoing.update);
    }
    if (outgoing.found) out.send(*ctx.parent, std::move(*outgoing.found));

    auto blocks = partition_for_migration(std::move(population_), ctx.degree(), params_.exchange_rate, migrate_rng_);
    population_.clear();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      AedMessage m;
      m.kind = AedMessage::Kind::migration;
      m.individuals = std::move(blocks[k]);
      out.send(ctx.neighbors[k], std::move(m));
    }
  }

  void receive_phase(const sim::AgentContext& ctx, std::int64_t itr, std::span<const sim::Envelope<AedMessage>> inbox,
                     sim::Outbox<AedMessage>& out) {
    for (const auto& env : inbox) {
      const auto& m = env.payload;
      switch (m.kind) {
        case AedMessage::Kind::migration:
          population_.insert(population_.end(), m.individuals.begin(), m.individuals.end());
          break;
        case AedMessage::Kind::update:
          registry_.on_update(m, itr, ctx.height);
          break;
        case AedMessage::Kind::found:
          registry_.on_found(m);
          break;
        default:
          throw std::logic_error("unexpected AED message during optimization");
      }
    }
    const int h = ctx.height;
    if (itr >= h) {
      const auto* gb = registry_.global_best_at(itr - h + 1);
      if (!gb) throw std::logic_error("no GB version available at iteration " + std::to_string(itr));
      decision_ = gb->individual.values[static_cast<std::size_t>(ctx.id)];
      if (ctx.is_root()) {
        out.report_cost(gb->fitness());
        anytime_log_.emplace_back(itr, gb->fitness());
      }
    }
    registry_.prune(itr, h);
    finished_receive_ = true;
  }

  AedParams params_;
  int initial_population_;
  sim::Rng init_rng_;
  sim::Rng mutate_rng_;
  sim::Rng select_rng_;
  sim::Rng migrate_rng_;

  std::vector<Individual> population_;
  std::vector<std::vector<Individual>> up_buffer_;
  int shares_received_ = 0;
  bool sent_up_ = false;
  bool init_done_ = false;

  AnytimeRegistry registry_;
  Value decision_ = 0;
  std::int64_t iteration_ = 0;
  bool finished_receive_ = false;
  Cost last_best_fitness_ = 0;
  std::vector<std::pair<std::int64_t, Cost>> anytime_log_;
};

/// Default IN: ER times the maximum degree, so INIT hands every agent at least its
/// steady-state population size.
inline int default_initial_population(const DcopInstance& inst, const AedParams& p) {
  if (p.initial_population > 0) return p.initial_population;
  int max_degree = 0;
  for (AgentId a = 0; a < inst.agent_count(); ++a) max_degree = std::max(max_degree, inst.degree(a));
  return max_degree * p.exchange_rate;
}

inline auto aed_factory(const DcopInstance& inst, AedParams params) {
  const int in = default_initial_population(inst, params);
  return [params, in](const sim::AgentContext& ctx) { return AedAgent(ctx, params, in); };
}

inline sim::Phase aed_phase_budget(int height, std::int64_t iterations) {
  return 2 + 2 * static_cast<sim::Phase>(height) + 2 * iterations;
}

}  // namespace popdcop::aed
