#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "popdcop/aed/agent.hpp"
#include "popdcop/baselines/baselines.hpp"
#include "popdcop/benchgen.hpp"
#include "popdcop/core/instance_io.hpp"
#include "popdcop/dpsa/dpsa.hpp"
#include "popdcop/stats.hpp"

namespace popdcop::exp {

struct AedSpec {
  aed::AedParams params;
};
struct DpsaSpec {
  dpsa::DpsaParams params;
};
struct DsaCSpec {
  baselines::DsaParams params;
  int instances = baselines::kParallelInstances;
};
struct DsanSpec {
  double max_iteration = 0;  // 0 uses the iteration budget
  int instances = baselines::kParallelInstances;
};

struct AlgorithmSpec {
  std::string name;
  std::variant<AedSpec, DpsaSpec, DsaCSpec, DsanSpec> config;
};

struct TracePoint {
  std::int64_t iteration = 0;
  Cost cost = 0;
};

struct RunOptions {
  unsigned threads = 1;
  std::optional<AgentId> root;
  std::optional<std::chrono::milliseconds> wall_clock;  // not used by deterministic runs
};

struct RunResult {
  std::vector<TracePoint> trace;
  Assignment assignment;
  Cost final_cost = 0;    // evaluate_global_cost of the output assignment
  Cost tracked_cost = 0;  // last anytime cost reported by the root
  sim::RunTrace engine_trace;
  int height = 0;
};

namespace detail {

template <class Engine>
void run_engine(Engine& engine, sim::Phase budget, const RunOptions& opts) {
  std::optional<std::chrono::steady_clock::time_point> deadline;
  if (opts.wall_clock) deadline = std::chrono::steady_clock::now() + *opts.wall_clock;
  engine.run_phases(budget, deadline);
  if (!deadline && !engine.all_done()) throw std::logic_error("run did not finish within its barrier budget");
}

template <class Engine>
RunResult collect(const Engine& engine, const DcopInstance& inst) {
  RunResult r;
  const auto root = engine.tree().root;
  for (auto [itr, cost] : engine.program(root).anytime_log()) r.trace.push_back({itr, cost});
  for (AgentId a = 0; a < inst.agent_count(); ++a) r.assignment.push_back(engine.program(a).decision());
  r.final_cost = evaluate_global_cost(inst, r.assignment);
  r.tracked_cost = r.trace.empty() ? r.final_cost : r.trace.back().cost;
  r.engine_trace = engine.trace();
  r.height = engine.tree().height;
  return r;
}

}  // namespace detail

/// Runs one algorithm on one instance for `iterations` iterations.
inline RunResult solve(std::shared_ptr<const DcopInstance> inst, const AlgorithmSpec& spec, std::uint64_t seed,
                       std::int64_t iterations, const RunOptions& opts = {}) {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  sim::EngineOptions eo;
  eo.root = opts.root;
  eo.threads = opts.threads;
  return std::visit(
      [&](const auto& cfg) -> RunResult {
        using T = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<T, AedSpec>) {
          auto p = cfg.params;
          p.iterations = iterations;
          auto engine = sim::build_engine(inst, aed::aed_factory(*inst, p), seed, eo);
          detail::run_engine(engine, aed::aed_phase_budget(engine.tree().height, iterations), opts);
          return detail::collect(engine, *inst);
        } else if constexpr (std::is_same_v<T, DpsaSpec>) {
          auto p = cfg.params;
          p.total_iterations = iterations;
          auto engine = sim::build_engine(inst, dpsa::dpsa_factory(p), seed, eo);
          detail::run_engine(engine, als::ls_phase_budget(engine.tree().height, iterations), opts);
          return detail::collect(engine, *inst);
        } else if constexpr (std::is_same_v<T, DsaCSpec>) {
          auto engine = sim::build_engine(inst, baselines::dsa_c_factory(cfg.params, iterations, cfg.instances), seed, eo);
          detail::run_engine(engine, als::ls_phase_budget(engine.tree().height, iterations), opts);
          return detail::collect(engine, *inst);
        } else {
          auto engine =
              sim::build_engine(inst, baselines::dsan_factory(iterations, cfg.max_iteration, cfg.instances), seed, eo);
          detail::run_engine(engine, als::ls_phase_budget(engine.tree().height, iterations), opts);
          return detail::collect(engine, *inst);
        }
      },
      spec.config);
}

// ---------------------------------------------------------------------------
// Configuration

inline dpsa::Theta theta_from_json(const nlohmann::json& j, dpsa::Theta fallback) {
  dpsa::Theta t = fallback;
  const auto kind = j.value("kind", std::string("uniform"));
  if (kind == "uniform") {
    t.kind = dpsa::ThetaKind::uniform;
    t.first = j.value("lo", t.first);
    t.second = j.value("hi", t.second);
  } else if (kind == "gaussian") {
    t.kind = dpsa::ThetaKind::gaussian;
    t.first = j.value("mu", 1.0);
    t.second = j.value("sigma", 1.0);
  } else {
    throw std::invalid_argument("unknown theta kind '" + kind + "'");
  }
  return t;
}

inline AlgorithmSpec algorithm_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  AlgorithmSpec s;
  s.name = j.value("name", type);
  if (type == "aed") {
    aed::AedParams p;
    p.initial_population = j.value("initial_population", p.initial_population);
    p.exchange_rate = j.value("exchange_rate", p.exchange_rate);
    p.alpha = j.value("alpha", p.alpha);
    p.beta = j.value("beta", p.beta);
    p.epsilon = j.value("epsilon", p.epsilon);
    p.check();
    s.config = AedSpec{p};
  } else if (type == "dpsa") {
    dpsa::DpsaParams p;
    p.systems = j.value("K", p.systems);
    p.rounds = j.value("R_max", p.rounds);
    p.calls_per_round = j.value("S_max", p.calls_per_round);
    p.call_length = j.value("S_len", p.call_length);
    p.elite = j.value("G", p.elite);
    p.learn_rate = j.value("learn_rate", p.learn_rate);
    p.sensitivity = j.value("sensitivity", p.sensitivity);
    if (j.contains("theta")) p.theta = theta_from_json(j["theta"], p.theta);
    if (j.contains("gb")) {
      const auto& g = j["gb"];
      p.gb.enabled = g.value("enabled", true);
      p.gb.l_min = g.value("l_min", p.gb.l_min);
      p.gb.l_max = g.value("l_max", p.gb.l_max);
      p.gb.width = g.value("width", p.gb.width);
      p.gb.max_rounds = g.value("max_rounds", p.gb.max_rounds);
      p.gb.epsilon_floor = g.value("epsilon_floor", p.gb.epsilon_floor);
    }
    p.check();
    s.config = DpsaSpec{p};
  } else if (type == "dsa_c") {
    DsaCSpec c;
    c.params.p = j.value("p", c.params.p);
    c.params.check();
    c.instances = j.value("parallel_instances", c.instances);
    s.config = c;
  } else if (type == "dsan") {
    DsanSpec c;
    c.max_iteration = j.value("max_iteration", c.max_iteration);
    c.instances = j.value("parallel_instances", c.instances);
    s.config = c;
  } else {
    throw std::invalid_argument("unknown algorithm type '" + type + "'");
  }
  return s;
}

struct InstanceEntry {
  std::string id;
  std::shared_ptr<const DcopInstance> instance;
};

struct ExperimentConfig {
  std::vector<InstanceEntry> instances;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<std::uint64_t> seeds;
  std::int64_t iterations = 500;
  std::filesystem::path output = "results";
  std::int64_t stride = 1;
  unsigned jobs = 1;
  bool rs_of_means = false;

  void check() const {
    if (instances.empty()) throw std::invalid_argument("experiment needs at least one instance");
    if (algorithms.empty()) throw std::invalid_argument("experiment needs at least one algorithm");
    if (seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  }
};

/// Replaces every AED entry by twelve copies with beta = 1..12.
inline void expand_beta_sweep(std::vector<AlgorithmSpec>& algorithms) {
  std::vector<AlgorithmSpec> out;
  for (const auto& a : algorithms) {
    const auto* aed = std::get_if<AedSpec>(&a.config);
    if (!aed) {
      out.push_back(a);
      continue;
    }
    for (int beta = 1; beta <= 12; ++beta) {
      AedSpec s = *aed;
      s.params.beta = beta;
      out.push_back({a.name + "_beta" + std::to_string(beta), s});
    }
  }
  algorithms = std::move(out);
}

/// Relative paths inside the config resolve against `base`.
inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base = ".") {
  ExperimentConfig c;
  int index = 0;
  for (const auto& e : j.at("instances")) {
    InstanceEntry entry;
    if (e.contains("path")) {
      auto path = std::filesystem::path(e["path"].get<std::string>());
      if (path.is_relative()) path = base / path;
      entry.instance = std::make_shared<const DcopInstance>(load_instance(path.string()));
      entry.id = e.value("id", path.stem().string());
    } else {
      benchgen::GenSpec g{e.at("family").get<std::string>(), e.value("params", nlohmann::json::object()),
                          e.value("seed", std::uint64_t{0})};
      entry.instance = std::make_shared<const DcopInstance>(benchgen::generate(g));
      entry.id = e.value("id", g.family + "_" + std::to_string(index));
    }
    c.instances.push_back(std::move(entry));
    ++index;
  }
  for (const auto& a : j.at("algorithms")) c.algorithms.push_back(algorithm_from_json(a));
  const auto& seeds = j.at("seeds");
  if (seeds.is_number_integer()) {
    for (std::uint64_t s = 1; s <= seeds.get<std::uint64_t>(); ++s) c.seeds.push_back(s);
  } else {
    c.seeds = seeds.get<std::vector<std::uint64_t>>();
  }
  c.iterations = j.value("iterations", c.iterations);
  if (j.contains("output")) {
    auto out = std::filesystem::path(j["output"].get<std::string>());
    c.output = out.is_relative() ? base / out : out;
  }
  c.stride = j.value("stride", c.stride);
  c.jobs = j.value("jobs", c.jobs);
  c.rs_of_means = j.value("rs_of_means", c.rs_of_means);
  if (j.value("beta_sweep", false)) expand_beta_sweep(c.algorithms);
  c.check();
  return c;
}

// ---------------------------------------------------------------------------
// Traces

struct TraceRow {
  std::string instance;
  std::string algorithm;
  std::uint64_t seed = 0;
  std::int64_t iteration = 0;
  Cost cost = 0;
};

struct FinalRow {
  std::string instance;
  std::string algorithm;
  std::uint64_t seed = 0;
  Cost final_cost = 0;
};

inline constexpr const char* kTraceHeader = "instance,algorithm,seed,iteration,anytime_cost";

/// Keeps points on the stride plus the final point.
inline std::vector<TracePoint> thin(const std::vector<TracePoint>& trace, std::int64_t stride) {
  if (stride <= 1) return trace;
  std::vector<TracePoint> out;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (trace[k].iteration % stride == 0 || k + 1 == trace.size()) out.push_back(trace[k]);
  }
  return out;
}

inline std::string trace_csv(const std::string& instance, const std::string& algorithm, std::uint64_t seed,
                             const std::vector<TracePoint>& trace) {
  std::ostringstream os;
  os << kTraceHeader << '\n';
  for (const auto& p : trace) os << instance << ',' << algorithm << ',' << seed << ',' << p.iteration << ',' << p.cost << '\n';
  return os.str();
}

inline std::string trace_file_name(const std::string& instance, const std::string& algorithm, std::uint64_t seed) {
  return instance + "__" + algorithm + "__" + std::to_string(seed) + ".csv";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::vector<TraceRow> read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kTraceHeader) throw std::runtime_error("unexpected trace header in " + path.string());
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c = split_csv_line(line);
    if (c.size() != 5) throw std::runtime_error("malformed trace row in " + path.string() + ": " + line);
    rows.push_back({c[0], c[1], std::stoull(c[2]), std::stoll(c[3]), std::stoll(c[4])});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Aggregation

/// RS = 100 * lowest / cost; a zero lowest cost gives 100 to ties and 0 otherwise.
inline double relative_score(double lowest, double cost) {
  if (cost <= 0) return 100.0;
  return 100.0 * lowest / cost;
}

/// Per-instance RS of every algorithm from per-instance (mean) costs.
inline std::map<std::string, double> relative_solution_cost(const std::map<std::string, double>& costs) {
  if (costs.empty()) return {};
  double lowest = costs.begin()->second;
  for (const auto& [_, c] : costs) lowest = std::min(lowest, c);
  std::map<std::string, double> rs;
  for (const auto& [name, c] : costs) rs[name] = relative_score(lowest, c);
  return rs;
}

struct SummaryRow {
  std::string instance;
  std::string algorithm;
  double mean_final = 0;
  double ci99_lo = 0;
  double ci99_hi = 0;
  double rs = 0;
  std::size_t n = 0;
};

struct PairTest {
  std::string instance;
  std::string a;
  std::string b;
  double mean_a = 0;
  double mean_b = 0;
  stats::WelchResult welch;
};

struct CurvePoint {
  std::string instance;
  std::string algorithm;
  std::int64_t iteration = 0;
  double mean = 0;
  double lo = 0;
  double hi = 0;
  std::size_t n = 0;
};

struct Summary {
  std::vector<SummaryRow> rows;
  std::map<std::string, double> rs;  // per algorithm, over instances
  std::vector<PairTest> tests;
  std::vector<CurvePoint> curves;
};

/// Pure function of the trace rows: the final cost of a run is its last trace point.
inline Summary aggregate(const std::vector<TraceRow>& rows, bool rs_of_means = false) {
  // instance -> algorithm -> seed -> points
  std::map<std::string, std::map<std::string, std::map<std::uint64_t, std::vector<TracePoint>>>> runs;
  for (const auto& r : rows) runs[r.instance][r.algorithm][r.seed].push_back({r.iteration, r.cost});

  Summary s;
  std::map<std::string, std::vector<double>> rs_lists;
  std::map<std::string, std::vector<double>> cost_lists;
  for (auto& [inst, algs] : runs) {
    std::map<std::string, std::vector<double>> finals;
    for (auto& [alg, seeds] : algs) {
      for (auto& [seed, pts] : seeds) {
        std::stable_sort(pts.begin(), pts.end(), [](auto& x, auto& y) { return x.iteration < y.iteration; });
        finals[alg].push_back(static_cast<double>(pts.back().cost));
      }
      // step-function curves over the union of iterations
      std::vector<std::int64_t> grid;
      for (auto& [seed, pts] : seeds) {
        for (auto& p : pts) grid.push_back(p.iteration);
      }
      std::sort(grid.begin(), grid.end());
      grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
      for (auto it : grid) {
        std::vector<double> xs;
        for (auto& [seed, pts] : seeds) {
          std::optional<Cost> last;
          for (auto& p : pts) {
            if (p.iteration > it) break;
            last = p.cost;
          }
          if (last) xs.push_back(static_cast<double>(*last));
        }
        if (xs.empty()) continue;
        auto ci = stats::ci99(xs);
        s.curves.push_back({inst, alg, it, ci.mean, ci.lo, ci.hi, xs.size()});
      }
    }
    std::map<std::string, double> means;
    for (auto& [alg, xs] : finals) means[alg] = stats::mean(xs);
    auto rs = relative_solution_cost(means);
    for (auto& [alg, xs] : finals) {
      auto ci = stats::ci99(xs);
      s.rows.push_back({inst, alg, ci.mean, ci.lo, ci.hi, rs[alg], xs.size()});
      rs_lists[alg].push_back(rs[alg]);
      cost_lists[alg].push_back(ci.mean);
    }
    for (auto a = finals.begin(); a != finals.end(); ++a) {
      for (auto b = std::next(a); b != finals.end(); ++b) {
        if (a->second.size() < 2 || b->second.size() < 2) continue;
        s.tests.push_back({inst, a->first, b->first, stats::mean(a->second), stats::mean(b->second),
                           stats::welch_test(a->second, b->second)});
      }
    }
  }
  if (rs_of_means) {
    std::map<std::string, double> avg;
    for (auto& [alg, xs] : cost_lists) avg[alg] = stats::mean(xs);
    s.rs = relative_solution_cost(avg);
  } else {
    for (auto& [alg, xs] : rs_lists) s.rs[alg] = stats::mean(xs);
  }
  return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline void write_summary(const Summary& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream sum;
  sum << "instance,algorithm,mean_final,ci99_lo,ci99_hi,rs\n";
  for (const auto& r : s.rows) {
    sum << r.instance << ',' << r.algorithm << ',' << r.mean_final << ',' << r.ci99_lo << ',' << r.ci99_hi << ','
        << r.rs << '\n';
  }
  write_text(dir / "summary.csv", sum.str());
  std::ostringstream rs;
  rs << "algorithm,rs\n";
  for (const auto& [alg, v] : s.rs) rs << alg << ',' << v << '\n';
  write_text(dir / "rs.csv", rs.str());
  std::ostringstream tests;
  tests << "instance,algorithm_a,algorithm_b,mean_a,mean_b,t,df,p_value\n";
  for (const auto& t : s.tests) {
    tests << t.instance << ',' << t.a << ',' << t.b << ',' << t.mean_a << ',' << t.mean_b << ',' << t.welch.t << ','
          << t.welch.df << ',' << t.welch.p << '\n';
  }
  write_text(dir / "welch.csv", tests.str());
  std::ostringstream curves;
  curves << "instance,algorithm,iteration,mean_cost,ci99_lo,ci99_hi,n\n";
  for (const auto& c : s.curves) {
    curves << c.instance << ',' << c.algorithm << ',' << c.iteration << ',' << c.mean << ',' << c.lo << ',' << c.hi
           << ',' << c.n << '\n';
  }
  write_text(dir / "curves.csv", curves.str());
}

inline std::vector<TraceRow> read_trace_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TraceRow> rows;
  for (const auto& f : files) {
    auto part = read_trace_file(f);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Experiment

struct ExperimentResult {
  std::vector<FinalRow> finals;
  Summary summary;
  std::vector<std::filesystem::path> trace_files;
};

/// Every (instance, algorithm, seed) run writes its own trace file under output/traces.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.check();
  struct Task {
    std::size_t instance;
    std::size_t algorithm;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < cfg.instances.size(); ++i) {
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
      for (auto seed : cfg.seeds) tasks.push_back({i, a, seed});
    }
  }
  const auto trace_dir = cfg.output / "traces";
  std::filesystem::create_directories(trace_dir);

  ExperimentResult result;
  result.finals.resize(tasks.size());
  result.trace_files.resize(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const auto& t = tasks[k];
      const auto& inst = cfg.instances[t.instance];
      const auto& alg = cfg.algorithms[t.algorithm];
      try {
        auto run = solve(inst.instance, alg, t.seed, cfg.iterations);
        auto path = trace_dir / trace_file_name(inst.id, alg.name, t.seed);
        write_text(path, trace_csv(inst.id, alg.name, t.seed, thin(run.trace, cfg.stride)));
        result.trace_files[k] = path;
        result.finals[k] = {inst.id, alg.name, t.seed, run.final_cost};
      } catch (const std::exception& e) {
        errors[k] = inst.id + "/" + alg.name + "/" + std::to_string(t.seed) + ": " + e.what();
      }
    }
  };
  const unsigned jobs = std::max(1u, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error("run failed: " + e);
  }

  std::ostringstream finals;
  finals << "instance,algorithm,seed,final_cost\n";
  for (const auto& f : result.finals) finals << f.instance << ',' << f.algorithm << ',' << f.seed << ',' << f.final_cost << '\n';
  write_text(cfg.output / "finals.csv", finals.str());

  std::vector<TraceRow> rows;
  for (const auto& path : result.trace_files) {
    auto part = read_trace_file(path);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  result.summary = aggregate(rows, cfg.rs_of_means);
  write_summary(result.summary, cfg.output);
  return result;
}

}  // namespace popdcop::exp
