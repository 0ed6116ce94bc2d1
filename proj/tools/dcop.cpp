#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "popdcop/popdcop.hpp"

namespace fs = std::filesystem;
using namespace popdcop;

namespace {

struct GenerateArgs {
  std::string family;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<int> n, domain, rows, cols, positions, m0, m, colors, cap;
  std::optional<double> density;
  std::optional<Cost> cost_lo, cost_hi, cap_penalty;
};

int cmd_generate(const GenerateArgs& a) {
  nlohmann::json p = nlohmann::json::object();
  auto put = [&](const char* key, const auto& v) {
    if (v) p[key] = *v;
  };
  put("n", a.n);
  put("domain", a.domain);
  put("rows", a.rows);
  put("cols", a.cols);
  put("positions", a.positions);
  put("m0", a.m0);
  put("m", a.m);
  put("colors", a.colors);
  put("density", a.density);
  if (a.family == "sensor_grid") {
    put("util_lo", a.cost_lo);
    put("util_hi", a.cost_hi);
  } else if (a.family == "coloring") {
    put("penalty_lo", a.cost_lo);
    put("penalty_hi", a.cost_hi);
  } else {
    put("cost_lo", a.cost_lo);
    put("cost_hi", a.cost_hi);
  }
  if (a.cap) p["global_cap"] = {{"cap", *a.cap}, {"penalty", a.cap_penalty.value_or(500)}};
  auto inst = benchgen::generate({a.family, p, a.seed});
  if (a.out.empty() || a.out == "-") {
    std::cout << dump_instance(inst);
  } else {
    save_instance(inst, a.out);
    std::cerr << "wrote " << a.out << " (" << inst.agent_count() << " agents, " << inst.constraints().size()
              << " constraints)\n";
  }
  return 0;
}

int cmd_run(const std::string& config_path, std::optional<unsigned> jobs, std::optional<std::int64_t> stride,
            bool beta_sweep, const std::string& output) {
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open config " + config_path);
  auto j = nlohmann::json::parse(in);
  if (beta_sweep) j["beta_sweep"] = true;
  auto cfg = exp::config_from_json(j, fs::path(config_path).parent_path());
  if (jobs) cfg.jobs = *jobs;
  if (stride) cfg.stride = *stride;
  if (!output.empty()) cfg.output = output;
  auto result = exp::run_experiment(cfg);
  std::cerr << "ran " << result.finals.size() << " runs into " << cfg.output.string() << "\n";
  for (const auto& [alg, rs] : result.summary.rs) std::cout << alg << " RS " << rs << "\n";
  return 0;
}

int cmd_compare(const std::string& traces, const std::string& out, bool rs_of_means) {
  auto summary = exp::aggregate(exp::read_trace_dir(traces), rs_of_means);
  const fs::path dir = out.empty() ? fs::path(traces).parent_path() : fs::path(out);
  exp::write_summary(summary, dir);
  std::cout << "instance,algorithm,mean_final,ci99_lo,ci99_hi,rs\n";
  for (const auto& r : summary.rows) {
    std::cout << r.instance << ',' << r.algorithm << ',' << r.mean_final << ',' << r.ci99_lo << ',' << r.ci99_hi
              << ',' << r.rs << '\n';
  }
  return 0;
}

int cmd_export(const std::string& format, const std::string& traces, const std::string& out) {
  if (format != "csv") throw std::invalid_argument("only csv export is supported");
  auto rows = exp::read_trace_dir(traces);
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out.empty() && out != "-") {
    file.open(out, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + out);
    os = &file;
  }
  *os << exp::kTraceHeader << '\n';
  for (const auto& r : rows) {
    *os << r.instance << ',' << r.algorithm << ',' << r.seed << ',' << r.iteration << ',' << r.cost << '\n';
  }
  return 0;
}

int cmd_solve(const std::string& instance_path, const std::string& algorithm, std::uint64_t seed,
              std::int64_t iterations, const std::string& trace_out) {
  auto inst = std::make_shared<const DcopInstance>(load_instance(instance_path));
  nlohmann::json j{{"type", algorithm}};
  if (algorithm == "dpsa_gb") j = {{"type", "dpsa"}, {"gb", {{"enabled", true}}}};
  auto spec = exp::algorithm_from_json(j);
  spec.name = algorithm;
  auto run = exp::solve(inst, spec, seed, iterations);
  const auto id = fs::path(instance_path).stem().string();
  if (!trace_out.empty()) exp::write_text(trace_out, exp::trace_csv(id, spec.name, seed, run.trace));
  std::cout << "final_cost " << run.final_cost << "\nassignment";
  for (Value v : run.assignment) std::cout << ' ' << v;
  std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population-based DCOP solvers: generators, solvers and experiment harness"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a benchmark instance");
  g->add_option("--family", gen.family, "random | sensor_grid | scale_free | coloring | target_tracking")->required();
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("--out", gen.out, "Output path (stdout when omitted)");
  g->add_option("--n", gen.n, "Agent count");
  g->add_option("--density", gen.density, "Edge probability");
  g->add_option("--domain", gen.domain, "Domain size");
  g->add_option("--cost-lo", gen.cost_lo, "Lowest cost (utility, penalty)");
  g->add_option("--cost-hi", gen.cost_hi, "Highest cost (utility, penalty)");
  g->add_option("--rows", gen.rows, "Grid rows");
  g->add_option("--cols", gen.cols, "Grid columns");
  g->add_option("--positions", gen.positions, "Positions per cell");
  g->add_option("--m0", gen.m0, "Scale-free seed tree size");
  g->add_option("--m", gen.m, "Scale-free links per new agent");
  g->add_option("--colors", gen.colors, "Colour count");
  g->add_option("--cap", gen.cap, "Global cap: agents per colour");
  g->add_option("--cap-penalty", gen.cap_penalty, "Global cap: penalty per extra agent");

  std::string config, run_output;
  std::optional<unsigned> jobs;
  std::optional<std::int64_t> stride;
  bool beta_sweep = false;
  auto* r = app.add_subcommand("run", "Run an experiment grid from a JSON config");
  r->add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
  r->add_option("--jobs", jobs, "Concurrent runs");
  r->add_option("--stride", stride, "Keep every n-th trace point");
  r->add_option("--output", run_output, "Override the output directory");
  r->add_flag("--beta-sweep", beta_sweep, "Expand every AED entry into beta = 1..12");

  std::string traces, compare_out;
  bool rs_of_means = false;
  auto* c = app.add_subcommand("compare", "Summarize a directory of trace files");
  c->add_option("--traces", traces, "Trace directory")->required()->check(CLI::ExistingDirectory);
  c->add_option("--out", compare_out, "Summary directory (default: parent of the trace directory)");
  c->add_flag("--rs-of-means", rs_of_means, "RS from instance-averaged costs instead of averaged per-instance RS");

  std::string format = "csv", export_traces, export_out;
  auto* e = app.add_subcommand("export", "Concatenate trace files into one CSV");
  e->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv"}));
  e->add_option("--traces", export_traces, "Trace directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--out", export_out, "Output file (stdout when omitted)");

  std::string instance_path, algorithm = "aed", trace_out;
  std::uint64_t seed = 1;
  std::int64_t iterations = 500;
  auto* s = app.add_subcommand("solve", "Solve one instance with one algorithm");
  s->add_option("--instance", instance_path, "Instance file")->required()->check(CLI::ExistingFile);
  s->add_option("--algorithm", algorithm, "aed | dpsa | dpsa_gb | dsa_c | dsan")
      ->check(CLI::IsMember({"aed", "dpsa", "dpsa_gb", "dsa_c", "dsan"}));
  s->add_option("--seed", seed, "Run seed");
  s->add_option("--iterations", iterations, "Iteration budget");
  s->add_option("--trace", trace_out, "Write the anytime trace here");

  CLI11_PARSE(app, argc, argv);
  try {
    if (g->parsed()) return cmd_generate(gen);
    if (r->parsed()) return cmd_run(config, jobs, stride, beta_sweep, run_output);
    if (c->parsed()) return cmd_compare(traces, compare_out, rs_of_means);
    if (e->parsed()) return cmd_export(format, export_traces, export_out);
    if (s->parsed()) return cmd_solve(instance_path, algorithm, seed, iterations, trace_out);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
