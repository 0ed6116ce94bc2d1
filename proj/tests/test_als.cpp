#include <gtest/gtest.h>

#include "audit.hpp"
#include "support.hpp"

using namespace popdcop;
using namespace testsupport;

namespace {

sim::AgentContext make_context(const DcopInstance& inst, const PseudoTree& tree, AgentId a, std::uint64_t seed = 1) {
  sim::AgentContext ctx;
  ctx.id = a;
  ctx.neighbors = inst.neighbors(a);
  ctx.parent = tree.parent[static_cast<std::size_t>(a)];
  ctx.children = tree.children[static_cast<std::size_t>(a)];
  ctx.level = tree.level[static_cast<std::size_t>(a)];
  ctx.height = tree.height;
  ctx.seed = seed;
  ctx.view = AgentView(inst, a);
  return ctx;
}

DcopInstance two_agents() {
  RawInstance raw;
  raw.agents = 2;
  raw.domains = {2, 2};
  raw.constraints = {{0, 1, CostTable::from_rows({{1, 4}, {4, 1}})}};
  return validate_instance(raw);
}

als::LsMessage values_from(std::int64_t call, std::int64_t tag, Value v) {
  als::LsMessage m;
  m.call = call;
  m.tag = tag;
  m.values = {v};
  return m;
}

als::CallControl plain_call(std::int64_t length, int systems, bool learning = false) {
  als::CallControl c;
  c.length = length;
  c.learning = learning;
  c.temperatures.assign(static_cast<std::size_t>(systems), 0.0);
  return c;
}

}  // namespace

TEST(AlsContribution, LowerIdOwnsTheEdge) {
  auto inst = four_agents();
  const auto a = one_based({1, 2, 1, 2});
  Cost total = 0;
  std::vector<Cost> each;
  for (AgentId i = 0; i < 4; ++i) {
    AgentView view(inst, i);
    std::vector<Value> bank;
    for (AgentId j : inst.neighbors(i)) bank.push_back(a[static_cast<std::size_t>(j)]);
    const std::vector<Value> own = {a[static_cast<std::size_t>(i)]};
    auto c = als::als_contribution(view, own, bank);
    ASSERT_EQ(c.size(), 1u);
    each.push_back(c[0]);
    total += c[0];
  }
  EXPECT_EQ(each[0], 21);
  EXPECT_EQ(each[2], 0);
  EXPECT_EQ(each[3], 0);
  EXPECT_EQ(total, 38);
}

TEST(AlsContribution, SystemMajorBankAndSizeCheck) {
  auto inst = four_agents();
  AgentView view(inst, 0);  // neighbours x2, x3
  const std::vector<Value> own = {0, 1};
  const std::vector<Value> bank = {1, 0, 0, 1};  // system 0: (x2=2, x3=1); system 1: (x2=1, x3=2)
  auto c = als::als_contribution(view, own, bank);
  EXPECT_EQ(c, (std::vector<Cost>{12 + 9, 3 + 5}));
  EXPECT_THROW(als::als_contribution(view, own, std::vector<Value>{0, 1}), std::invalid_argument);
}

TEST(AlsRootTracker, StrictImprovementKeepsTheEarliestTag) {
  als::AlsRootTracker t;
  t.start_call(0, 2);
  auto first = t.finalize(0, std::vector<Cost>{7, 7});
  ASSERT_TRUE(first);
  EXPECT_EQ(first->system, 0);
  EXPECT_FALSE(t.finalize(1, std::vector<Cost>{7, 9}));
  auto better = t.finalize(2, std::vector<Cost>{8, 5});
  ASSERT_TRUE(better);
  EXPECT_EQ(*better, (als::StateTag{0, 1, 2}));
  EXPECT_EQ(t.call_best(), (std::vector<Cost>{7, 5}));
  t.start_call(1, 2);
  EXPECT_EQ(t.meta_best(), 5);
  EXPECT_EQ(t.call_best()[0], als::kNoCost);
  EXPECT_THROW(t.finalize(0, std::vector<Cost>{1}), std::logic_error);
}

TEST(ValueHistory, EvictsOldestBeyondCapacity) {
  als::ValueHistory h(2);
  h.record(0, 0, {1, 2});
  h.record(0, 1, {3, 4});
  h.record(0, 2, {5, 6});
  EXPECT_EQ(h.size(), 2u);
  EXPECT_FALSE(h.lookup({0, 0, 0}));
  EXPECT_EQ(h.lookup({0, 1, 1}), 4);
  EXPECT_EQ(h.lookup({0, 0, 2}), 5);
}

TEST(ParallelLocalSearch, FirstFinalizeAtBarrierTwoHPlusOne) {
  auto inst = four_agents_ptr();
  for (AgentId root : {AgentId{1}, kX4}) {
    sim::EngineOptions opts;
    opts.root = root;
    auto eng = sim::build_engine(inst, baselines::dsan_factory(20, 0, 3), 4, opts);
    const int h = eng.tree().height;
    auto trace = eng.run_phases(als::ls_phase_budget(h, 20));
    ASSERT_TRUE(eng.all_done());
    for (int b = 0; b < 2 * h + 1; ++b) EXPECT_FALSE(trace.records[static_cast<std::size_t>(b)].anytime_cost);
    EXPECT_TRUE(trace.records[static_cast<std::size_t>(2 * h + 1)].anytime_cost);
    // Tags 0..L are finalized on consecutive barriers.
    int reports = 0;
    for (const auto& r : trace.records) reports += r.anytime_cost.has_value();
    EXPECT_EQ(reports, 21);
    EXPECT_EQ(eng.program(root).finalized().size(), 21u);
    EXPECT_EQ(eng.phase(), h + 20 + 1 + 2 * h + 1);
  }
}

TEST(ParallelLocalSearch, GreedyFromTheOptimumStaysThere) {
  auto inst = four_agents_ptr();
  als::LsOptions opts;
  opts.systems = 4;
  opts.initial = one_based({2, 1, 2, 2});
  auto factory = [opts](const sim::AgentContext& ctx) {
    std::unique_ptr<als::CallPlanner> planner;
    if (ctx.is_root()) planner = std::make_unique<FixedCallPlanner>(plain_call(15, 4, true));
    return dpsa::DpsaAgent(ctx, dpsa::AnnealingRule{}, opts, std::move(planner));
  };
  auto eng = sim::build_engine(inst, factory, 2);
  eng.run_phases(als::ls_phase_budget(eng.tree().height, 15));
  const auto& root = eng.program(eng.tree().root);
  EXPECT_EQ(root.tracker().call_best(), (std::vector<Cost>{19, 19, 19, 19}));
  EXPECT_EQ(root.tracker().meta_best(), 19);
  for (AgentId a = 0; a < 4; ++a) EXPECT_EQ(eng.program(a).decision(), (*opts.initial)[static_cast<std::size_t>(a)]);
}

TEST(ParallelLocalSearch, AuditHoldsForParallelBaselines) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto inst = std::make_shared<const DcopInstance>(small_random(300 + s, 9, 4));
    als::LsOptions rec;
    rec.record_states = true;
    auto dsan = audit_ls(inst, baselines::dsan_factory(40, 0, 10, rec), s, 40, 10);
    EXPECT_TRUE(dsan.ok()) << dsan.failure;
    auto dsac = audit_ls(inst, baselines::dsa_c_factory({}, 40, 10, rec), s, 40, 10);
    EXPECT_TRUE(dsac.ok()) << dsac.failure;
    EXPECT_GE(dsac.final_cost, oracle_optimum(*inst));
  }
}

TEST(ParallelLocalSearch, RootRequiresAPlanner) {
  auto inst = four_agents();
  auto tree = build_bfs_tree(inst, 1);
  auto ctx = make_context(inst, tree, 1);
  EXPECT_THROW(dpsa::DpsaAgent(ctx, dpsa::AnnealingRule{}, {}), std::invalid_argument);
}

TEST(ParallelLocalSearch, MissingNeighbourValuesIsAProtocolError) {
  auto inst = two_agents();
  auto tree = build_bfs_tree(inst, 0);
  auto ctx = make_context(inst, tree, 0);
  dpsa::DpsaAgent root(ctx, dpsa::AnnealingRule{}, {}, std::make_unique<FixedCallPlanner>(plain_call(1, 1)));
  std::vector<sim::Envelope<als::LsMessage>> none;
  sim::Outbox<als::LsMessage> o0(ctx, 0), o1(ctx, 1), o2(ctx, 2);
  root.step(ctx, 0, none, o0);
  ASSERT_EQ(o0.sent().size(), 1u);
  EXPECT_TRUE(o0.sent()[0].payload.control);
  root.step(ctx, 1, none, o1);
  EXPECT_THROW(root.step(ctx, 2, none, o2), sim::ProtocolError);
}

TEST(ParallelLocalSearch, MissingChildSumIsAProtocolError) {
  auto inst = two_agents();
  auto tree = build_bfs_tree(inst, 0);
  auto ctx = make_context(inst, tree, 0);
  dpsa::DpsaAgent root(ctx, dpsa::AnnealingRule{}, {}, std::make_unique<FixedCallPlanner>(plain_call(1, 1)));
  std::vector<sim::Envelope<als::LsMessage>> none;
  sim::Outbox<als::LsMessage> o0(ctx, 0), o1(ctx, 1), o2(ctx, 2), o3(ctx, 3);
  root.step(ctx, 0, none, o0);
  root.step(ctx, 1, none, o1);
  std::vector<sim::Envelope<als::LsMessage>> tag0 = {{1, 0, 1, values_from(0, 0, 1)}};
  root.step(ctx, 2, tag0, o2);
  std::vector<sim::Envelope<als::LsMessage>> tag1 = {{1, 0, 2, values_from(0, 1, 1)}};
  EXPECT_THROW(root.step(ctx, 3, tag1, o3), sim::ProtocolError);
}

TEST(ParallelLocalSearch, WireSizeGrowsWithSystems) {
  als::LsMessage m;
  m.values = {1, 2, 3};
  m.up = als::AlsUp{0, 0, {1, 2, 3}};
  EXPECT_EQ(als::value_payload_bytes(m), 12u);
  EXPECT_EQ(als::als_payload_bytes(m), 24u);
  EXPECT_EQ(als::wire_size(m), 16u + 12u + 24u + 16u);
}
