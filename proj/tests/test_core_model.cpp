#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "support.hpp"

using namespace popdcop;
using namespace testsupport;

TEST(Validate, AcceptsFourAgentExample) {
  auto inst = four_agents();
  EXPECT_EQ(inst.agent_count(), 4);
  EXPECT_EQ(inst.constraints().size(), 4u);
  EXPECT_EQ(inst.neighbors(1), (std::vector<AgentId>{0, 2, 3}));
}

TEST(Validate, RejectsShapeMismatch) {
  RawInstance raw;
  raw.agents = 2;
  raw.domains = {2, 2};
  raw.constraints = {{0, 1, CostTable::from_rows({{1, 2, 3}, {4, 5, 6}})}};
  EXPECT_THROW(validate_instance(raw), InstanceError);
}

TEST(Validate, RejectsDisconnectedGraph) {
  RawInstance raw;
  raw.agents = 2;
  raw.domains = {2, 2};
  EXPECT_THROW(validate_instance(raw), InstanceError);
}

TEST(Validate, RejectsDuplicatePairInEitherOrientation) {
  auto raw = four_agent_raw();
  raw.constraints.push_back({1, 0, CostTable(2, 2)});
  EXPECT_THROW(validate_instance(raw), InstanceError);
}

TEST(Validate, RejectsBadAgentsDomainsAndCosts) {
  auto empty_domain = four_agent_raw();
  empty_domain.domains[2] = 0;
  EXPECT_THROW(validate_instance(empty_domain), InstanceError);

  auto self_loop = four_agent_raw();
  self_loop.constraints.push_back({2, 2, CostTable(2, 2)});
  EXPECT_THROW(validate_instance(self_loop), InstanceError);

  auto unknown = four_agent_raw();
  unknown.constraints.push_back({0, 9, CostTable(2, 2)});
  EXPECT_THROW(validate_instance(unknown), InstanceError);

  auto negative = four_agent_raw();
  negative.constraints[0].table.at(0, 0) = -1;
  EXPECT_THROW(validate_instance(negative), InstanceError);

  auto bad_cap = four_agent_raw();
  bad_cap.global_cap = GlobalCapConstraint{-1, 5};
  EXPECT_THROW(validate_instance(bad_cap), InstanceError);
}

TEST(GlobalCost, WorkedExampleValues) {
  auto inst = four_agents();
  EXPECT_EQ(evaluate_global_cost(inst, one_based({1, 2, 1, 2})), 38);
  EXPECT_EQ(evaluate_global_cost(inst, one_based({1, 2, 2, 2})), 49);
}

TEST(GlobalCost, AllZeroTablesCostNothing) {
  auto raw = four_agent_raw();
  for (auto& c : raw.constraints) std::fill(c.table.cells.begin(), c.table.cells.end(), 0);
  auto inst = validate_instance(raw);
  EXPECT_EQ(evaluate_global_cost(inst, one_based({2, 1, 2, 1})), 0);
}

TEST(GlobalCost, RejectsIncompleteAssignment) {
  auto inst = four_agents();
  EXPECT_THROW(evaluate_global_cost(inst, Assignment{0, 1, kUnassigned, 0}), std::invalid_argument);
  EXPECT_THROW(evaluate_global_cost(inst, Assignment{0, 1}), std::invalid_argument);
}

TEST(GlobalCost, MinimumOverAllSixteenAssignments) {
  auto inst = four_agents();
  Cost best = std::numeric_limits<Cost>::max();
  Assignment arg;
  for (int x1 = 1; x1 <= 2; ++x1)
    for (int x2 = 1; x2 <= 2; ++x2)
      for (int x3 = 1; x3 <= 2; ++x3)
        for (int x4 = 1; x4 <= 2; ++x4) {
          auto a = one_based({x1, x2, x3, x4});
          if (oracle_cost(inst, a) < best) {
            best = oracle_cost(inst, a);
            arg = a;
          }
        }
  EXPECT_EQ(best, 19);
  EXPECT_EQ(arg, one_based({2, 1, 2, 2}));
  EXPECT_EQ(evaluate_global_cost(inst, arg), 19);
}

TEST(LocalCost, AgentThreeExamples) {
  auto inst = four_agents();
  // a3's neighbours in link order are x1, x2.
  const std::vector<Value> nbr = {0, 1};
  EXPECT_EQ(local_cost(inst, 2, 0, nbr), 20);
  EXPECT_EQ(local_cost(inst, 2, 1, nbr), 31);
}

TEST(LocalCost, ZeroTablesAndSizeCheck) {
  auto raw = four_agent_raw();
  for (auto& c : raw.constraints) std::fill(c.table.cells.begin(), c.table.cells.end(), 0);
  auto inst = validate_instance(raw);
  EXPECT_EQ(local_cost(inst, 1, 1, std::vector<Value>{0, 1, 0}), 0);
  EXPECT_THROW(local_cost(inst, 1, 1, std::vector<Value>{0, 1}), std::invalid_argument);
}

TEST(DeltaLocalCost, WorkedExampleAndIdentity) {
  auto inst = four_agents();
  const std::vector<Value> nbr = {0, 1};
  EXPECT_EQ(delta_local_cost(inst, 2, 1, 0, nbr), -11);
  EXPECT_EQ(delta_local_cost(inst, 2, 1, 1, nbr), 0);
}

TEST(DeltaLocalCost, CapPenaltyDeltaAddsOnCrowdedValue) {
  auto raw = four_agent_raw();
  raw.global_cap = GlobalCapConstraint{2, 500};
  auto inst = validate_instance(raw);
  // x3 leaves value 1 and joins x1, x2 on value 0.
  const Assignment before = {0, 0, 1, 1};
  auto hist = value_histogram(inst, before);
  const std::vector<Value> nbr = {before[0], before[1]};
  const Cost table_delta = local_cost(inst, 2, 0, nbr) - local_cost(inst, 2, 1, nbr);
  Assignment after = before;
  after[2] = 0;
  EXPECT_EQ(oracle_cost(inst, after) - oracle_cost(inst, before), table_delta + 500);
  EXPECT_EQ(delta_local_cost(inst, 2, 1, 0, nbr, &hist), table_delta + 500);
  EXPECT_EQ(delta_local_cost(inst, 2, 1, 0, nbr), table_delta);
}

TEST(BruteForce, FindsWorkedExampleOptimum) {
  auto [a, c] = brute_force_optimum(four_agents());
  EXPECT_EQ(c, 19);
  EXPECT_EQ(a, one_based({2, 1, 2, 2}));
}

TEST(BruteForce, TwoAgentAntiDiagonal) {
  RawInstance raw;
  raw.agents = 2;
  raw.domains = {2, 2};
  raw.constraints = {{0, 1, CostTable::from_rows({{0, 5}, {5, 0}})}};
  auto [a, c] = brute_force_optimum(validate_instance(raw));
  EXPECT_EQ(c, 0);
  EXPECT_EQ(a, (Assignment{0, 0}));
}

TEST(BruteForce, CappedExamplePaysPenalty) {
  auto raw = four_agent_raw();
  raw.global_cap = GlobalCapConstraint{1, 500};
  auto inst = validate_instance(raw);
  auto [a, c] = brute_force_optimum(inst);
  EXPECT_GE(c, 1000);
  EXPECT_EQ(c, oracle_optimum(inst));
  EXPECT_EQ(evaluate_global_cost(inst, a), c);
}

TEST(BruteForce, RefusesHugeSpaces) {
  auto inst = benchgen::gen_random_dcop(30, 0.3, 10, 1, 100, 1);
  EXPECT_THROW(brute_force_optimum(inst), std::length_error);
}

TEST(CostProperties, GlobalEqualsHalfLocalSumPlusPenalty) {
  std::mt19937_64 rng(7);
  for (std::uint64_t s = 0; s < 40; ++s) {
    auto inst = small_random(s, 7, 4, s % 2 == 0);
    for (int t = 0; t < 50; ++t) {
      auto a = random_assignment(inst, rng);
      Cost sum = 0;
      for (AgentId i = 0; i < inst.agent_count(); ++i) sum += AgentView(inst, i).local_cost_in(a[static_cast<std::size_t>(i)], a);
      ASSERT_EQ(sum % 2, 0);
      Cost penalty = inst.global_cap() ? cap_penalty(*inst.global_cap(), value_histogram(inst, a)) : 0;
      EXPECT_EQ(evaluate_global_cost(inst, a), sum / 2 + penalty);
      EXPECT_EQ(evaluate_global_cost(inst, a), oracle_cost(inst, a));
    }
  }
}

TEST(CostProperties, DeltaMatchesDifferenceAndOptimumIsLowest) {
  std::mt19937_64 rng(11);
  for (std::uint64_t s = 0; s < 30; ++s) {
    auto inst = small_random(100 + s, 6, 4, s % 3 == 0);
    const Cost opt = brute_force_optimum(inst).second;
    EXPECT_EQ(opt, oracle_optimum(inst));
    for (int t = 0; t < 30; ++t) {
      auto a = random_assignment(inst, rng);
      EXPECT_LE(opt, evaluate_global_cost(inst, a));
      std::uniform_int_distribution<AgentId> who(0, inst.agent_count() - 1);
      const AgentId i = who(rng);
      std::uniform_int_distribution<Value> v(0, inst.domain_size(i) - 1);
      const Value nv = v(rng);
      std::vector<Value> nbr;
      for (AgentId j : inst.neighbors(i)) nbr.push_back(a[static_cast<std::size_t>(j)]);
      const Value old = a[static_cast<std::size_t>(i)];
      EXPECT_EQ(delta_local_cost(inst, i, old, nv, nbr), local_cost(inst, i, nv, nbr) - local_cost(inst, i, old, nbr));
      auto hist = value_histogram(inst, a);
      Assignment b = a;
      b[static_cast<std::size_t>(i)] = nv;
      EXPECT_EQ(delta_local_cost(inst, i, old, nv, nbr, &hist), oracle_cost(inst, b) - oracle_cost(inst, a));
    }
  }
}

TEST(InstanceIo, JsonRoundTrip) {
  auto raw = four_agent_raw();
  raw.global_cap = GlobalCapConstraint{2, 100};
  raw.meta.generator = "handmade";
  raw.meta.seed = 42;
  auto inst = validate_instance(raw);
  auto back = instance_from_json(to_json(inst));
  EXPECT_EQ(back.constraints(), inst.constraints());
  EXPECT_EQ(back.domains(), inst.domains());
  EXPECT_EQ(back.global_cap(), inst.global_cap());
  EXPECT_EQ(back.meta().generator, "handmade");
  EXPECT_EQ(back.meta().seed, 42u);
  EXPECT_EQ(dump_instance(back), dump_instance(inst));
}

TEST(InstanceIo, FileRoundTripAndErrors) {
  const auto path = std::filesystem::temp_directory_path() / "popdcop_io_test.json";
  save_instance(four_agents(), path.string());
  EXPECT_EQ(dump_instance(load_instance(path.string())), dump_instance(four_agents()));
  std::filesystem::remove(path);
  EXPECT_THROW(load_instance((path.string() + ".missing")), InstanceError);
  EXPECT_THROW(instance_from_json(nlohmann::json{{"agents", 2}}), InstanceError);
}
