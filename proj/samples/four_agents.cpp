// Builds the four-agent example, prints its optimum and what AED and DPSA find.
#include <iostream>
#include <memory>

#include "popdcop/popdcop.hpp"

using namespace popdcop;

int main() {
  RawInstance raw;
  raw.agents = 4;
  raw.domains = {2, 2, 2, 2};
  raw.constraints = {
      {0, 1, CostTable::from_rows({{7, 12}, {3, 15}})},
      {1, 2, CostTable::from_rows({{2, 7}, {11, 18}})},
      {1, 3, CostTable::from_rows({{8, 4}, {15, 6}})},
      {0, 2, CostTable::from_rows({{9, 13}, {12, 5}})},
  };
  auto inst = std::make_shared<const DcopInstance>(validate_instance(raw));

  auto [best, cost] = brute_force_optimum(*inst);
  std::cout << "optimum " << cost << " at";
  for (Value v : best) std::cout << ' ' << v + 1;
  std::cout << "\n";

  exp::AlgorithmSpec aed{"AED", exp::AedSpec{}};
  exp::AlgorithmSpec dpsa{"DPSA", exp::DpsaSpec{}};
  for (const auto& spec : {aed, dpsa}) {
    auto run = exp::solve(inst, spec, 7, 50);
    std::cout << spec.name << " final " << run.final_cost << " after " << run.trace.size() << " trace points\n";
  }
}
