// Small random-DCOP comparison of every solver, printed as a summary table.
#include <iomanip>
#include <iostream>
#include <memory>
#include <vector>

#include "popdcop/popdcop.hpp"

using namespace popdcop;

int main(int argc, char** argv) {
  const int seeds = argc > 1 ? std::stoi(argv[1]) : 5;
  const std::int64_t iterations = 300;
  auto inst = std::make_shared<const DcopInstance>(benchgen::gen_random_dcop(30, 0.3, 10, 1, 100, 11));

  dpsa::DpsaParams gb;
  gb.gb.enabled = true;
  gb.call_length = 25;
  std::vector<exp::AlgorithmSpec> algs{
      {"AED", exp::AedSpec{}},
      {"DPSA_CE", exp::DpsaSpec{}},
      {"DPSA_GB", exp::DpsaSpec{gb}},
      {"DSA-C", exp::DsaCSpec{}},
      {"DSAN", exp::DsanSpec{}},
  };

  std::cout << std::left << std::setw(10) << "algorithm" << "mean final cost\n";
  for (const auto& a : algs) {
    std::vector<double> finals;
    for (int s = 1; s <= seeds; ++s) finals.push_back(static_cast<double>(exp::solve(inst, a, s, iterations).final_cost));
    std::cout << std::setw(10) << a.name << stats::mean(finals) << "\n";
  }
}
