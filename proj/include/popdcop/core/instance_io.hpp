#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "popdcop/core/model.hpp"

namespace popdcop {

inline nlohmann::json to_json(const DcopInstance& inst) {
  nlohmann::json j;
  j["agents"] = inst.agent_count();
  j["domains"] = inst.domains();
  auto cons = nlohmann::json::array();
  for (const auto& c : inst.constraints()) {
    auto rows = nlohmann::json::array();
    for (int r = 0; r < c.table.rows; ++r) {
      auto row = nlohmann::json::array();
      for (int col = 0; col < c.table.cols; ++col) row.push_back(c.table.at(r, col));
      rows.push_back(std::move(row));
    }
    cons.push_back({{"i", c.i}, {"j", c.j}, {"table", std::move(rows)}});
  }
  j["constraints"] = std::move(cons);
  if (inst.global_cap()) j["global_cap"] = {{"cap", inst.global_cap()->cap}, {"penalty", inst.global_cap()->penalty}};
  j["meta"] = {{"generator", inst.meta().generator}, {"seed", inst.meta().seed}, {"params", inst.meta().params}};
  return j;
}

inline RawInstance raw_from_json(const nlohmann::json& j) {
  RawInstance raw;
  try {
    raw.agents = j.at("agents").get<int>();
    raw.domains = j.at("domains").get<std::vector<int>>();
    for (const auto& c : j.at("constraints")) {
      Constraint con;
      con.i = c.at("i").get<int>();
      con.j = c.at("j").get<int>();
      con.table = CostTable::from_rows(c.at("table").get<std::vector<std::vector<Cost>>>());
      raw.constraints.push_back(std::move(con));
    }
    if (j.contains("global_cap") && !j.at("global_cap").is_null()) {
      const auto& g = j.at("global_cap");
      raw.global_cap = GlobalCapConstraint{g.at("cap").get<int>(), g.at("penalty").get<Cost>()};
    }
    if (j.contains("meta")) {
      const auto& m = j.at("meta");
      raw.meta.generator = m.value("generator", std::string{});
      raw.meta.seed = m.value("seed", std::uint64_t{0});
      raw.meta.params = m.value("params", nlohmann::json::object());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InstanceError(std::string("malformed instance document: ") + e.what());
  }
  return raw;
}

inline DcopInstance instance_from_json(const nlohmann::json& j) { return validate_instance(raw_from_json(j)); }

inline std::string dump_instance(const DcopInstance& inst) { return to_json(inst).dump() + "\n"; }

inline DcopInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InstanceError("cannot open instance file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InstanceError("cannot parse " + path + ": " + e.what());
  }
  return instance_from_json(j);
}

inline void save_instance(const DcopInstance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << dump_instance(inst);
}

}  // namespace popdcop
