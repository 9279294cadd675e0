#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgefair/model.hpp"

namespace edgefair {

/// Parses and validates a model document:
/// {"variables":[{"name":..,"domain":[..]}], "edges":[["from","to"]],
///  "sensitive":[..], "cpts":{"<name>":{"parents":[..],"table":[[..]]}}}
/// Table rows are mixed-radix over `parents` with the first parent as the
/// most significant digit.
inline CausalModel load_model(const std::string& document) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model document is not valid JSON: ") +
                     e.what());
  }
  try {
    std::vector<Variable> variables;
    for (const auto& v : j.at("variables")) {
      Variable var;
      var.name = v.at("name").get<std::string>();
      for (const auto& d : v.at("domain")) {
        var.domain.push_back(d.get<std::string>());
      }
      variables.push_back(std::move(var));
    }
    std::vector<EdgeId> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) {
        throw ParseError("each edge must be a [from,to] pair");
      }
      edges.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
    }
    std::set<std::string> sensitive;
    for (const auto& s : j.at("sensitive")) {
      sensitive.insert(s.get<std::string>());
    }
    std::vector<Cpt> cpts;
    for (const auto& [child, spec] : j.at("cpts").items()) {
      Cpt cpt;
      cpt.child = child;
      for (const auto& p : spec.at("parents")) {
        cpt.parent_order.push_back(p.get<std::string>());
      }
      for (const auto& row : spec.at("table")) {
        cpt.table.push_back(row.get<std::vector<double>>());
      }
      cpts.push_back(std::move(cpt));
    }
    return CausalModel::make(std::move(variables), std::move(edges),
                             std::move(cpts), std::move(sensitive));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model document is malformed: ") + e.what());
  }
}

inline nlohmann::json model_to_json(const CausalModel& model) {
  nlohmann::json j;
  j["variables"] = nlohmann::json::array();
  for (int i = 0; i < model.num_variables(); ++i) {
    const auto& v = model.variable(i);
    j["variables"].push_back({{"name", v.name}, {"domain", v.domain}});
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : model.edges()) {
    j["edges"].push_back({e.from, e.to});
  }
  j["sensitive"] = model.sensitive_names();
  j["cpts"] = nlohmann::json::object();
  for (int i = 0; i < model.num_variables(); ++i) {
    const auto& cpt = model.cpt(i);
    j["cpts"][cpt.child] = {{"parents", cpt.parent_order},
                            {"table", cpt.table}};
  }
  return j;
}

inline std::string save_model(const CausalModel& model) {
  return model_to_json(model).dump(2);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline CausalModel load_model_file(const std::string& path) {
  return load_model(read_file(path));
}

}  // namespace edgefair
