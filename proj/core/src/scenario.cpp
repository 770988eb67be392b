#include "gexpect/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gexpect {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  fail(ErrorCode::ScenarioInvalid, where + ": " + what);
}

std::vector<double> number_array(const json& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) bad(where, "expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

DriverSpec parse_driver_spec(const json& j, const std::string& where) {
  DriverSpec d;
  if (j.is_string()) {
    d.type = j.get<std::string>();
    return d;
  }
  if (!j.is_object() || !j.contains("type")) bad(where, "driver needs a type");
  d.type = j["type"].get<std::string>();
  if (j.contains("a")) d.a = j["a"].get<double>();
  if (j.contains("r")) d.r_ref = j["r"].is_string() ? j["r"].get<std::string>() : j["r"].dump();
  if (j.contains("theta")) d.theta = number_array(j["theta"], where + ".theta");
  if (j.contains("values")) {
    for (const auto& row : j["values"]) d.table.push_back(number_array(row, where + ".values"));
  }
  return d;
}

OracleSpec parse_oracle_spec(const json& j, const std::string& where) {
  OracleSpec o;
  if (j.is_string()) {
    o.type = j.get<std::string>();
    return o;
  }
  if (!j.is_object() || !j.contains("type")) bad(where, "oracle needs a type");
  o.type = j["type"].get<std::string>();
  if (j.contains("driver")) o.driver_ref = j["driver"].get<std::string>();
  if (j.contains("r")) o.r_ref = j["r"].is_string() ? j["r"].get<std::string>() : j["r"].dump();
  if (j.contains("sign")) o.sign = j["sign"].get<int>();
  if (j.contains("command")) o.command = j["command"].get<std::string>();
  if (j.contains("file")) o.file = j["file"].get<std::string>();
  if (j.contains("weights")) {
    for (const auto& [node, row] : j["weights"].items())
      o.weights[node] = number_array(row, where + ".weights." + node);
  }
  if (j.contains("measures")) {
    for (const auto& row : j["measures"])
      o.measures.push_back(number_array(row, where + ".measures"));
  }
  return o;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    bad("scenario", std::string("not valid JSON: ") + e.what());
  }
  Scenario sc;
  sc.schema = j.value("schema", 1);
  if (sc.schema != 1) bad("schema", "unsupported schema version");

  if (!j.contains("times") || !j.contains("mu") || !j.contains("nodes"))
    bad("scenario", "times, mu and nodes are required");
  sc.space.times = number_array(j["times"], "times");
  sc.space.mu = number_array(j["mu"], "mu");
  for (const auto& n : j["nodes"]) {
    SpaceSpec::NodeSpec ns;
    if (!n.contains("id")) bad("nodes", "a node lacks an id");
    ns.id = n["id"].get<std::string>();
    if (n.contains("parent") && !n["parent"].is_null())
      ns.parent = n["parent"].get<std::string>();
    if (n.contains("p") && !n["p"].is_null()) ns.p = n["p"].get<double>();
    sc.space.nodes.push_back(std::move(ns));
  }
  if (j.contains("payoffs"))
    for (const auto& [name, row] : j["payoffs"].items())
      sc.payoffs[name] = number_array(row, "payoffs." + name);
  if (j.contains("drivers"))
    for (const auto& [name, spec] : j["drivers"].items())
      sc.drivers[name] = parse_driver_spec(spec, "drivers." + name);
  if (j.contains("rmatrices"))
    for (const auto& [name, spec] : j["rmatrices"].items()) sc.rmatrices[name] = spec.dump();
  if (j.contains("oracles"))
    for (const auto& [name, spec] : j["oracles"].items())
      sc.oracles[name] = parse_oracle_spec(spec, "oracles." + name);
  if (j.contains("processes"))
    for (const auto& [name, rows] : j["processes"].items()) {
      std::vector<std::vector<double>> levels;
      for (const auto& row : rows) levels.push_back(number_array(row, "processes." + name));
      sc.processes[name] = std::move(levels);
    }
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ScenarioInvalid, "cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Workspace::Workspace(const Scenario& scenario)
    : scenario_(scenario), space_(std::make_unique<FilteredSpace>(build_space(scenario.space))) {
  basis_ = davis_varaiya_basis(*space_);
}

RandomVariable Workspace::payoff(const std::string& name) const {
  const auto it = scenario_.payoffs.find(name);
  if (it == scenario_.payoffs.end())
    fail(ErrorCode::ScenarioInvalid, "payoff '" + name + "' is not defined in the scenario");
  if (static_cast<int>(it->second.size()) != space_->atoms())
    fail(ErrorCode::ScenarioInvalid, "payoff '" + name + "' has the wrong width");
  return RandomVariable{space_->steps(), it->second};
}

AdaptedProcess Workspace::process(const std::string& name) const {
  const auto it = scenario_.processes.find(name);
  if (it == scenario_.processes.end())
    fail(ErrorCode::ScenarioInvalid, "process '" + name + "' is not defined in the scenario");
  if (static_cast<int>(it->second.size()) != space_->steps() + 1)
    fail(ErrorCode::ScenarioInvalid, "process '" + name + "' needs one row per level");
  AdaptedProcess y;
  for (int k = 0; k <= space_->steps(); ++k) {
    if (static_cast<int>(it->second[k].size()) != space_->node_count(k))
      fail(ErrorCode::ScenarioInvalid,
           "process '" + name + "' row " + std::to_string(k) + " has the wrong width");
    y.at.push_back(RandomVariable{k, it->second[k]});
  }
  return y;
}

RMatrix Workspace::rmatrix(const std::string& ref) const {
  std::string text = ref;
  const auto it = scenario_.rmatrices.find(ref);
  if (it != scenario_.rmatrices.end()) text = it->second;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception&) {
    fail(ErrorCode::ScenarioInvalid,
         "r reference '" + ref + "' is neither a named rmatrix nor a literal");
  }
  if (j.is_number()) return RMatrix::scalar(j.get<double>());
  if (j.is_object() && j.contains("diag"))
    return RMatrix::diagonal(number_array(j["diag"], "rmatrix.diag"));
  if (j.is_object() && j.contains("by_step")) {
    auto steps = number_array(j["by_step"], "rmatrix.by_step");
    if (static_cast<int>(steps.size()) != space_->steps())
      fail(ErrorCode::ScenarioInvalid, "by_step rmatrix needs one value per step");
    return RMatrix::by_step(std::move(steps));
  }
  if (j.is_object() && j.contains("dense")) {
    std::vector<double> flat;
    int dim = 0;
    for (const auto& row : j["dense"]) {
      const auto r = number_array(row, "rmatrix.dense");
      if (dim == 0) dim = static_cast<int>(r.size());
      if (static_cast<int>(r.size()) != dim)
        fail(ErrorCode::ScenarioInvalid, "dense rmatrix must be square");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    if (static_cast<int>(flat.size()) != dim * dim)
      fail(ErrorCode::ScenarioInvalid, "dense rmatrix must be square");
    return RMatrix::dense(dim, std::move(flat));
  }
  fail(ErrorCode::ScenarioInvalid, "unrecognised rmatrix form '" + ref + "'");
}

Driver Workspace::driver(const std::string& name) const {
  const auto it = scenario_.drivers.find(name);
  if (it == scenario_.drivers.end())
    fail(ErrorCode::ScenarioInvalid, "driver '" + name + "' is not defined in the scenario");
  const DriverSpec& spec = it->second;
  if (spec.type == "zero") return zero_driver();
  if (spec.type == "linear_y") return linear_y_driver(spec.a);
  if (spec.type == "r_norm") return r_norm_driver(basis_, rmatrix(spec.r_ref), +1);
  if (spec.type == "neg_r_norm") return r_norm_driver(basis_, rmatrix(spec.r_ref), -1);
  if (spec.type == "linear_z") return linear_z_driver(basis_, spec.theta);
  if (spec.type == "table") return table_driver(*space_, spec.table);
  fail(ErrorCode::ScenarioInvalid, "unknown driver type '" + spec.type + "'");
}

std::optional<std::string> Workspace::driver_r_ref(const std::string& name) const {
  const auto it = scenario_.drivers.find(name);
  if (it == scenario_.drivers.end() || it->second.r_ref.empty()) return std::nullopt;
  return it->second.r_ref;
}

const ExpectationOracle& Workspace::oracle(const std::string& name) {
  const auto cached = oracle_cache_.find(name);
  if (cached != oracle_cache_.end()) return *cached->second;
  const auto it = scenario_.oracles.find(name);
  if (it == scenario_.oracles.end())
    fail(ErrorCode::ScenarioInvalid, "oracle '" + name + "' is not defined in the scenario");
  const OracleSpec& spec = it->second;
  std::unique_ptr<ExpectationOracle> oracle;
  if (spec.type == "classical") {
    oracle = std::make_unique<ClassicalOracle>(*space_);
  } else if (spec.type == "g") {
    const Driver drv = driver(spec.driver_ref);
    Rng rng(0xB0);
    const auto r_ref = driver_r_ref(spec.driver_ref);
    const std::optional<RMatrix> r =
        r_ref ? std::optional<RMatrix>(rmatrix(*r_ref)) : std::nullopt;
    const BalanceCertificate cert = check_balanced(basis_, drv, r, rng);
    oracle = std::make_unique<GExpectationOracle>(basis_, drv, cert);
  } else if (spec.type == "er") {
    oracle = std::make_unique<ErOracle>(basis_, rmatrix(spec.r_ref), spec.sign);
  } else if (spec.type == "table") {
    std::map<std::string, std::vector<double>> by_node = spec.weights;
    if (by_node.empty() && !spec.file.empty()) {
      // standalone table file: {"weights": {node id: [child weights]}}
      std::ifstream in(spec.file);
      if (!in)
        fail(ErrorCode::ScenarioInvalid, "cannot open table oracle file '" + spec.file + "'");
      std::ostringstream buf;
      buf << in.rdbuf();
      json jt;
      try {
        jt = json::parse(buf.str());
      } catch (const json::exception& e) {
        fail(ErrorCode::ScenarioInvalid, std::string("bad table oracle file: ") + e.what());
      }
      for (const auto& [node, row] : jt["weights"].items())
        by_node[node] = number_array(row, "table file weights." + node);
    }
    std::vector<std::vector<std::vector<double>>> weights(space_->steps());
    for (int k = 1; k <= space_->steps(); ++k) {
      weights[k - 1].resize(space_->node_count(k - 1));
      for (int v = 0; v < space_->node_count(k - 1); ++v) {
        const auto w = by_node.find(space_->node(k - 1, v).id);
        if (w == by_node.end())
          fail(ErrorCode::ScenarioInvalid,
               "table oracle lacks weights for node '" + space_->node(k - 1, v).id + "'");
        weights[k - 1][v] = w->second;
      }
    }
    oracle = std::make_unique<TableOracle>(*space_, std::move(weights));
  } else if (spec.type == "external") {
    oracle = std::make_unique<ExternalOracle>(*space_, spec.command);
  } else if (spec.type == "worstcase_static") {
    oracle = std::make_unique<WorstCaseStaticOracle>(*space_, spec.measures);
  } else {
    fail(ErrorCode::ScenarioInvalid, "unknown oracle type '" + spec.type + "'");
  }
  auto [pos, _] = oracle_cache_.emplace(name, std::move(oracle));
  return *pos->second;
}

}  // namespace gexpect
