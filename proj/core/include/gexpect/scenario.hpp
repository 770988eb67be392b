#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "gexpect/external_oracle.hpp"
#include "gexpect/recover.hpp"

namespace gexpect {

// ===========================================================================
// Scenario files: one JSON document describing the space, named payoffs,
// drivers (catalog references with parameters), r-coefficients, oracles and
// processes. Node order within a level is the canonical component order for
// every vector. Schema version 1.
// ===========================================================================

struct DriverSpec {
  std::string type;  // zero | linear_y | r_norm | neg_r_norm | linear_z | table
  double a = 0.0;
  std::string r_ref;                       // r by name or numeric literal
  std::vector<double> theta;               // linear_z
  std::vector<std::vector<double>> table;  // per step, per node
};

struct OracleSpec {
  std::string type;  // classical | g | er | table | external | worstcase_static
  std::string driver_ref;
  std::string r_ref;
  int sign = +1;
  std::map<std::string, std::vector<double>> weights;  // node id -> child weights
  std::string file;                                    // table weights from a file
  std::string command;                                 // external
  std::vector<std::vector<double>> measures;           // worstcase_static
};

struct Scenario {
  int schema = 1;
  SpaceSpec space;
  std::map<std::string, std::vector<double>> payoffs;
  std::map<std::string, DriverSpec> drivers;
  std::map<std::string, std::string> rmatrices;  // raw JSON snippets
  std::map<std::string, OracleSpec> oracles;
  std::map<std::string, std::vector<std::vector<double>>> processes;  // per level values
};

// Throws ScenarioInvalid with a pointer to the offending element.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario_file(const std::string& path);

// A scenario bound to live objects. The space is heap-held so the basis
// pointer survives moves.
class Workspace {
 public:
  explicit Workspace(const Scenario& scenario);

  const Scenario& scenario() const { return scenario_; }
  const FilteredSpace& space() const { return *space_; }
  const MartingaleBasis& basis() const { return basis_; }

  RandomVariable payoff(const std::string& name) const;
  AdaptedProcess process(const std::string& name) const;
  Driver driver(const std::string& name) const;
  // r reference: a name from the scenario's rmatrices, or a numeric literal.
  RMatrix rmatrix(const std::string& ref) const;
  // Oracles may hold subprocesses; the workspace owns them.
  const ExpectationOracle& oracle(const std::string& name);
  std::optional<std::string> driver_r_ref(const std::string& name) const;

 private:
  Scenario scenario_;
  std::unique_ptr<FilteredSpace> space_;
  MartingaleBasis basis_;
  std::map<std::string, std::unique_ptr<ExpectationOracle>> oracle_cache_;
};

}  // namespace gexpect
