#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gexpect {

// Shortest decimal form that round-trips the double exactly; used for every
// number in reports and in the external-oracle wire protocol.
std::string format_double(double x);
double parse_double(const std::string& s);

struct Check {
  std::string name;
  bool pass = false;
  std::vector<std::pair<std::string, std::string>> info;  // ordered key/value

  Check& with(const std::string& key, const std::string& value) {
    info.emplace_back(key, value);
    return *this;
  }
  Check& with(const std::string& key, double value) { return with(key, format_double(value)); }
};

struct ReportTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

// Deterministic given (scenario, seed, version). The text emitter omits the
// wall clock so text reports are byte-stable; JSON carries it.
struct Report {
  int schema = 1;
  std::string command;
  std::uint64_t seed = 0;
  std::vector<Check> checks;
  std::vector<ReportTable> tables;
  double wall_ms = 0.0;

  bool all_pass() const;
  std::string to_text() const;
  std::string to_json() const;
};

}  // namespace gexpect
