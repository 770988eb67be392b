#include "gexpect/report.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace gexpect {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double x = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), x);
  return x;
}

bool Report::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string Report::to_text() const {
  std::ostringstream out;
  out << "gexpect " << command << "\n";
  out << "schema " << schema << "\n";
  out << "seed " << seed << "\n";
  for (const auto& c : checks) {
    out << "check " << c.name << " " << (c.pass ? "PASS" : "FAIL");
    for (const auto& [k, v] : c.info) out << " " << k << "=" << v;
    out << "\n";
  }
  for (const auto& t : tables) {
    out << "table " << t.name << "\n";
    out << " ";
    for (const auto& col : t.columns) out << " " << col;
    out << "\n";
    for (const auto& row : t.rows) {
      out << " ";
      for (const auto& cell : row) out << " " << cell;
      out << "\n";
    }
  }
  out << "result " << (all_pass() ? "PASS" : "FAIL") << "\n";
  return out.str();
}

std::string Report::to_json() const {
  nlohmann::json j;
  j["schema"] = schema;
  j["command"] = command;
  j["seed"] = seed;
  j["result"] = all_pass() ? "PASS" : "FAIL";
  j["wall_ms"] = wall_ms;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json jc;
    jc["name"] = c.name;
    jc["pass"] = c.pass;
    for (const auto& [k, v] : c.info) jc["info"][k] = v;
    j["checks"].push_back(jc);
  }
  j["tables"] = nlohmann::json::array();
  for (const auto& t : tables) {
    nlohmann::json jt;
    jt["name"] = t.name;
    jt["columns"] = t.columns;
    jt["rows"] = t.rows;
    j["tables"].push_back(jt);
  }
  return j.dump(2) + "\n";
}

}  // namespace gexpect
