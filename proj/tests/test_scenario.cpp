#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gexpect/battery.hpp"
#include "gexpect/external_oracle.hpp"
#include "gexpect/scenario.hpp"

using namespace gexpect;

namespace {

const char* kS2Json = R"({
  "schema": 1,
  "times": [0.0, 1.0],
  "mu": [0.0, 1.0],
  "nodes": [
    {"id": "n0", "parent": null},
    {"id": "u", "parent": "n0", "p": 0.5},
    {"id": "d", "parent": "n0", "p": 0.5}
  ],
  "payoffs": {"Q": [1.0, -1.0]},
  "drivers": {
    "zero": "zero",
    "half": {"type": "r_norm", "r": "0.5"},
    "tbl": {"type": "table", "values": [[0.25]]}
  },
  "rmatrices": {"r1": 0.5, "rd": {"diag": [0.5]}},
  "oracles": {"cl": "classical", "er1": {"type": "er", "r": "r1", "sign": -1}},
  "processes": {"Y": [[1.0], [1.0, -1.0]]}
})";

}  // namespace

TEST_CASE("scenario round trip: space, payoffs, drivers, oracles") {
  Workspace ws(parse_scenario(kS2Json));
  CHECK(ws.space().atoms() == 2);
  CHECK(ws.payoff("Q")[0] == 1.0);
  CHECK(ws.process("Y").at[1][1] == -1.0);

  const Driver zero = ws.driver("zero");
  CHECK(zero.eval(1, 0, 0.3, std::vector<double>{1.0}) == 0.0);
  const Driver half = ws.driver("half");
  CHECK(half.eval(1, 0, 0.0, std::vector<double>{1.0}) == doctest::Approx(0.5));
  const Driver tbl = ws.driver("tbl");
  CHECK(tbl.eval(1, 0, 9.9, std::vector<double>{3.0}) == doctest::Approx(0.25));

  const RandomVariable e = ws.oracle("cl").cond(ws.payoff("Q"), 0);
  CHECK(e[0] == doctest::Approx(0.0));
  const RandomVariable em = ws.oracle("er1").cond(ws.payoff("Q"), 0);
  CHECK(em[0] == doctest::Approx(-0.5));
}

TEST_CASE("rmatrix references resolve by name or literal") {
  Workspace ws(parse_scenario(kS2Json));
  CHECK(ws.rmatrix("r1").scalar_at(1) == 0.5);
  CHECK(ws.rmatrix("0.125").scalar_at(1) == 0.125);
  CHECK(ws.rmatrix("rd").diag_entry(1, 0) == 0.5);
  CHECK_THROWS_AS((void)ws.rmatrix("missing"), Error);
}

TEST_CASE("scenario errors carry a pointer to the offending element") {
  CHECK_THROWS_AS((void)parse_scenario("{"), Error);
  CHECK_THROWS_AS((void)parse_scenario(R"({"schema": 2})"), Error);
  try {
    Workspace ws(parse_scenario(kS2Json));
    (void)ws.driver("nope");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ScenarioInvalid);
    CHECK(std::string(e.what()).find("nope") != std::string::npos);
  }
}

TEST_CASE("dangling driver reference inside an oracle is reported") {
  Scenario sc = parse_scenario(kS2Json);
  OracleSpec bad;
  bad.type = "g";
  bad.driver_ref = "ghost";
  sc.oracles["broken"] = bad;
  Workspace ws(sc);
  try {
    (void)ws.oracle("broken");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ScenarioInvalid);
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
  }
}

TEST_CASE("text reports are byte-stable, JSON carries the wall clock") {
  Report a;
  a.command = "solve";
  a.seed = 42;
  Check c;
  c.name = "residual";
  c.pass = true;
  c.with("max_defect", 1.25e-14).with("Y0", -0.5);
  a.checks.push_back(c);
  a.wall_ms = 12.5;
  Report b = a;
  b.wall_ms = 99.0;  // different timing must not change the text form
  CHECK(a.to_text() == b.to_text());
  CHECK(a.to_text().find("wall") == std::string::npos);
  CHECK(a.to_json().find("wall_ms") != std::string::npos);
  CHECK(a.to_text().find("result PASS") != std::string::npos);
}

TEST_CASE("format_double round-trips exactly") {
  for (double x : {0.1, -1.0 / 3.0, 1e-300, 6.02e23, 0.0, -0.0, 1.2345678901234567}) {
    CHECK(parse_double(format_double(x)) == x);
  }
}

TEST_CASE("table oracle weights load from a standalone file") {
  const std::string path = "/tmp/gexpect_table_weights.json";
  {
    std::ofstream out(path);
    out << R"({"weights": {"n0": [0.7, 0.3]}})";
  }
  Scenario sc = parse_scenario(kS2Json);
  OracleSpec spec;
  spec.type = "table";
  spec.file = path;
  sc.oracles["filetbl"] = spec;
  Workspace ws(sc);
  const RandomVariable e = ws.oracle("filetbl").cond(ws.payoff("Q"), 0);
  CHECK(e[0] == doctest::Approx(0.7 - 0.3));
  std::remove(path.c_str());
}

TEST_CASE("oracle wire protocol round trip through streams") {
  Workspace ws(parse_scenario(kS2Json));
  const ExpectationOracle& oracle = ws.oracle("cl");
  std::istringstream in(
      "{\"q\":[\"1\",\"-1\"],\"level\":0}\n"
      "{\"q\":[0.25,0.75],\"level\":1}\n");
  std::ostringstream out;
  serve_oracle(oracle, in, out);
  CHECK(out.str() == "{\"values\":[\"0\"]}\n{\"values\":[\"0.25\",\"0.75\"]}\n");
}

TEST_CASE("suite battery runs at a reduced scale") {
  BatteryOptions opts;
  opts.seed = 3;
  opts.scale = 0.02;
  opts.threads = 2;
  const Report rep = run_suite(opts);
  CHECK(rep.checks.size() >= 12);
  for (const auto& c : rep.checks) {
    INFO(c.name);
    CHECK(c.pass);
  }
}

TEST_CASE("suite reports are deterministic under the thread pool") {
  BatteryOptions opts;
  opts.seed = 11;
  opts.scale = 0.02;
  opts.threads = 2;
  Report a = run_suite(opts);
  Report b = run_suite(opts);
  a.wall_ms = b.wall_ms = 0.0;
  CHECK(a.to_text() == b.to_text());
}
