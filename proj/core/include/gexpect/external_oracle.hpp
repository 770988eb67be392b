#pragma once

#include <iosfwd>
#include <string>

#include "gexpect/expectation.hpp"

namespace gexpect {

// ===========================================================================
// Line-delimited request/response protocol for out-of-process oracles.
// Request:  {"q":[...terminal values...],"level":k}
// Response: {"values":[...level-k values in canonical node order...]}
// Numbers travel as shortest round-trip decimals, so the exchange is
// bit-exact for doubles.
// ===========================================================================

// Client: spawns `command` through /bin/sh once and keeps the pipe pair for
// the oracle's lifetime. Not reentrant (a single request pipe).
class ExternalOracle final : public ExpectationOracle {
 public:
  ExternalOracle(const FilteredSpace& sp, const std::string& command);
  ~ExternalOracle() override;

  ExternalOracle(const ExternalOracle&) = delete;
  ExternalOracle& operator=(const ExternalOracle&) = delete;

  RandomVariable cond(const RandomVariable& q, int level) const override;
  std::string provenance() const override { return "external(" + command_ + ")"; }
  bool reentrant() const override { return false; }

 private:
  std::string command_;
  int pid_ = -1;
  int to_child_ = -1;
  mutable int from_child_ = -1;
  mutable std::string buffer_;
};

// Server side: answers requests for `oracle` until EOF. Used by the
// `gexpect oracle-serve` subcommand; any process speaking the protocol works.
void serve_oracle(const ExpectationOracle& oracle, std::istream& in, std::ostream& out);

}  // namespace gexpect
