#include "gexpect/external_oracle.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "gexpect/report.hpp"

namespace gexpect {

ExternalOracle::ExternalOracle(const FilteredSpace& sp, const std::string& command)
    : ExpectationOracle(sp), command_(command) {
  int to_pipe[2], from_pipe[2];
  if (pipe(to_pipe) != 0 || pipe(from_pipe) != 0)
    fail(ErrorCode::ScenarioInvalid, "could not create oracle pipes");
  const int pid = fork();
  if (pid < 0) fail(ErrorCode::ScenarioInvalid, "could not fork oracle process");
  if (pid == 0) {
    dup2(to_pipe[0], STDIN_FILENO);
    dup2(from_pipe[1], STDOUT_FILENO);
    close(to_pipe[0]);
    close(to_pipe[1]);
    close(from_pipe[0]);
    close(from_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  pid_ = pid;
  to_child_ = to_pipe[1];
  from_child_ = from_pipe[0];
  close(to_pipe[0]);
  close(from_pipe[1]);
}

ExternalOracle::~ExternalOracle() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

RandomVariable ExternalOracle::cond(const RandomVariable& q, int level) const {
  if (q.level != space_->steps())
    fail(ErrorCode::LevelOrder, "external oracle queries take terminal variables");
  nlohmann::json req;
  req["level"] = level;
  req["q"] = nlohmann::json::array();
  for (double x : q.values) req["q"].push_back(format_double(x));
  const std::string line = req.dump() + "\n";

  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = write(to_child_, line.data() + written, line.size() - written);
    if (n <= 0) fail(ErrorCode::ScenarioInvalid, "oracle process closed its input");
    written += static_cast<std::size_t>(n);
  }

  // read one response line
  std::string response;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      response = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      break;
    }
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof(chunk));
    if (n <= 0) fail(ErrorCode::ScenarioInvalid, "oracle process closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }

  nlohmann::json resp;
  try {
    resp = nlohmann::json::parse(response);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ScenarioInvalid, std::string("bad oracle response: ") + e.what());
  }
  if (!resp.contains("values") || !resp["values"].is_array())
    fail(ErrorCode::ScenarioInvalid, "oracle response lacks a values array");
  RandomVariable out{level, {}};
  for (const auto& x : resp["values"])
    out.values.push_back(x.is_string() ? parse_double(x.get<std::string>())
                                       : x.get<double>());
  if (out.size() != space_->node_count(level))
    fail(ErrorCode::ScenarioInvalid, "oracle response has the wrong width");
  return out;
}

void serve_oracle(const ExpectationOracle& oracle, std::istream& in, std::ostream& out) {
  const FilteredSpace& sp = oracle.space();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      out << "{\"error\":\"bad request\"}\n" << std::flush;
      continue;
    }
    const int level = req.value("level", 0);
    RandomVariable q{sp.steps(), {}};
    if (req.contains("q") && req["q"].is_array())
      for (const auto& x : req["q"])
        q.values.push_back(x.is_string() ? parse_double(x.get<std::string>())
                                         : x.get<double>());
    if (q.size() != sp.atoms() || level < 0 || level > sp.steps()) {
      out << "{\"error\":\"bad request\"}\n" << std::flush;
      continue;
    }
    const RandomVariable e = oracle.cond(q, level);
    nlohmann::json resp;
    resp["values"] = nlohmann::json::array();
    for (double x : e.values) resp["values"].push_back(format_double(x));
    out << resp.dump() << "\n" << std::flush;
  }
}

}  // namespace gexpect
