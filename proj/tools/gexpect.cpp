// gexpect: scenario-driven batch front end for the BSDE / nonlinear
// expectation engine. Exit codes: 0 all checks pass, 1 a check failed,
// 2 usage or scenario error.

#include <algorithm>
#include <chrono>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gexpect/battery.hpp"
#include "gexpect/external_oracle.hpp"
#include "gexpect/scenario.hpp"

namespace gx = gexpect;

namespace {

struct CommonFlags {
  std::string scenario_path;
  std::string report_format = "text";
  double tol = 1e-10;
  std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_scenario = true) {
  auto* opt = cmd->add_option("--scenario", flags.scenario_path, "scenario file (JSON)");
  if (needs_scenario) opt->required();
  cmd->add_option("--report", flags.report_format, "report format: text | json")
      ->check(CLI::IsMember({"text", "json"}));
  cmd->add_option("--tol", flags.tol, "check tolerance");
  cmd->add_option("--seed", flags.seed, "seed for sampled audits");
}

int emit(gx::Report& report, const CommonFlags& flags,
         std::chrono::steady_clock::time_point start) {
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  std::cout << (flags.report_format == "json" ? report.to_json() : report.to_text());
  return report.all_pass() ? 0 : 1;
}

std::string verdict_name(gx::CompareReport::Verdict v) {
  switch (v) {
    case gx::CompareReport::Verdict::Holds: return "Holds";
    case gx::CompareReport::Verdict::Violated: return "Violated";
    default: return "HypothesisFails";
  }
}

void add_value_table(gx::Report& report, const gx::FilteredSpace& sp, const std::string& name,
                     const gx::AdaptedProcess& y) {
  gx::ReportTable t;
  t.name = name;
  t.columns = {"level", "node", "value"};
  for (int k = 0; k <= sp.steps(); ++k)
    for (int v = 0; v < sp.node_count(k); ++v)
      t.rows.push_back({std::to_string(k), sp.node(k, v).id, gx::format_double(y.at[k][v])});
  report.tables.push_back(std::move(t));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact BSDE and nonlinear-expectation engine on finite filtered spaces"};
  app.require_subcommand(1);

  CommonFlags flags;

  // --- solve ---------------------------------------------------------------
  auto* solve_cmd = app.add_subcommand("solve", "solve a BSDE from the scenario catalog");
  std::string driver_name, payoff_name;
  add_common(solve_cmd, flags);
  solve_cmd->add_option("--driver", driver_name, "driver name")->required();
  solve_cmd->add_option("--payoff", payoff_name, "terminal payoff name")->required();

  // --- compare ---------------------------------------------------------------
  auto* compare_cmd = app.add_subcommand("compare", "comparison-theorem harness");
  std::string driver2_name, payoff2_name;
  int from_level = 0;
  add_common(compare_cmd, flags);
  compare_cmd->add_option("--driver", driver_name)->required();
  compare_cmd->add_option("--payoff", payoff_name)->required();
  compare_cmd->add_option("--driver2", driver2_name)->required();
  compare_cmd->add_option("--payoff2", payoff2_name)->required();
  compare_cmd->add_option("--from-level", from_level, "first level of the comparison window");

  // --- decompose ---------------------------------------------------------------
  auto* decompose_cmd =
      app.add_subcommand("decompose", "nonlinear Doob-Meyer decomposition of a process");
  std::string oracle_name, process_name, r_ref, schedule_arg;
  bool penalized = false;
  add_common(decompose_cmd, flags);
  decompose_cmd->add_option("--driver", driver_name, "driver name (g-expectation route)");
  decompose_cmd->add_option("--oracle", oracle_name, "oracle name (dominated route)");
  decompose_cmd->add_option("--r", r_ref, "r reference (named rmatrix or literal)");
  decompose_cmd->add_option("--process", process_name, "supermartingale process name")
      ->required();
  decompose_cmd->add_flag("--penalized", penalized, "also run the penalisation schedule");
  decompose_cmd->add_option("--schedule", schedule_arg, "comma-separated penalty levels");

  // --- recover ---------------------------------------------------------------
  auto* recover_cmd = app.add_subcommand("recover", "recover the driver of an oracle");
  std::string method = "onestep";
  int verify_n = 0;
  bool search_r = false;
  bool no_audit = false;
  add_common(recover_cmd, flags);
  recover_cmd->add_option("--oracle", oracle_name)->required();
  recover_cmd->add_option("--r", r_ref, "dominating r (named or literal)");
  recover_cmd->add_option("--method", method, "onestep | global")
      ->check(CLI::IsMember({"onestep", "global"}));
  recover_cmd->add_option("--verify", verify_n, "random verification payoffs");
  recover_cmd->add_flag("--search-r", search_r,
                        "EXPERIMENTAL: search the smallest scalar r passing the audit");
  recover_cmd->add_flag("--no-audit", no_audit, "bypass the F-expectation audit (diagnostics)");

  // --- axioms ---------------------------------------------------------------
  auto* axioms_cmd = app.add_subcommand("axioms", "F-expectation axiom audit");
  int samples = 200;
  add_common(axioms_cmd, flags);
  axioms_cmd->add_option("--oracle", oracle_name)->required();
  axioms_cmd->add_option("--r", r_ref, "r for the domination audit");
  axioms_cmd->add_option("--samples", samples, "sampled audits per axiom");

  // --- suite ---------------------------------------------------------------
  auto* suite_cmd = app.add_subcommand("suite", "seeded property battery on fuzzed spaces");
  double suite_trials = 100.0;
  int threads = 0;
  add_common(suite_cmd, flags, /*needs_scenario=*/false);
  suite_cmd->add_option("--trials", suite_trials,
                        "base trial count (100 = the acceptance scale)");
  suite_cmd->add_option("--threads", threads, "worker threads (0 = hardware)");

  // --- oracle-serve ------------------------------------------------------------
  auto* serve_cmd =
      app.add_subcommand("oracle-serve", "answer oracle queries on stdin (wire protocol)");
  add_common(serve_cmd, flags);
  serve_cmd->add_option("--oracle", oracle_name)->required();

  CLI11_PARSE(app, argc, argv);
  const auto start = std::chrono::steady_clock::now();

  try {
    if (suite_cmd->parsed()) {
      gx::BatteryOptions opts;
      opts.seed = flags.seed;
      opts.scale = suite_trials / 100.0;
      opts.threads = threads;
      gx::Report report = gx::run_suite(opts);
      report.seed = flags.seed;
      return emit(report, flags, start);
    }

    gx::Workspace ws(gx::load_scenario_file(flags.scenario_path));
    gx::Report report;
    report.seed = flags.seed;

    if (solve_cmd->parsed()) {
      report.command = "solve";
      const gx::Driver driver = ws.driver(driver_name);
      const gx::RandomVariable q = ws.payoff(payoff_name);
      gx::Rng rng(flags.seed);
      const gx::StandardReport cls = gx::check_standard(ws.basis(), driver, rng);
      const gx::BsdeSolution sol = gx::solve(ws.basis(), driver, q);
      gx::Check classification;
      classification.name = "classification";
      classification.pass = cls.classification != gx::DriverClass::Unsupported;
      classification.with("class", cls.classification == gx::DriverClass::Standard
                                       ? "Standard"
                                       : cls.classification == gx::DriverClass::ScalarExtensionOK
                                             ? "ScalarExtensionOK"
                                             : "Unsupported");
      classification.with("metadata_consistent", cls.metadata_consistent ? "yes" : "no");
      report.checks.push_back(classification);
      gx::Check residual;
      residual.name = "residual";
      residual.pass = sol.residual < flags.tol;
      residual.with("max_defect", sol.residual).with("Y0", sol.y.at[0][0]);
      report.checks.push_back(residual);
      add_value_table(report, ws.space(), "Y", sol.y);
      return emit(report, flags, start);
    }

    if (compare_cmd->parsed()) {
      report.command = "compare";
      gx::Rng rng(flags.seed);
      const auto r_ref_g = ws.driver_r_ref(driver_name);
      const std::optional<gx::RMatrix> r =
          r_ref_g ? std::optional<gx::RMatrix>(ws.rmatrix(*r_ref_g)) : std::nullopt;
      const gx::CompareReport rep =
          gx::compare(ws.basis(), ws.driver(driver_name), ws.payoff(payoff_name),
                      ws.driver(driver2_name), ws.payoff(payoff2_name), from_level, r, rng,
                      flags.tol);
      gx::Check c;
      c.name = "comparison";
      c.pass = rep.verdict == gx::CompareReport::Verdict::Holds && rep.strictness_ok;
      c.with("verdict", verdict_name(rep.verdict)).with("min_gap", rep.min_gap);
      if (!rep.reason.empty()) c.with("reason", rep.reason);
      if (!rep.witness.empty()) c.with("witness", rep.witness);
      c.with("strictness", rep.strictness_ok ? "ok" : rep.strictness_witness);
      report.checks.push_back(c);
      return emit(report, flags, start);
    }

    if (decompose_cmd->parsed()) {
      report.command = "decompose";
      const gx::AdaptedProcess y = ws.process(process_name);
      std::vector<double> schedule = gx::default_penalty_schedule();
      if (!schedule_arg.empty()) {
        schedule.clear();
        std::stringstream ss(schedule_arg);
        std::string item;
        while (std::getline(ss, item, ',')) schedule.push_back(std::stod(item));
      }
      if (!driver_name.empty()) {
        const gx::Driver driver = ws.driver(driver_name);
        const gx::Decomposition dec = gx::decompose_direct(ws.basis(), driver, y);
        gx::Check c;
        c.name = "decompose_direct";
        c.pass = dec.reconstruction_defect < flags.tol;
        c.with("reconstruction_defect", dec.reconstruction_defect)
            .with("min_increment", dec.min_increment)
            .with("A_T_max", dec.a.at.back().values.empty()
                                 ? 0.0
                                 : *std::max_element(dec.a.at.back().values.begin(),
                                                     dec.a.at.back().values.end()));
        report.checks.push_back(c);
        add_value_table(report, ws.space(), "A", dec.a);
        if (penalized) {
          const gx::PenalizationTrace trace =
              gx::penalized_sequence(ws.basis(), driver, y, schedule, flags.tol);
          gx::Check pc;
          pc.name = "penalization";
          pc.pass = trace.monotone && trace.bounded;
          pc.with("monotone", trace.monotone ? "yes" : "no")
              .with("converged", trace.converged ? "yes" : "no")
              .with("final_gap", trace.entries.back().y_gap_sup);
          report.checks.push_back(pc);
          gx::ReportTable t;
          t.name = "penalization_trace";
          t.columns = {"n", "Y0", "y_gap", "z_gap", "a_gap"};
          for (const auto& e : trace.entries)
            t.rows.push_back({gx::format_double(e.n), gx::format_double(e.y0),
                              gx::format_double(e.y_gap_sup), gx::format_double(e.z_gap),
                              gx::format_double(e.a_gap)});
          report.tables.push_back(std::move(t));
        }
      } else if (!oracle_name.empty()) {
        if (r_ref.empty()) {
          std::cerr << "decompose --oracle needs --r" << std::endl;
          return 2;
        }
        const gx::ExpectationOracle& oracle = ws.oracle(oracle_name);
        gx::ErDomOptions opts;
        opts.schedule = schedule;
        if (!penalized) opts.schedule.clear();
        opts.tol = std::max(flags.tol, 1e-8);
        const gx::ErDomResult res =
            gx::er_dom_decompose(ws.basis(), oracle, ws.rmatrix(r_ref), y, opts);
        gx::Check c;
        c.name = "er_dom_decompose";
        c.pass = res.verification_defect <= opts.tol && res.monotone;
        c.with("verification_defect", res.verification_defect)
            .with("monotone", res.monotone ? "yes" : "no");
        report.checks.push_back(c);
        add_value_table(report, ws.space(), "A", res.a);
        if (penalized) {
          gx::ReportTable t;
          t.name = "penalization_trace";
          t.columns = {"n", "y_gap", "a_gap"};
          for (const auto& e : res.trace)
            t.rows.push_back({gx::format_double(e.n), gx::format_double(e.y_gap_sup),
                              gx::format_double(e.a_gap)});
          report.tables.push_back(std::move(t));
        }
      } else {
        std::cerr << "decompose needs --driver or --oracle" << std::endl;
        return 2;
      }
      return emit(report, flags, start);
    }

    if (recover_cmd->parsed()) {
      report.command = "recover";
      const gx::ExpectationOracle& oracle = ws.oracle(oracle_name);
      if (search_r) {
        gx::AxiomsOptions aopts;
        aopts.seed = flags.seed;
        const auto rho = gx::experimental_search_scalar_r(ws.basis(), oracle, aopts);
        gx::Check c;
        c.name = "search_r_experimental";
        c.pass = rho.has_value();
        c.with("note", "experimental; no correctness claim");
        if (rho) c.with("rho", *rho);
        report.checks.push_back(c);
        if (!rho) return emit(report, flags, start);
        r_ref = gx::format_double(*rho);
      }
      if (r_ref.empty()) {
        std::cerr << "recover needs --r (or --search-r)" << std::endl;
        return 2;
      }
      gx::RecoverOptions ropts;
      ropts.method =
          method == "global" ? gx::RecoveryMethod::Global : gx::RecoveryMethod::OneStep;
      ropts.seed = flags.seed;
      ropts.enforce_audit = !no_audit;
      ropts.audit.seed = flags.seed;
      const gx::RecoveredDriver rec =
          gx::recover_driver(ws.basis(), oracle, ws.rmatrix(r_ref), ropts);
      gx::Check c;
      c.name = "recover";
      c.pass = rec.worst_lipschitz_gap() <= 1e-8 && rec.g_at_zero() <= 1e-12;
      c.with("method", method)
          .with("g_at_zero", rec.g_at_zero())
          .with("domination_gap", rec.worst_domination_gap())
          .with("lipschitz_gap", rec.worst_lipschitz_gap());
      report.checks.push_back(c);
      if (verify_n > 0) {
        const auto payoffs =
            gx::default_verification_payoffs(ws.space(), flags.seed, verify_n);
        const gx::VerifyReport vr = gx::verify_representation(
            ws.basis(), oracle, rec, payoffs, std::max(flags.tol, 1e-9));
        gx::Check vc;
        vc.name = "verify_representation";
        vc.pass = vr.pass;
        vc.with("max_deviation", vr.max_deviation)
            .with("payoffs", std::to_string(vr.payoffs_checked));
        if (!vr.failures.empty()) {
          vc.with("witness_payoff", std::to_string(vr.failures.front().payoff_index))
              .with("witness_level", std::to_string(vr.failures.front().level))
              .with("witness_node", vr.failures.front().node);
        }
        report.checks.push_back(vc);
      }
      return emit(report, flags, start);
    }

    if (axioms_cmd->parsed()) {
      report.command = "axioms";
      const gx::ExpectationOracle& oracle = ws.oracle(oracle_name);
      gx::AxiomsOptions aopts;
      aopts.samples = samples;
      aopts.seed = flags.seed;
      aopts.tol = flags.tol;
      const std::optional<gx::RMatrix> r =
          r_ref.empty() ? std::nullopt : std::optional<gx::RMatrix>(ws.rmatrix(r_ref));
      const gx::AxiomsReport rep = gx::axioms_report(ws.basis(), oracle, r, aopts);
      for (const auto& a : rep.checks) {
        gx::Check c;
        c.name = a.name;
        c.pass = a.pass || a.informational;
        c.with("worst", a.worst);
        if (a.informational) c.with("required", "no").with("holds", a.pass ? "yes" : "no");
        if (!a.witness.empty()) c.with("witness", a.witness);
        report.checks.push_back(c);
      }
      return emit(report, flags, start);
    }

    if (serve_cmd->parsed()) {
      gx::serve_oracle(ws.oracle(oracle_name), std::cin, std::cout);
      return 0;
    }
  } catch (const gx::Error& e) {
    std::cerr << e.what() << std::endl;
    return e.code() == gx::ErrorCode::ScenarioInvalid ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 2;
}
