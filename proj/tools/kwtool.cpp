// kwtool: run equilibrium pipelines on JSON scenario files.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "kw/scenario.hpp"

namespace {

using kw::Json;

constexpr int kOk = 0;
constexpr int kNotConverged = 1;
constexpr int kInputError = 2;

struct Options {
  std::string scenario;
  std::string out;
  std::string convention;
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  bool ad = false;
  std::string candidate;
};

void write_file(const std::string& dir, const std::string& name, const std::string& text) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error(fmt::format("cannot write {}/{}", dir, name));
}

kw::Scenario load(const Options& o) {
  kw::Scenario s = kw::load_scenario(o.scenario);
  if (!o.convention.empty()) {
    try {
      s.clearing = kw::parse_clearing(o.convention);
    } catch (const kw::ModelError& e) {
      throw kw::ScenarioError(fmt::format("--convention: {}", e.what()));
    }
  }
  if (o.seed) {
    s.solver.seed = *o.seed;
    if (s.experiment) s.experiment->seed = *o.seed;
  }
  if (o.tolerance) {
    if (!(*o.tolerance > 0.0)) throw kw::ScenarioError("--tolerance: must be positive");
    s.solver.residual_tolerance = *o.tolerance;
  }
  return s;
}

kw::VerificationConfig verification(const Options& o) {
  kw::VerificationConfig v;
  if (o.tolerance) {
    v.budget_tolerance = std::max(v.budget_tolerance, *o.tolerance);
    v.optimality_tolerance = std::max(v.optimality_tolerance, *o.tolerance);
  }
  return v;
}

Json header(const std::string& command, const kw::Scenario& s) {
  Json j = Json::object();
  j["command"] = command;
  j["tool_version"] = kw::kToolVersion;
  j["scenario_digest"] = kw::digest(s);
  j["scenario"] = kw::to_json(s);
  return j;
}

std::string plan_text(const kw::Plan& p) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < p.size(); ++i) s += fmt::format("{}{:.10g}", i ? ", " : "", p[i]);
  return s + ")";
}

kw::Plan linear_prior(const kw::Scenario& s, const kw::PriorSet& priors) {
  if (priors.is_singleton()) return priors.vertex(0);
  if (s.experiment && s.experiment->prior) return *s.experiment->prior;
  return priors.centroid();
}

int finish(Json report, const Options& o, double ms, int code) {
  report["elapsed_ms"] = ms;
  report["exit_code"] = code;
  write_file(o.out, "report.json", report.dump(2) + "\n");
  return code;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_solve(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const kw::Scenario s = load(o);
  const kw::Economy economy = s.economy();
  Json report = header("solve", s);
  const kw::NoTradeCertificate cert = kw::no_trade_certificate(economy);
  const kw::Equilibrium eq = kw::solve_kw(economy, s.solver);
  const kw::VerificationReport rep = kw::verify_equilibrium(economy, eq.psi, eq.allocation, verification(o));
  Json result = Json::object();
  result["equilibrium"] = kw::to_json(eq);
  result["verification"] = kw::to_json(rep);
  result["no_trade_certificate"] = kw::to_json(cert);

  fmt::print("convention   {}\n", kw::to_string(economy.clearing()));
  fmt::print("method       {}\n", eq.method);
  fmt::print("converged    {}\n", eq.converged);
  fmt::print("residual     {:.3g}\n", eq.residual);
  fmt::print("psi          {}\n", plan_text(eq.psi.values()));
  for (std::size_t i = 0; i < eq.allocation.size(); ++i) {
    fmt::print("agent {:<6} {}\n", i, plan_text(eq.allocation[i]));
  }
  fmt::print("disposal     {}\n", plan_text(eq.disposal));
  fmt::print("no-trade     {}{}\n", cert.supportable ? "supportable" : "unsupportable",
             cert.exact ? "" : " (inconclusive)");
  fmt::print("verified     {} (no-arbitrage gap {:.3g})\n", rep.verdict, rep.no_arbitrage_gap);

  const kw::PriorSet& priors = economy.priors();
  if (o.ad || priors.is_singleton()) {
    try {
      const kw::Equilibrium ad = kw::solve_ad(economy, linear_prior(s, priors), s.solver);
      double dist = 0.0;
      for (std::size_t i = 0; i < ad.allocation.size(); ++i) {
        dist = std::max(dist, (ad.allocation[i] - eq.allocation[i]).cwiseAbs().maxCoeff());
      }
      result["arrow_debreu"] = kw::to_json(ad);
      result["arrow_debreu_distance"] = dist;
      result["arrow_debreu_agrees"] = dist <= 1e-6;
      fmt::print("AD distance  {:.3g}{}\n", dist, dist <= 1e-6 ? " (agrees)" : "");
    } catch (const kw::ModelError& e) {
      result["arrow_debreu_error"] = e.what();
      fmt::print("AD           not available: {}\n", e.what());
    }
  }
  report["result"] = result;
  return finish(std::move(report), o, since(t0), eq.converged ? kOk : kNotConverged);
}

int cmd_verify(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  if (o.candidate.empty()) throw kw::ScenarioError("verify: --candidate is required");
  const kw::Scenario s = load(o);
  const kw::Economy economy = s.economy();
  std::ifstream in(o.candidate);
  if (!in) throw kw::ScenarioError(fmt::format("{}: cannot open", o.candidate));
  std::stringstream ss;
  ss << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    throw kw::ScenarioError(fmt::format("{}: parse error: {}", o.candidate, e.what()));
  }
  kw::CandidateFile cand;
  try {
    cand = kw::parse_candidate(doc, economy.num_states(), economy.num_agents());
  } catch (const kw::ScenarioError& e) {
    throw kw::ScenarioError(fmt::format("{}: {}", o.candidate, e.what()));
  }
  const kw::VerificationReport rep = kw::verify_equilibrium(economy, cand.psi, cand.allocation, verification(o));
  Json report = header("verify", s);
  report["result"] = Json{{"verification", kw::to_json(rep)}};
  fmt::print("verdict      {}\n", rep.verdict ? "pass" : "fail");
  for (std::size_t i = 0; i < rep.budget_slack.size(); ++i) {
    fmt::print("agent {:<6} budget slack {:.6g}  optimality gap {:.6g}\n", i, rep.budget_slack[i],
               rep.optimality_gap[i]);
  }
  fmt::print("feasibility  {:.3g}\n", rep.feasibility_residual);
  fmt::print("no-arbitrage {:.3g}\n", rep.no_arbitrage_gap);
  return finish(std::move(report), o, since(t0), rep.verdict ? kOk : kNotConverged);
}

int cmd_sweep(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const kw::Scenario s = load(o);
  if (!s.experiment || s.experiment->grid.empty()) throw kw::ScenarioError("experiment.grid: empty grid");
  // Validates that the scenario describes an interval family.
  (void)s.prior_family(0.0);
  const kw::Economy economy = s.economy();
  const auto records = kw::kw_correspondence_sweep(
      economy, [&](double e) { return s.prior_family(e); }, s.experiment->grid, s.solver);
  const std::string csv = kw::sweep_csv(records, economy.num_states(), economy.num_agents());
  write_file(o.out, "sweep.csv", csv);
  Json report = header("sweep", s);
  Json rows = Json::array();
  bool ok = true;
  fmt::print("{:>10} {:>10} {:>10} {:>12} {:>12} {:>15}\n", "epsilon", "converged", "residual", "disposal",
             "distance", "certificate");
  for (const auto& r : records) {
    ok = ok && !r.failed;
    Json row = Json::object();
    row["epsilon"] = r.epsilon;
    row["convention"] = kw::to_string(r.clearing);
    row["failed"] = r.failed;
    row["failure"] = r.failure;
    row["trade_volume"] = r.trade_volume;
    row["disposal_l1"] = r.disposal_l1;
    row["distance_to_base"] = r.distance_to_base;
    row["certificate"] = r.certificate;
    if (r.equilibrium) row["equilibrium"] = kw::to_json(*r.equilibrium);
    rows.push_back(row);
    fmt::print("{:>10.4g} {:>10} {:>10.3g} {:>12.6g} {:>12.6g} {:>15}\n", r.epsilon, !r.failed,
               r.equilibrium ? r.equilibrium->residual : 0.0, r.disposal_l1, r.distance_to_base, r.certificate);
  }
  report["result"] = Json{{"records", rows}};
  return finish(std::move(report), o, since(t0), ok ? kOk : kNotConverged);
}

int cmd_sample(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const kw::Scenario s = load(o);
  if (!s.experiment) throw kw::ScenarioError("experiment: missing");
  const kw::Economy economy = s.economy();
  kw::GenericityConfig g;
  g.draws = s.experiment->draws;
  g.seed = s.experiment->seed;
  g.constant_shares = s.experiment->constant_shares;
  g.solver = s.solver;
  g.verification = verification(o);
  kw::GenericityResult res;
  Json report = header("sample", s);
  try {
    res = kw::genericity_experiment(economy, linear_prior(s, economy.priors()), g);
  } catch (const kw::ConvergenceError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    report["error"] = e.what();
    return finish(std::move(report), o, since(t0), kNotConverged);
  }
  write_file(o.out, "samples.csv", kw::sample_csv(res, economy.num_states(), economy.num_agents()));
  std::size_t consistent = 0;
  for (const auto& d : res.draws) consistent += d.consistent ? 1 : 0;
  report["result"] = Json{{"fraction", res.fraction}, {"draws", res.draws.size()}, {"consistent", consistent}};
  fmt::print("fraction={} draws={} consistent={}\n", kw::format_number(res.fraction), res.draws.size(),
             consistent);
  return finish(std::move(report), o, since(t0), kOk);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knight-Walras equilibrium tool"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* c) {
    c->add_option("--scenario", o.scenario, "scenario JSON file")->required();
    c->add_option("--out", o.out, "directory for report.json and CSV output");
    c->add_option("--convention", o.convention, "clearing convention: disposal or equality");
    c->add_option("--seed", o.seed, "random seed");
    c->add_option("--tolerance", o.tolerance, "residual tolerance");
  };
  CLI::App* solve = app.add_subcommand("solve", "compute a Knight-Walras equilibrium");
  common(solve);
  solve->add_flag("--ad", o.ad, "also compute the Arrow-Debreu equilibrium");
  CLI::App* verify = app.add_subcommand("verify", "check a candidate price and allocation");
  common(verify);
  verify->add_option("--candidate", o.candidate, "candidate JSON file")->required();
  CLI::App* sweep = app.add_subcommand("sweep", "equilibria along an epsilon grid");
  common(sweep);
  CLI::App* sample = app.add_subcommand("sample", "random endowment experiment");
  common(sample);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }
  try {
    if (solve->parsed()) return cmd_solve(o);
    if (verify->parsed()) return cmd_verify(o);
    if (sweep->parsed()) return cmd_sweep(o);
    return cmd_sample(o);
  } catch (const kw::ModelError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  }
}
