#include "kw/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace kw {

namespace {

using Eigen::Index;

// Field access with path-qualified errors.
class Field {
 public:
  Field(const Json& value, std::string path) : v_(value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const Json& raw() const { return v_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ScenarioError(fmt::format("{}: {}", path_.empty() ? "<root>" : path_, what));
  }

  void expect_object(std::initializer_list<const char*> allowed) const {
    if (!v_.is_object()) fail("expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = v_.begin(); it != v_.end(); ++it) {
      if (!ok.count(it.key())) fail(fmt::format("unknown field '{}'", it.key()));
    }
  }
  bool has(const char* key) const { return v_.is_object() && v_.contains(key); }
  Field at(const char* key) const {
    if (!has(key)) fail(fmt::format("missing field '{}'", key));
    return Field(v_.at(key), path_.empty() ? key : path_ + "." + key);
  }
  Field at(std::size_t i) const { return Field(v_.at(i), fmt::format("{}[{}]", path_, i)); }
  std::size_t size() const {
    if (!v_.is_array()) fail("expected an array");
    return v_.size();
  }

  double number() const {
    if (!v_.is_number()) fail("expected a number");
    const double x = v_.get<double>();
    if (!std::isfinite(x)) fail("expected a finite number");
    return x;
  }
  std::uint64_t unsigned_int() const {
    if (!v_.is_number_unsigned()) fail("expected a nonnegative integer");
    return v_.get<std::uint64_t>();
  }
  bool boolean() const {
    if (!v_.is_boolean()) fail("expected true or false");
    return v_.get<bool>();
  }
  std::string string() const {
    if (!v_.is_string()) fail("expected a string");
    return v_.get<std::string>();
  }
  Plan plan(std::size_t n) const {
    if (size() != n) fail(fmt::format("expected {} entries, got {}", n, v_.size()));
    Plan p(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) p[static_cast<Index>(i)] = at(i).number();
    return p;
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }

 private:
  const Json& v_;
  std::string path_;
};

Json plan_json(const Plan& p) {
  Json a = Json::array();
  for (Index i = 0; i < p.size(); ++i) a.push_back(p[i]);
  return a;
}

Json plans_json(const std::vector<Plan>& ps) {
  Json a = Json::array();
  for (const Plan& p : ps) a.push_back(plan_json(p));
  return a;
}

Bernoulli parse_bernoulli(const Field& f) {
  f.expect_object({"family", "parameter", "breakpoints", "slopes"});
  const std::string fam = f.at("family").string();
  try {
    if (fam == "power") return Bernoulli::power(f.at("parameter").number());
    if (fam == "exponential") return Bernoulli::exponential(f.at("parameter").number());
    if (fam == "sqrt") return Bernoulli::square_root();
    if (fam == "log") return Bernoulli::logarithmic();
    if (fam == "piecewise_linear") {
      return Bernoulli::piecewise_linear(f.at("breakpoints").numbers(), f.at("slopes").numbers());
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const ModelError& e) {
    f.fail(e.what());
  }
  f.at("family").fail(fmt::format("unknown family '{}'", fam));
}

Json bernoulli_json(const Bernoulli& u) {
  Json j = Json::object();
  switch (u.family()) {
    case BernoulliFamily::kPower:
      j["family"] = "power";
      j["parameter"] = u.parameter();
      break;
    case BernoulliFamily::kExponential:
      j["family"] = "exponential";
      j["parameter"] = u.parameter();
      break;
    case BernoulliFamily::kSquareRoot:
      j["family"] = "sqrt";
      break;
    case BernoulliFamily::kLogarithmic:
      j["family"] = "log";
      break;
    case BernoulliFamily::kPiecewiseLinear:
      j["family"] = "piecewise_linear";
      j["breakpoints"] = u.breakpoints();
      j["slopes"] = u.slopes();
      break;
  }
  return j;
}

Agent parse_agent(const Field& f, std::size_t n) {
  f.expect_object({"endowment", "preference", "bernoulli", "selection", "weights", "theta", "anchor"});
  Agent a;
  a.endowment = f.at("endowment").plan(n);
  const Bernoulli u = parse_bernoulli(f.at("bernoulli"));
  const std::string kind = f.has("preference") ? f.at("preference").string() : "maxmin";
  if (kind == "maxmin") {
    std::vector<std::size_t> sel;
    if (f.has("selection")) {
      const Field s = f.at("selection");
      for (std::size_t i = 0; i < s.size(); ++i) sel.push_back(static_cast<std::size_t>(s.at(i).unsigned_int()));
    }
    a.preference = PreferenceSpec::maxmin(u, sel);
  } else if (kind == "smooth") {
    a.preference = PreferenceSpec::smooth(u, f.at("weights").numbers(),
                                          f.has("theta") ? f.at("theta").number() : 1.0);
  } else if (kind == "anchored") {
    a.preference = PreferenceSpec::anchored(u, f.at("anchor").plan(n));
  } else {
    f.at("preference").fail(fmt::format("unknown preference '{}'", kind));
  }
  if (kind != "maxmin" && f.has("selection")) f.at("selection").fail("only maxmin agents take a selection");
  if (kind != "smooth" && (f.has("weights") || f.has("theta"))) f.fail("weights/theta need a smooth preference");
  if (kind != "anchored" && f.has("anchor")) f.at("anchor").fail("only anchored agents take an anchor");
  return a;
}

Json agent_json(const Agent& a) {
  Json j = Json::object();
  j["endowment"] = plan_json(a.endowment);
  j["preference"] = to_string(a.preference.kind);
  j["bernoulli"] = bernoulli_json(a.preference.bernoulli);
  switch (a.preference.kind) {
    case PreferenceKind::kMaxmin:
      j["selection"] = a.preference.selection;
      break;
    case PreferenceKind::kSmooth:
      j["weights"] = a.preference.weights;
      j["theta"] = a.preference.index.theta;
      break;
    case PreferenceKind::kAnchored:
      j["anchor"] = plan_json(*a.preference.anchor);
      break;
  }
  return j;
}

void parse_solver(const Field& f, SolverConfig& c) {
  f.expect_object({"damping", "damping_horizon", "temperature", "annealing", "max_outer_iterations",
                   "residual_tolerance", "newton_iterations", "refinement_depth", "refinement_subdivisions", "seed",
                   "no_trade_screen", "truncation"});
  if (f.has("damping")) c.damping = f.at("damping").number();
  if (f.has("damping_horizon")) c.damping_horizon = f.at("damping_horizon").number();
  if (f.has("temperature")) c.temperature = f.at("temperature").number();
  if (f.has("annealing")) c.annealing = f.at("annealing").number();
  if (f.has("max_outer_iterations")) c.max_outer_iterations = f.at("max_outer_iterations").unsigned_int();
  if (f.has("residual_tolerance")) c.residual_tolerance = f.at("residual_tolerance").number();
  if (f.has("newton_iterations")) c.newton_iterations = f.at("newton_iterations").unsigned_int();
  if (f.has("refinement_depth")) c.refinement_depth = f.at("refinement_depth").unsigned_int();
  if (f.has("refinement_subdivisions")) c.refinement_subdivisions = f.at("refinement_subdivisions").unsigned_int();
  if (f.has("seed")) c.seed = f.at("seed").unsigned_int();
  if (f.has("no_trade_screen")) c.no_trade_screen = f.at("no_trade_screen").boolean();
  if (f.has("truncation")) c.demand.truncation = f.at("truncation").number();
  if (!(c.damping > 0.0 && c.damping <= 1.0)) f.at("damping").fail("must lie in (0, 1]");
  if (!(c.damping_horizon > 0.0)) f.fail("damping_horizon must be positive");
  if (!(c.temperature > 0.0)) f.fail("temperature must be positive");
  if (!(c.annealing > 0.0 && c.annealing <= 1.0)) f.fail("annealing must lie in (0, 1]");
  if (!(c.residual_tolerance > 0.0)) f.fail("residual_tolerance must be positive");
  if (!(c.demand.truncation > 1.0)) f.fail("truncation must exceed 1");
}

Json solver_json(const SolverConfig& c) {
  Json j = Json::object();
  j["damping"] = c.damping;
  j["damping_horizon"] = c.damping_horizon;
  j["temperature"] = c.temperature;
  j["annealing"] = c.annealing;
  j["max_outer_iterations"] = c.max_outer_iterations;
  j["residual_tolerance"] = c.residual_tolerance;
  j["newton_iterations"] = c.newton_iterations;
  j["refinement_depth"] = c.refinement_depth;
  j["refinement_subdivisions"] = c.refinement_subdivisions;
  j["seed"] = c.seed;
  j["no_trade_screen"] = c.no_trade_screen;
  j["truncation"] = c.demand.truncation;
  return j;
}

}  // namespace

PriorSet Scenario::prior_set() const {
  switch (priors.kind) {
    case PriorSpec::Kind::kVertices:
      return PriorSet::from_vertices(priors.vertices);
    case PriorSpec::Kind::kInterval:
      return PriorSet::interval(priors.center, priors.epsilon);
    case PriorSpec::Kind::kSimplex:
      return PriorSet::full_simplex(states);
  }
  throw ScenarioError("priors: unknown kind");
}

PriorSet Scenario::prior_family(double epsilon) const {
  if (priors.kind != PriorSpec::Kind::kInterval) {
    throw ScenarioError("priors: an epsilon family needs interval priors");
  }
  return PriorSet::interval(priors.center, epsilon);
}

Economy Scenario::economy() const { return Economy(agents, prior_set(), clearing); }

Scenario parse_scenario(const Json& doc) {
  const Field root(doc, "");
  root.expect_object({"states", "priors", "agents", "clearing", "solver", "experiment"});
  Scenario s;
  s.states = static_cast<std::size_t>(root.at("states").unsigned_int());
  if (s.states == 0) root.at("states").fail("must be positive");
  const std::size_t n = s.states;

  const Field pr = root.at("priors");
  pr.expect_object({"vertices", "interval", "simplex"});
  if (pr.raw().size() != 1) pr.fail("exactly one of vertices, interval, simplex");
  if (pr.has("vertices")) {
    s.priors.kind = PriorSpec::Kind::kVertices;
    const Field vs = pr.at("vertices");
    if (vs.size() == 0) vs.fail("empty vertex list");
    for (std::size_t k = 0; k < vs.size(); ++k) s.priors.vertices.push_back(vs.at(k).plan(n));
  } else if (pr.has("interval")) {
    s.priors.kind = PriorSpec::Kind::kInterval;
    const Field iv = pr.at("interval");
    iv.expect_object({"center", "epsilon"});
    s.priors.center = iv.at("center").plan(n);
    s.priors.epsilon = iv.at("epsilon").number();
  } else {
    s.priors.kind = PriorSpec::Kind::kSimplex;
    if (!pr.at("simplex").boolean()) pr.at("simplex").fail("must be true");
  }

  const Field ag = root.at("agents");
  if (ag.size() == 0) ag.fail("no agents");
  for (std::size_t i = 0; i < ag.size(); ++i) s.agents.push_back(parse_agent(ag.at(i), n));
  if (root.has("clearing")) {
    try {
      s.clearing = parse_clearing(root.at("clearing").string());
    } catch (const ScenarioError&) {
      throw;
    } catch (const ModelError& e) {
      root.at("clearing").fail(e.what());
    }
  }
  if (root.has("solver")) parse_solver(root.at("solver"), s.solver);
  if (root.has("experiment")) {
    const Field ex = root.at("experiment");
    ex.expect_object({"grid", "draws", "seed", "constant_shares", "prior"});
    ExperimentSpec e;
    if (ex.has("grid")) e.grid = ex.at("grid").numbers();
    if (ex.has("draws")) e.draws = static_cast<std::size_t>(ex.at("draws").unsigned_int());
    if (ex.has("seed")) e.seed = ex.at("seed").unsigned_int();
    if (ex.has("constant_shares")) e.constant_shares = ex.at("constant_shares").boolean();
    if (ex.has("prior")) e.prior = ex.at("prior").plan(n);
    for (std::size_t i = 0; i < e.grid.size(); ++i) {
      if (e.grid[i] < 0.0) ex.at("grid").at(i).fail("epsilon must be >= 0");
    }
    s.experiment = e;
  }

  try {
    const PriorSet priors = s.prior_set();
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
      try {
        validate(s.agents[i], priors);
      } catch (const ModelError& e) {
        ag.at(i).fail(e.what());
      }
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const ModelError& e) {
    pr.fail(e.what());
  }
  return s;
}

Scenario parse_scenario_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ScenarioError(fmt::format("parse error: {}", e.what()));
  }
  return parse_scenario(doc);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(fmt::format("{}: cannot open", path));
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario_text(ss.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(fmt::format("{}: {}", path, e.what()));
  }
}

Json to_json(const Scenario& s) {
  Json j = Json::object();
  j["states"] = s.states;
  Json pr = Json::object();
  switch (s.priors.kind) {
    case PriorSpec::Kind::kVertices:
      pr["vertices"] = plans_json(s.priors.vertices);
      break;
    case PriorSpec::Kind::kInterval:
      pr["interval"] = Json{{"center", plan_json(s.priors.center)}, {"epsilon", s.priors.epsilon}};
      break;
    case PriorSpec::Kind::kSimplex:
      pr["simplex"] = true;
      break;
  }
  j["priors"] = pr;
  Json ag = Json::array();
  for (const Agent& a : s.agents) ag.push_back(agent_json(a));
  j["agents"] = ag;
  j["clearing"] = to_string(s.clearing);
  j["solver"] = solver_json(s.solver);
  if (s.experiment) {
    const ExperimentSpec& e = *s.experiment;
    Json ex = Json::object();
    ex["grid"] = e.grid;
    ex["draws"] = e.draws;
    ex["seed"] = e.seed;
    ex["constant_shares"] = e.constant_shares;
    if (e.prior) ex["prior"] = plan_json(*e.prior);
    j["experiment"] = ex;
  }
  return j;
}

std::string digest(const Scenario& scenario) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(scenario).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

Json to_json(const Equilibrium& eq) {
  Json j = Json::object();
  j["method"] = eq.method;
  j["converged"] = eq.converged;
  j["residual"] = eq.residual;
  j["psi"] = plan_json(eq.psi.values());
  j["allocation"] = plans_json(eq.allocation);
  j["excess_demand"] = plan_json(eq.excess_demand);
  j["disposal"] = plan_json(eq.disposal);
  j["worst_prior"] = plan_json(eq.worst_prior);
  if (eq.welfare_weights) j["welfare_weights"] = plan_json(*eq.welfare_weights);
  j["iterations"] = eq.iterations;
  j["demand_evaluations"] = eq.demand_evaluations;
  return j;
}

Json to_json(const VerificationReport& r) {
  Json j = Json::object();
  j["verdict"] = r.verdict;
  j["budgets_ok"] = r.budgets_ok;
  j["optimality_ok"] = r.optimality_ok;
  j["feasibility_ok"] = r.feasibility_ok;
  j["budget_slack"] = r.budget_slack;
  j["canonical_budget_slack"] = r.canonical_budget_slack;
  j["optimality_gap"] = r.optimality_gap;
  j["recomputed_demand"] = plans_json(r.recomputed_demand);
  j["feasibility_residual"] = r.feasibility_residual;
  j["no_arbitrage_gap"] = r.no_arbitrage_gap;
  j["no_arbitrage_holds"] = r.no_arbitrage_holds;
  j["net_trade_values"] = plans_json(r.net_trade_values);
  Json af = Json::array();
  for (bool b : r.mean_af) af.push_back(b);
  j["mean_ambiguity_free"] = af;
  return j;
}

Json to_json(const NoTradeCertificate& c) {
  Json j = Json::object();
  j["supportable"] = c.supportable;
  j["exact"] = c.exact;
  j["method"] = c.method;
  if (c.psi) j["psi"] = plan_json(c.psi->values());
  Json ag = Json::array();
  for (const AgentCone& a : c.agents) {
    Json x = Json::object();
    x["generators"] = plans_json(a.generators);
    Json iv = Json::array();
    for (const auto& [lo, hi] : a.ratio_intervals) {
      // Empty ranges are (inf, -inf), which JSON cannot hold.
      if (lo > hi) {
        iv.push_back(nullptr);
      } else {
        iv.push_back(Json::array({lo, std::isfinite(hi) ? Json(hi) : Json("inf")}));
      }
    }
    x["ratio_intervals"] = iv;
    x["supportable_alone"] = a.supportable_alone;
    x["supported"] = a.supported;
    if (a.supporting_prior.size() > 0) x["supporting_prior"] = plan_json(a.supporting_prior);
    ag.push_back(x);
  }
  j["agents"] = ag;
  return j;
}

CandidateFile parse_candidate(const Json& doc, std::size_t states, std::size_t agents) {
  const Json* src = &doc;
  std::string base;
  if (doc.is_object() && doc.contains("result") && doc["result"].is_object() &&
      doc["result"].contains("equilibrium")) {
    src = &doc["result"]["equilibrium"];
    base = "result.equilibrium";
  }
  const Field f(*src, base);
  if (!f.raw().is_object()) f.fail("expected an object");
  CandidateFile c;
  const Plan psi = f.at("psi").plan(states);
  if ((psi.array() < 0.0).any() || psi.sum() <= 0.0) f.at("psi").fail("price must be nonnegative and nonzero");
  c.psi = StatePrice(psi);
  const Field al = f.at("allocation");
  if (al.size() != agents) al.fail(fmt::format("expected {} plans, got {}", agents, al.size()));
  for (std::size_t i = 0; i < agents; ++i) {
    c.allocation.push_back(al.at(i).plan(states));
    if ((c.allocation.back().array() < 0.0).any()) al.at(i).fail("negative consumption");
  }
  return c;
}

std::string format_number(double x) { return fmt::format("{:.17g}", x); }

std::string sweep_csv(const std::vector<SweepRecord>& records, std::size_t states, std::size_t agents) {
  std::string out = "epsilon,convention,converged,residual,trade_volume,disposal_l1,dist_to_eps0_allocation,no_trade_certificate";
  for (std::size_t w = 0; w < states; ++w) out += fmt::format(",psi_{}", w);
  for (std::size_t i = 0; i < agents; ++i) {
    for (std::size_t w = 0; w < states; ++w) out += fmt::format(",c_{}_{}", i, w);
  }
  out += "\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const SweepRecord& r : records) {
    const bool has = r.equilibrium.has_value();
    out += format_number(r.epsilon) + "," + to_string(r.clearing) + "," +
           (has && r.equilibrium->converged && !r.failed ? "true" : "false") + "," +
           format_number(has ? r.equilibrium->residual : nan) + "," + format_number(r.trade_volume) + "," +
           format_number(r.disposal_l1) + "," + format_number(r.distance_to_base) + "," +
           (r.certificate.empty() ? "none" : r.certificate);
    for (std::size_t w = 0; w < states; ++w) {
      out += "," + format_number(has ? r.equilibrium->psi[w] : nan);
    }
    for (std::size_t i = 0; i < agents; ++i) {
      for (std::size_t w = 0; w < states; ++w) {
        out += "," + format_number(has ? r.equilibrium->allocation[i][static_cast<Index>(w)] : nan);
      }
    }
    out += "\n";
  }
  return out;
}

std::string sample_csv(const GenericityResult& result, std::size_t states, std::size_t agents) {
  std::string out = "draw,verdict,consistent,max_spread";
  for (std::size_t i = 0; i < agents; ++i) {
    for (std::size_t w = 0; w < states; ++w) out += fmt::format(",e_{}_{}", i, w);
  }
  out += "\n";
  for (std::size_t d = 0; d < result.draws.size(); ++d) {
    const GenericityDraw& g = result.draws[d];
    out += fmt::format("{},{},{},{}", d, g.verdict, g.consistent, format_number(g.max_spread));
    for (const Plan& e : g.endowments) {
      for (Index w = 0; w < e.size(); ++w) out += "," + format_number(e[w]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace kw
