#include "kw/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

namespace kw {

namespace {

using Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

double sup_distance(const std::vector<Plan>& a, const std::vector<Plan>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    d = std::max(d, (a[i] - b[i]).cwiseAbs().maxCoeff());
  }
  return d;
}

}  // namespace

EquivalenceVerdict ad_kw_equivalence(const Economy& economy, const Plan& prior,
                                     const SolverConfig& solver,
                                     const VerificationConfig& verification) {
  const PriorSet& priors = economy.priors();
  require_same_size(prior, economy.num_states(), "prior");
  if (!priors.contains(prior)) throw ModelError("ad_kw_equivalence: prior lies outside the prior set");

  EquivalenceVerdict out;
  out.ad = solve_ad(economy, prior, solver);
  if (!out.ad.converged) {
    throw ConvergenceError(fmt::format("ad_kw_equivalence: Negishi iteration stopped at residual {:.3g}",
                                       out.ad.residual));
  }
  out.verdict = true;
  for (std::size_t i = 0; i < economy.num_agents(); ++i) {
    const Plan xi = out.ad.psi.values().cwiseProduct(out.ad.allocation[i] - economy.agent(i).endowment);
    out.net_trade_values.push_back(xi);
    const bool af = is_mean_ambiguity_free(priors, xi, verification.mean_af_tolerance);
    out.mean_af.push_back(af);
    out.spreads.push_back(expectation_spread(priors, xi));
    out.separating_priors.emplace_back(lower_expectation(priors, xi).vertex,
                                       sublinear_expectation(priors, xi).vertex);
    out.verdict = out.verdict && af;
  }
  out.knightian = verify_equilibrium(economy, out.ad.psi, out.ad.allocation, verification);
  out.consistent = out.verdict ? out.knightian.verdict
                               : !(out.knightian.budgets_ok && out.knightian.optimality_ok);
  return out;
}

ImprovementResult uncertainty_neutral_improvement(const Economy& economy, const StatePrice& psi,
                                                  const std::vector<Plan>& allocation,
                                                  const ImprovementConfig& config) {
  const std::size_t n = economy.num_states();
  const std::size_t agents = economy.num_agents();
  const PriorSet& priors = economy.priors();
  const auto ni = idx(n);
  if (allocation.size() != agents) {
    throw ModelError(fmt::format("improvement: {} plans for {} agents", allocation.size(), agents));
  }
  require_same_size(psi.values(), n, "improvement price");
  const Plan& ebar = economy.aggregate_endowment();
  Plan total = Plan::Zero(ni);
  for (const Plan& c : allocation) {
    require_same_size(c, n, "improvement allocation");
    total += c;
  }
  const double excess = economy.clearing() == Clearing::kEquality
                            ? (total - ebar).cwiseAbs().maxCoeff()
                            : std::max(0.0, (total - ebar).maxCoeff());
  if (excess > 1e-9 * (1.0 + ebar.maxCoeff())) {
    throw ModelError("improvement: allocation is not feasible");
  }

  std::vector<std::size_t> offsets;
  std::size_t dim = 0;
  bool all_affine = true;
  for (std::size_t i = 0; i < agents; ++i) {
    offsets.push_back(dim);
    dim += utility_dimension(economy.agent(i), n);
    all_affine = all_affine &&
                 economy.agent(i).preference.bernoulli.family() == BernoulliFamily::kPiecewiseLinear;
  }
  ConcaveProgram prog(dim);
  for (std::size_t i = 0; i < agents; ++i) {
    prog.lower.segment(idx(offsets[i]), ni).setZero();
    prog.upper.segment(idx(offsets[i]), ni) = ebar;
  }
  for (std::size_t w = 0; w < n; ++w) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(idx(dim));
    for (std::size_t i = 0; i < agents; ++i) row[idx(offsets[i] + w)] = 1.0;
    prog.add_row(row, economy.clearing() == Clearing::kEquality ? RowSense::kEqual : RowSense::kLessEqual,
                 ebar[idx(w)]);
  }
  const Plan q = psi.canonical().values();
  const std::vector<Plan> complement = ambiguity_constraint_rows(priors);
  for (std::size_t i = 0; i < agents; ++i) {
    for (const Plan& a : complement) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(idx(dim));
      const Plan aq = a.cwiseProduct(q);
      row.segment(idx(offsets[i]), ni) = aq;
      prog.add_row(row, RowSense::kEqual, aq.dot(economy.agent(i).endowment));
    }
  }
  std::vector<double> base;
  for (std::size_t i = 0; i < agents; ++i) {
    const Agent& a = economy.agent(i);
    base.push_back(utility_clamped(a, priors, allocation[i], config.floor));
    const std::size_t lift = offsets[i] + n;
    for (ConcavePiece& p : encode_utility(a, priors, prog, offsets[i], lift, base.back(), config.floor)) {
      prog.objective.push_back(std::move(p));
    }
  }

  OptimizerConfig opt = config.optimizer;
  const SolveResult res = maximize_concave(prog, opt);
  ImprovementResult out;
  out.status = res.status;
  out.certificate_gap = res.certificate_gap;
  out.stationarity_tolerance = all_affine ? 0.0 : opt.stationarity_tolerance;
  if (res.status == SolveStatus::kInfeasible) return out;
  std::vector<Plan> d;
  double gain = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < agents; ++i) {
    d.push_back(res.point.segment(idx(offsets[i]), ni).cwiseMax(0.0));
    gain = std::min(gain, utility_clamped(economy.agent(i), priors, d.back(), config.floor) - base[i]);
  }
  out.gain = gain;
  if (gain > config.tolerance) out.improvement = std::move(d);
  return out;
}

std::vector<SweepRecord> kw_correspondence_sweep(const Economy& economy, const PriorFamily& family,
                                                 std::vector<double> grid,
                                                 const SolverConfig& config) {
  if (grid.empty()) throw ModelError("sweep: empty grid");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.front() < 0.0) throw ModelError("sweep: negative epsilon");
  if (grid.front() != 0.0) throw ModelError("sweep: grid must contain epsilon = 0");

  std::vector<SweepRecord> records;
  std::optional<std::vector<Plan>> base;
  for (double eps : grid) {
    SweepRecord rec;
    rec.epsilon = eps;
    rec.clearing = economy.clearing();
    try {
      const PriorSet priors = family(eps);
      if (eps == 0.0 && !priors.is_singleton()) throw ModelError("sweep: family(0) is not a singleton");
      rec.prior_vertices = priors.vertices();
      const Economy ec = economy.with_priors(priors);
      const NoTradeCertificate cert = no_trade_certificate(ec);
      rec.certificate = cert.supportable ? "supportable" : (cert.exact ? "unsupportable" : "inconclusive");
      Equilibrium eq = solve_kw(ec, config);
      if (!eq.converged) {
        rec.failed = true;
        rec.failure = fmt::format("residual {:.3g} above tolerance", eq.residual);
      }
      for (std::size_t i = 0; i < ec.num_agents(); ++i) {
        rec.trade_volume += (eq.allocation[i] - ec.agent(i).endowment).cwiseAbs().sum();
      }
      rec.disposal_l1 = eq.disposal.sum();
      if (eps == 0.0) base = eq.allocation;
      rec.equilibrium = std::move(eq);
    } catch (const ModelError&) {
      if (eps == 0.0) throw;
      rec.failed = true;
      rec.failure = "invalid prior set";
    }
    rec.distance_to_base = base && rec.equilibrium ? sup_distance(rec.equilibrium->allocation, *base)
                                                   : std::numeric_limits<double>::quiet_NaN();
    records.push_back(std::move(rec));
  }
  return records;
}

GenericityResult genericity_experiment(const Economy& economy, const Plan& prior,
                                       const GenericityConfig& config) {
  const std::size_t n = economy.num_states();
  const std::size_t agents = economy.num_agents();
  const Plan& ebar = economy.aggregate_endowment();
  if ((ebar.array() - ebar[0]).abs().maxCoeff() > 1e-12 * (1.0 + std::abs(ebar[0]))) {
    throw ModelError("genericity: template has aggregate uncertainty");
  }
  if (economy.priors().is_singleton()) throw ModelError("genericity: prior set is a singleton");

  std::mt19937_64 rng(config.seed);
  std::exponential_distribution<double> ex(1.0);
  auto shares = [&] {
    while (true) {
      Eigen::VectorXd s(idx(agents));
      for (std::size_t i = 0; i < agents; ++i) s[idx(i)] = ex(rng);
      s /= s.sum();
      if (s.minCoeff() >= config.min_share) return s;
    }
  };

  GenericityResult out;
  std::size_t hits = 0;
  for (std::size_t d = 0; d < config.draws; ++d) {
    std::vector<Plan> endow(agents, Plan(idx(n)));
    Eigen::VectorXd s = shares();
    for (std::size_t w = 0; w < n; ++w) {
      if (!config.constant_shares && w > 0) s = shares();
      for (std::size_t i = 0; i < agents; ++i) endow[i][idx(w)] = s[idx(i)] * ebar[idx(w)];
    }
    const EquivalenceVerdict v =
        ad_kw_equivalence(economy.with_endowments(endow), prior, config.solver, config.verification);
    GenericityDraw draw;
    draw.endowments = std::move(endow);
    draw.verdict = v.verdict;
    draw.consistent = v.consistent;
    draw.max_spread = *std::max_element(v.spreads.begin(), v.spreads.end());
    if (v.verdict) ++hits;
    out.draws.push_back(std::move(draw));
  }
  out.fraction = config.draws == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(config.draws);
  return out;
}

InferenceChain equality_inference_chain(const Economy& economy, const StatePrice& psi,
                                        const std::vector<Plan>& allocation, double tol) {
  if (economy.num_agents() != 2 || allocation.size() != 2) {
    throw ModelError("inference chain: needs exactly two agents");
  }
  const PriorSet& priors = economy.priors();
  const std::size_t n = economy.num_states();
  InferenceChain out;
  out.budgets_bind = true;
  Plan z = Plan::Zero(idx(n));
  for (std::size_t i = 0; i < 2; ++i) {
    out.budgets_bind = out.budgets_bind &&
                       std::abs(budget_value(psi, priors, economy.agent(i).endowment, allocation[i])) <= tol;
    z += allocation[i] - economy.agent(i).endowment;
  }
  out.clears_exactly = z.cwiseAbs().maxCoeff() <= tol;
  const Plan xi = psi.values().cwiseProduct(allocation[0] - economy.agent(0).endowment);
  // Spread is bounded by the two budget values when z = 0; allow their sum.
  out.xi_mean_af = is_mean_ambiguity_free(priors, xi, 4.0 * tol * (1.0 + psi.values().maxCoeff()));
  out.price_positive = (psi.values().array() > 0.0).all();
  const SubspaceBasis basis = mean_ambiguity_free_basis(priors);
  out.only_constants = basis.dimension() == 1 && basis.contains(Plan::Ones(idx(n)));
  const double scale = psi.values().minCoeff();
  out.no_trade = out.price_positive &&
                 (allocation[0] - economy.agent(0).endowment).cwiseAbs().maxCoeff() <= 4.0 * tol / scale;
  const bool first = !(out.budgets_bind && out.clears_exactly) || out.xi_mean_af;
  const bool second = !(out.budgets_bind && out.clears_exactly && out.price_positive && out.only_constants) ||
                      out.no_trade;
  out.holds = first && second;
  return out;
}

}  // namespace kw
