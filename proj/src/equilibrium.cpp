#include "kw/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "kw/linear_program.hpp"

namespace kw {

namespace {

using Eigen::Index;
constexpr double kInf = std::numeric_limits<double>::infinity();

Index idx(std::size_t i) { return static_cast<Index>(i); }

// All points of the simplex with coordinates in {0, 1/k, ..., 1}.
std::vector<Plan> simplex_grid(std::size_t n, std::size_t k, bool interior_only) {
  std::vector<Plan> out;
  std::vector<std::size_t> parts(n, 0);
  const std::size_t min_part = interior_only ? 1 : 0;
  if (interior_only && k < n) return out;
  auto rec = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
    if (pos + 1 == n) {
      parts[pos] = left;
      Plan p(idx(n));
      for (std::size_t j = 0; j < n; ++j) {
        p[idx(j)] = static_cast<double>(parts[j]) / static_cast<double>(k);
      }
      out.push_back(p);
      return;
    }
    const std::size_t reserve = min_part * (n - pos - 1);
    for (std::size_t v = min_part; v + reserve <= left; ++v) {
      parts[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  if (n == 1) {
    out.push_back(Plan::Ones(1));
    return out;
  }
  rec(rec, 0, k);
  return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& a, double temperature) {
  const double m = a.maxCoeff();
  Eigen::VectorXd e = ((a.array() - m) / temperature).exp().matrix();
  return e / e.sum();
}

// Weights lambda on generators and mu on price-weighted vertices with
// sum_j lambda_j g_j = sum_k mu_k (P_k . psi), sum lambda = 1.
std::optional<Plan> support_at_price(const std::vector<Plan>& gens, const PriorSet& priors,
                                     const Plan& psi) {
  const std::size_t j = gens.size();
  const std::size_t k = priors.size();
  const std::size_t n = priors.num_states();
  LinearSystem sys(j + k);
  for (std::size_t v = 0; v < j + k; ++v) sys.set_nonnegative(v);
  for (std::size_t w = 0; w < n; ++w) {
    Eigen::VectorXd row(idx(j + k));
    for (std::size_t a = 0; a < j; ++a) row[idx(a)] = gens[a][idx(w)];
    for (std::size_t b = 0; b < k; ++b) row[idx(j + b)] = -priors.vertex(b)[idx(w)] * psi[idx(w)];
    sys.add_row(row, RowSense::kEqual, 0.0);
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(idx(j + k));
  sum.head(idx(j)).setOnes();
  sys.add_row(sum, RowSense::kEqual, 1.0);
  const FeasibilityResult fr = lp_feasibility(sys);
  if (!fr.feasible) return std::nullopt;
  Plan prior = Plan::Zero(idx(n));
  double total = 0.0;
  for (std::size_t b = 0; b < k; ++b) {
    const double mu = std::max(0.0, fr.witness[idx(j + b)]);
    prior += mu * priors.vertex(b);
    total += mu;
  }
  if (total > 0.0) prior /= total;
  return prior;
}

// Joint system in w = 1/psi for one generator per agent:
// g^i . w = sum_k mu^i_k P_k, w >= 1.
LinearSystem joint_system(const std::vector<Plan>& gens, const PriorSet& priors) {
  const std::size_t n = priors.num_states();
  const std::size_t k = priors.size();
  const std::size_t agents = gens.size();
  const std::size_t vars = n + agents * k;
  LinearSystem sys(vars);
  for (std::size_t v = 0; v < vars; ++v) sys.set_nonnegative(v);
  for (std::size_t i = 0; i < agents; ++i) {
    for (std::size_t w = 0; w < n; ++w) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(idx(vars));
      row[idx(w)] = gens[i][idx(w)];
      for (std::size_t b = 0; b < k; ++b) row[idx(n + i * k + b)] = -priors.vertex(b)[idx(w)];
      sys.add_row(row, RowSense::kEqual, 0.0);
    }
  }
  for (std::size_t w = 0; w < n; ++w) {
    sys.add_row(Eigen::VectorXd::Unit(idx(vars), idx(w)), RowSense::kGreaterEqual, 1.0);
  }
  return sys;
}

// Range of w_w / w_0 over {g . w in cone(P), w_0 = 1}, per state w >= 1.
std::vector<std::pair<double, double>> ratio_range(const Plan& g, const PriorSet& priors,
                                                   bool& feasible) {
  const std::size_t n = priors.num_states();
  const std::size_t k = priors.size();
  LinearSystem sys(n + k);
  for (std::size_t v = 0; v < n + k; ++v) sys.set_nonnegative(v);
  for (std::size_t w = 0; w < n; ++w) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(idx(n + k));
    row[idx(w)] = g[idx(w)];
    for (std::size_t b = 0; b < k; ++b) row[idx(n + b)] = -priors.vertex(b)[idx(w)];
    sys.add_row(row, RowSense::kEqual, 0.0);
  }
  sys.add_row(Eigen::VectorXd::Unit(idx(n + k), 0), RowSense::kEqual, 1.0);
  std::vector<std::pair<double, double>> out;
  feasible = lp_feasibility(sys).feasible;
  for (std::size_t w = 1; w < n; ++w) {
    if (!feasible) {
      out.emplace_back(kInf, -kInf);
      continue;
    }
    const Eigen::VectorXd obj = Eigen::VectorXd::Unit(idx(n + k), idx(w));
    const LpResult hi = solve_lp(sys, obj);
    const LpResult lo = solve_lp(sys, -obj);
    out.emplace_back(lo.status == LpStatus::kOptimal ? -lo.value : 0.0,
                     hi.status == LpStatus::kOptimal ? hi.value : kInf);
  }
  return out;
}

}  // namespace

double equilibrium_residual(const Plan& z, Clearing clearing) {
  double r = std::max(0.0, z.maxCoeff());
  if (clearing == Clearing::kEquality) r += z.cwiseAbs().maxCoeff();
  return r;
}

NoTradeCertificate no_trade_certificate(const Economy& economy,
                                        const std::optional<StatePrice>& psi) {
  const PriorSet& priors = economy.priors();
  const std::size_t n = economy.num_states();
  NoTradeCertificate cert;
  std::size_t combos = 1;
  for (const Agent& a : economy.agents()) {
    AgentCone cone;
    cone.generators = superdifferential(a, priors, a.endowment);
    std::vector<std::pair<double, double>> hull(n > 0 ? n - 1 : 0, {kInf, -kInf});
    for (const Plan& g : cone.generators) {
      bool ok = false;
      const auto r = ratio_range(g, priors, ok);
      if (!ok) continue;
      cone.supportable_alone = true;
      for (std::size_t w = 0; w + 1 < n; ++w) {
        hull[w].first = std::min(hull[w].first, r[w].first);
        hull[w].second = std::max(hull[w].second, r[w].second);
      }
    }
    cone.ratio_intervals = hull;
    combos = std::min<std::size_t>(combos * cone.generators.size(), 1u << 20);
    cert.agents.push_back(std::move(cone));
  }

  auto check_at = [&](const StatePrice& p) {
    bool all = true;
    for (std::size_t i = 0; i < cert.agents.size(); ++i) {
      const auto prior = support_at_price(cert.agents[i].generators, priors, p.values());
      cert.agents[i].supported = prior.has_value();
      cert.agents[i].supporting_prior = prior ? *prior : Plan();
      all = all && prior.has_value();
    }
    return all;
  };

  if (psi) {
    cert.method = "given-price";
    cert.supportable = check_at(*psi);
    if (cert.supportable) cert.psi = *psi;
    return cert;
  }

  const bool single = combos == 1;
  cert.method = "joint-lp";
  if (combos <= 4096) {
    std::vector<std::size_t> pick(cert.agents.size(), 0);
    for (std::size_t c = 0; c < combos; ++c) {
      std::size_t rest = c;
      std::vector<Plan> gens;
      for (std::size_t i = 0; i < cert.agents.size(); ++i) {
        const std::size_t m = cert.agents[i].generators.size();
        pick[i] = rest % m;
        rest /= m;
        gens.push_back(cert.agents[i].generators[pick[i]]);
      }
      const LinearSystem sys = joint_system(gens, priors);
      const FeasibilityResult fr = lp_feasibility(sys);
      if (!fr.feasible) {
        if (single) cert.farkas = fr.certificate;
        continue;
      }
      const Plan w = fr.witness.head(idx(n)).cwiseMax(1.0);
      const StatePrice p = StatePrice(w.cwiseInverse()).canonical();
      if (check_at(p)) {
        cert.supportable = true;
        cert.psi = p;
        return cert;
      }
    }
    if (single) {
      check_at(StatePrice::uniform(n));
      return cert;
    }
  }
  // Several generators per agent: the joint condition is bilinear, so fall
  // back to scanning interior prices.
  cert.method = "price-grid";
  cert.exact = false;
  std::size_t k = n;
  while (true) {
    const double count = std::tgamma(static_cast<double>(k + 1)) /
                         (std::tgamma(static_cast<double>(n)) * std::tgamma(static_cast<double>(k - n + 2)));
    if (count > 5000.0 || k > 400) break;
    ++k;
  }
  for (const Plan& q : simplex_grid(n, k, true)) {
    const StatePrice p(q);
    if (check_at(p)) {
      cert.supportable = true;
      cert.exact = true;
      cert.psi = p;
      return cert;
    }
  }
  check_at(StatePrice::uniform(n));
  return cert;
}

namespace {

struct Candidate {
  StatePrice psi = StatePrice::uniform(1);
  ExcessDemand ed;
  double residual = kInf;
  double disposal = kInf;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.residual < b.residual) return true;
  return a.residual == b.residual && a.disposal < b.disposal - 1e-15;
}

Equilibrium to_equilibrium(const Economy& economy, const Candidate& c, std::string method) {
  Equilibrium eq;
  eq.psi = c.psi;
  for (const DemandResult& d : c.ed.per_agent) eq.allocation.push_back(d.plan);
  eq.excess_demand = c.ed.z;
  eq.disposal = (-c.ed.z).cwiseMax(0.0);
  eq.residual = c.residual;
  eq.worst_prior =
      economy.priors().vertex(sublinear_expectation(economy.priors(), c.psi.values().cwiseProduct(c.ed.z)).vertex);
  eq.method = std::move(method);
  return eq;
}

}  // namespace

Equilibrium solve_kw(const Economy& economy, const SolverConfig& config) {
  if (!(config.damping > 0.0 && config.damping <= 1.0)) {
    throw ModelError("solver: damping must lie in (0, 1]");
  }
  if (!(config.residual_tolerance > 0.0) || !(config.temperature > 0.0)) {
    throw ModelError("solver: tolerances and temperature must be positive");
  }
  const std::size_t n = economy.num_states();
  const PriorSet& priors = economy.priors();

  if (config.no_trade_screen) {
    const NoTradeCertificate cert = no_trade_certificate(economy);
    if (cert.supportable) {
      Equilibrium eq;
      eq.psi = *cert.psi;
      for (const Agent& a : economy.agents()) eq.allocation.push_back(a.endowment);
      eq.excess_demand = Plan::Zero(idx(n));
      eq.disposal = Plan::Zero(idx(n));
      eq.worst_prior = priors.vertex(0);
      eq.residual = 0.0;
      eq.converged = true;
      eq.method = "no-trade";
      return eq;
    }
  }

  DemandConfig dcfg = config.demand;
  dcfg.optimizer.certify = false;
  std::size_t evaluations = 0;
  auto evaluate = [&](const Plan& p) {
    Candidate c;
    c.psi = StatePrice(p).canonical();
    c.ed = excess_demand(economy, c.psi, dcfg);
    c.residual = equilibrium_residual(c.ed.z, economy.clearing());
    c.disposal = (-c.ed.z).cwiseMax(0.0).sum();
    ++evaluations;
    return c;
  };

  Plan psi = Plan::Constant(idx(n), 1.0 / static_cast<double>(n));
  if (config.seed != 0) {
    std::mt19937_64 rng(config.seed);
    std::exponential_distribution<double> ex(1.0);
    Plan d(idx(n));
    for (Index w = 0; w < d.size(); ++w) d[w] = ex(rng);
    psi = 0.5 * psi + 0.5 * d / d.sum();
  }

  // Phase 1: damped fictitious play of the two price players.
  const double scale = economy.aggregate_endowment().maxCoeff();
  Candidate best;
  double temperature = config.temperature;
  std::size_t iterations = 0;
  for (std::size_t k = 0; k < config.max_outer_iterations; ++k) {
    ++iterations;
    Candidate cur = evaluate(psi);
    const bool done = cur.residual <= config.residual_tolerance;
    const Plan z = cur.ed.z / scale;
    const Plan cz = cur.psi.values().cwiseProduct(z);
    if (k == 0 || better(cur, best)) best = std::move(cur);
    if (done) break;
    Eigen::VectorXd ev(idx(priors.size()));
    for (std::size_t j = 0; j < priors.size(); ++j) ev[idx(j)] = priors.vertex(j).dot(cz);
    const Eigen::VectorXd kappa = softmax(ev * static_cast<double>(n), temperature);
    Plan pbar = Plan::Zero(idx(n));
    for (std::size_t j = 0; j < priors.size(); ++j) pbar += kappa[idx(j)] * priors.vertex(j);
    const Plan target = softmax(pbar.cwiseProduct(z) * static_cast<double>(n), temperature);
    const double gamma = config.damping / (1.0 + static_cast<double>(k) / config.damping_horizon);
    psi = (1.0 - gamma) * psi + gamma * target;
    temperature *= config.annealing;
  }
  std::string method = "fictitious-play";

  // Phase 2: Newton on the excess demand in log-price coordinates. Demand is
  // homogeneous of degree zero, so log psi_0 stays fixed and the n x (n-1)
  // system is solved in the least-squares sense.
  if (best.residual > config.residual_tolerance && config.newton_iterations > 0) {
    const double h = 1e-6;
    auto merit = [](const Candidate& c) { return c.ed.z.cwiseAbs().maxCoeff(); };
    Candidate cur = best;
    for (std::size_t k = 0; k < config.newton_iterations; ++k) {
      ++iterations;
      const Plan logp = cur.psi.values().array().log().matrix();
      Eigen::MatrixXd J(idx(n), idx(n - 1));
      for (std::size_t w = 1; w < n; ++w) {
        Plan q = logp;
        q[idx(w)] += h;
        J.col(idx(w - 1)) = (evaluate(q.array().exp().matrix()).ed.z - cur.ed.z) / h;
      }
      Plan step = Plan::Zero(idx(n));
      step.tail(idx(n - 1)) = -Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(J).solve(cur.ed.z);
      if (!step.allFinite()) break;
      // Cap the step so prices move by at most a factor e per iteration.
      double t = std::min(1.0, 1.0 / std::max(step.cwiseAbs().maxCoeff(), 1e-300));
      bool accepted = false;
      for (int ls = 0; ls < 20; ++ls, t *= 0.5) {
        Candidate next = evaluate((logp + t * step).array().exp().matrix());
        if (merit(next) < merit(cur)) {
          cur = std::move(next);
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      if (better(cur, best)) {
        best = cur;
        method = "newton";
      }
      if (best.residual <= config.residual_tolerance) break;
    }
  }

  // Phase 3: zooming grid search of the simplex around the best price.
  if (best.residual > config.residual_tolerance) {
    method = "refinement";
    std::size_t k = config.refinement_subdivisions;
    if (k == 0) k = n == 2 ? 8 : (n <= 4 ? 4 : 2);
    const std::vector<Plan> grid = simplex_grid(n, k, false);
    double s = 0.5;
    std::size_t halvings = 0, moves = 0;
    while (best.residual > config.residual_tolerance && halvings < config.refinement_depth &&
           moves < 4 * config.refinement_depth) {
      const Plan center = best.psi.values();
      bool improved = false;
      for (const Plan& q : grid) {
        const Plan p = center + s * (q - center);
        if ((p - center).cwiseAbs().maxCoeff() == 0.0) continue;
        Candidate c = evaluate(p);
        if (better(c, best)) {
          best = std::move(c);
          improved = true;
          if (best.residual <= config.residual_tolerance) break;
        }
      }
      ++iterations;
      if (improved) {
        ++moves;
      } else {
        s *= 0.5;
        ++halvings;
      }
    }
  }
  Equilibrium eq = to_equilibrium(economy, best, method);
  eq.converged = best.residual <= config.residual_tolerance;
  eq.iterations = iterations;
  eq.demand_evaluations = evaluations * economy.num_agents();
  return eq;
}

Equilibrium solve_ad(const Economy& economy, const Plan& prior, const SolverConfig& config) {
  const std::size_t n = economy.num_states();
  const std::size_t agents = economy.num_agents();
  require_same_size(prior, n, "prior");
  if ((prior.array() <= 0.0).any() || std::abs(prior.sum() - 1.0) > 1e-9) {
    throw ModelError("solve_ad: prior must be a full-support probability vector");
  }
  for (std::size_t i = 0; i < agents; ++i) {
    if (!economy.agent(i).preference.bernoulli.differentiable()) {
      throw ModelError(fmt::format(
          "solve_ad: agent {} has a non-differentiable Bernoulli utility", i));
    }
  }
  const Plan& ebar = economy.aggregate_endowment();

  // Pareto allocation for weights alpha: alpha_i u_i'(c_iw) = lambda_w.
  auto allocate = [&](const Eigen::VectorXd& alpha, Plan& lambda) {
    std::vector<Plan> c(agents, Plan(idx(n)));
    lambda.resize(idx(n));
    for (std::size_t w = 0; w < n; ++w) {
      const double target = ebar[idx(w)];
      auto total = [&](double lam) {
        double s = 0.0;
        for (std::size_t i = 0; i < agents; ++i) {
          s += economy.agent(i).preference.bernoulli.inverse_marginal(lam / alpha[idx(i)]);
        }
        return s;
      };
      double lo = 1.0, hi = 1.0;
      while (total(lo) < target && lo > 1e-300) lo *= 0.5;
      while (total(hi) > target && hi < 1e300) hi *= 2.0;
      for (int it = 0; it < 400 && hi / lo - 1.0 > 1e-15; ++it) {
        const double mid = std::sqrt(lo * hi);
        (total(mid) > target ? lo : hi) = mid;
      }
      const double lam = std::sqrt(lo * hi);
      lambda[idx(w)] = lam;
      for (std::size_t i = 0; i < agents; ++i) {
        c[i][idx(w)] = economy.agent(i).preference.bernoulli.inverse_marginal(lam / alpha[idx(i)]);
      }
    }
    return c;
  };
  auto surplus = [&](const Eigen::VectorXd& alpha, std::vector<Plan>& c, Plan& psi) {
    Plan lambda;
    c = allocate(alpha, lambda);
    psi = lambda / lambda.sum();
    Eigen::VectorXd s(idx(agents));
    for (std::size_t i = 0; i < agents; ++i) {
      s[idx(i)] = prior.cwiseProduct(psi).dot(c[i] - economy.agent(i).endowment);
    }
    return s;
  };

  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(idx(agents), 1.0 / static_cast<double>(agents));
  std::vector<Plan> c;
  Plan psi;
  Eigen::VectorXd s = surplus(alpha, c, psi);
  const double wealth = prior.cwiseProduct(psi).dot(ebar);
  const double tol = config.negishi_tolerance * (1.0 + wealth);
  std::size_t it = 0;
  for (; it < config.negishi_iterations && s.cwiseAbs().maxCoeff() > tol; ++it) {
    const double h = 1e-6;
    Eigen::MatrixXd jac(idx(agents), idx(agents));
    for (std::size_t j = 0; j < agents; ++j) {
      Eigen::VectorXd a = alpha;
      a[idx(j)] *= std::exp(h);
      a /= a.sum();
      std::vector<Plan> cj;
      Plan pj;
      jac.col(idx(j)) = (surplus(a, cj, pj) - s) / h;
    }
    const Eigen::VectorXd step = -jac.completeOrthogonalDecomposition().solve(s);
    const double norm = s.cwiseAbs().maxCoeff();
    bool accepted = false;
    double t = 1.0;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      Eigen::VectorXd a = (alpha.array().log() + t * step.array()).exp().matrix();
      a /= a.sum();
      std::vector<Plan> cn;
      Plan pn;
      const Eigen::VectorXd sn = surplus(a, cn, pn);
      if (sn.allFinite() && sn.cwiseAbs().maxCoeff() < norm) {
        alpha = a;
        s = sn;
        c = std::move(cn);
        psi = pn;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Agents running a surplus get less weight.
      Eigen::VectorXd a = (alpha.array() * (-0.5 * s.array() / (wealth + norm)).exp()).matrix();
      a /= a.sum();
      alpha = a;
      s = surplus(alpha, c, psi);
    }
  }

  Equilibrium eq;
  eq.psi = StatePrice(psi);
  eq.allocation = c;
  eq.worst_prior = prior;
  eq.excess_demand = Plan::Zero(idx(n));
  for (std::size_t i = 0; i < agents; ++i) eq.excess_demand += c[i] - economy.agent(i).endowment;
  eq.disposal = (-eq.excess_demand).cwiseMax(0.0);
  eq.welfare_weights = alpha;
  eq.residual = std::max(s.cwiseAbs().maxCoeff(), eq.excess_demand.cwiseAbs().maxCoeff());
  eq.converged = s.cwiseAbs().maxCoeff() <= tol && eq.excess_demand.cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + ebar.maxCoeff());
  eq.method = "negishi";
  eq.iterations = it;
  return eq;
}

VerificationReport verify_equilibrium(const Economy& economy, const StatePrice& psi,
                                      const std::vector<Plan>& allocation,
                                      const VerificationConfig& config) {
  const std::size_t n = economy.num_states();
  const PriorSet& priors = economy.priors();
  if (allocation.size() != economy.num_agents()) {
    throw ModelError(fmt::format("verify: {} plans for {} agents", allocation.size(),
                                 economy.num_agents()));
  }
  require_same_size(psi.values(), n, "verify price");
  const StatePrice canon = psi.canonical();
  VerificationReport rep;
  Plan z = Plan::Zero(idx(n));
  Plan xi_sum = Plan::Zero(idx(n));
  double psi_sum = 0.0;
  for (std::size_t i = 0; i < economy.num_agents(); ++i) {
    const Agent& a = economy.agent(i);
    const Plan& c = allocation[i];
    require_same_size(c, n, "verify allocation");
    if ((c.array() < 0.0).any()) throw ModelError(fmt::format("verify: agent {} consumes a negative amount", i));
    rep.budget_slack.push_back(budget_value(psi, priors, a.endowment, c));
    rep.canonical_budget_slack.push_back(budget_value(canon, priors, a.endowment, c));
    const DemandResult d = demand(economy, i, canon, config.demand);
    rep.recomputed_demand.push_back(d.plan);
    rep.optimality_gap.push_back(d.utility_value - utility_clamped(a, priors, c, config.demand.floor));
    const Plan xi = psi.values().cwiseProduct(c - a.endowment);
    const Plan xi_c = canon.values().cwiseProduct(c - a.endowment);
    rep.net_trade_values.push_back(xi);
    rep.mean_af.push_back(is_mean_ambiguity_free(priors, xi_c, config.mean_af_tolerance));
    xi_sum += xi_c;
    psi_sum += sublinear_expectation(priors, xi_c).value;
    z += c - a.endowment;
    rep.budgets_ok = rep.budgets_ok && rep.canonical_budget_slack.back() <= config.budget_tolerance;
    rep.optimality_ok = rep.optimality_ok && rep.optimality_gap.back() <= config.optimality_tolerance;
  }
  rep.feasibility_residual = economy.clearing() == Clearing::kEquality
                                 ? z.cwiseAbs().maxCoeff()
                                 : std::max(0.0, z.maxCoeff());
  rep.feasibility_ok = rep.feasibility_residual <= config.feasibility_tolerance;
  rep.no_arbitrage_gap = std::abs(sublinear_expectation(priors, xi_sum).value - psi_sum);
  rep.no_arbitrage_holds = rep.no_arbitrage_gap <= config.no_arbitrage_tolerance;
  rep.verdict = rep.budgets_ok && rep.optimality_ok && rep.feasibility_ok;
  return rep;
}

}  // namespace kw
