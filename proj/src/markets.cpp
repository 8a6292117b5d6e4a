#include "kw/markets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

namespace kw {

std::string to_string(Clearing clearing) {
  return clearing == Clearing::kEquality ? "equality" : "disposal";
}

Clearing parse_clearing(const std::string& text) {
  if (text == "disposal" || text == "free-disposal" || text == "free_disposal") {
    return Clearing::kFreeDisposal;
  }
  if (text == "equality") return Clearing::kEquality;
  throw ModelError(fmt::format("unknown clearing convention '{}' (expected disposal or equality)",
                               text));
}

Economy::Economy(std::vector<Agent> agents, PriorSet priors, Clearing clearing)
    : agents_(std::move(agents)), priors_(std::move(priors)), clearing_(clearing) {
  if (agents_.empty()) throw ModelError("economy: no agents");
  aggregate_ = Plan::Zero(static_cast<Eigen::Index>(priors_.num_states()));
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    try {
      validate(agents_[i], priors_);
    } catch (const ModelError& err) {
      throw ModelError(fmt::format("agent {}: {}", i, err.what()));
    }
    aggregate_ += agents_[i].endowment;
  }
}

Economy Economy::with_priors(PriorSet priors) const {
  return Economy(agents_, std::move(priors), clearing_);
}

Economy Economy::with_clearing(Clearing clearing) const {
  return Economy(agents_, priors_, clearing);
}

Economy Economy::with_endowments(const std::vector<Plan>& endowments) const {
  if (endowments.size() != agents_.size()) throw ModelError("economy: endowment count mismatch");
  std::vector<Agent> agents = agents_;
  for (std::size_t i = 0; i < agents.size(); ++i) agents[i].endowment = endowments[i];
  return Economy(std::move(agents), priors_, clearing_);
}

double budget_value(const StatePrice& psi, const PriorSet& priors, const Plan& e, const Plan& c) {
  require_same_size(e, priors.num_states(), "budget endowment");
  require_same_size(c, priors.num_states(), "budget plan");
  return price(psi, priors, c - e);
}

std::size_t utility_dimension(const Agent& agent, std::size_t states) {
  const bool pl = agent.preference.bernoulli.family() == BernoulliFamily::kPiecewiseLinear;
  return pl ? 2 * states : states;
}

namespace {

using Eigen::Index;

// Vertex expectations m_k as functions of the program variables, and the
// way the preference combines them.
struct Combiner {
  PreferenceKind kind;
  std::vector<std::size_t> vertices;  // maxmin / anchored pieces
  std::vector<double> offsets;        // per piece in `vertices`
  std::vector<double> weights;        // smooth
  AmbiguityIndex index;
};

Combiner make_combiner(const Agent& agent, const PriorSet& priors, double shift) {
  Combiner c;
  const PreferenceSpec& pref = agent.preference;
  c.kind = pref.kind;
  c.index = pref.index;
  c.weights = pref.weights;
  if (pref.kind == PreferenceKind::kSmooth) {
    c.offsets.push_back(-shift);
    return c;
  }
  c.vertices = effective_selection(agent, priors);
  Plan ua;
  if (pref.kind == PreferenceKind::kAnchored) {
    ua.resize(pref.anchor->size());
    for (Index w = 0; w < ua.size(); ++w) ua[w] = pref.bernoulli.value((*pref.anchor)[w]);
  }
  for (std::size_t k : c.vertices) {
    double off = -shift;
    if (pref.kind == PreferenceKind::kAnchored) off -= priors.vertex(k).dot(ua);
    c.offsets.push_back(off);
  }
  return c;
}

}  // namespace

std::vector<ConcavePiece> encode_utility(const Agent& agent, const PriorSet& priors,
                                         ConcaveProgram& program, std::size_t offset,
                                         std::size_t lift_offset, double shift, double floor) {
  const auto n = static_cast<Index>(priors.num_states());
  const auto dim = static_cast<Index>(program.dim);
  const auto off = static_cast<Index>(offset);
  const Bernoulli u = agent.preference.bernoulli;
  const Combiner comb = make_combiner(agent, priors, shift);
  std::vector<ConcavePiece> pieces;

  if (u.family() == BernoulliFamily::kPiecewiseLinear) {
    const auto lift = static_cast<Index>(lift_offset);
    const auto affine = u.affine_pieces();
    for (Index w = 0; w < n; ++w) {
      for (const auto& [alpha, slope] : affine) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
        row[lift + w] = 1.0;
        row[off + w] = -slope;
        program.add_row(row, RowSense::kLessEqual, alpha);
      }
      program.lower[lift + w] = -1.0;
      if (std::isfinite(program.upper[off + w])) {
        program.upper[lift + w] = u.value(std::max(program.upper[off + w], 0.0)) + 1.0;
      }
    }
    auto lifted = [&](const Plan& p) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(dim);
      a.segment(lift, n) = p;
      return a;
    };
    if (comb.kind != PreferenceKind::kSmooth) {
      for (std::size_t j = 0; j < comb.vertices.size(); ++j) {
        pieces.push_back(ConcavePiece::affine(lifted(priors.vertex(comb.vertices[j])), comb.offsets[j]));
      }
      return pieces;
    }
    std::vector<Eigen::VectorXd> rows;
    for (std::size_t k = 0; k < priors.size(); ++k) rows.push_back(lifted(priors.vertex(k)));
    if (comb.index.theta == 0.0) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(dim);
      for (std::size_t k = 0; k < rows.size(); ++k) a += comb.weights[k] * rows[k];
      pieces.push_back(ConcavePiece::affine(a, comb.offsets[0]));
      return pieces;
    }
    ConcavePiece piece;
    piece.eval = [rows, comb, dim](const Eigen::VectorXd& x) {
      PieceValue pv{comb.offsets[0], Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim)};
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const double m = rows[k].dot(x);
        const double mu = comb.weights[k];
        pv.value += mu * comb.index.value(m);
        pv.gradient += mu * comb.index.derivative(m) * rows[k];
        pv.hessian += mu * comb.index.second_derivative(m) * rows[k] * rows[k].transpose();
      }
      return pv;
    };
    pieces.push_back(std::move(piece));
    return pieces;
  }

  // Smooth Bernoulli: per-vertex E^P u(c) with its derivatives.
  struct StateTerms {
    Plan value, d1, d2;
  };
  auto terms = [u, floor, off, n](const Eigen::VectorXd& x) {
    StateTerms s{Plan(n), Plan(n), Plan(n)};
    for (Index w = 0; w < n; ++w) {
      const double c = x[off + w];
      s.value[w] = u.value_clamped(c, floor);
      s.d1[w] = u.derivative(c, floor);
      s.d2[w] = u.second_derivative(c, floor);
    }
    return s;
  };
  if (comb.kind != PreferenceKind::kSmooth) {
    for (std::size_t j = 0; j < comb.vertices.size(); ++j) {
      const Plan p = priors.vertex(comb.vertices[j]);
      const double shift_j = comb.offsets[j];
      ConcavePiece piece;
      piece.eval = [p, shift_j, terms, off, n, dim](const Eigen::VectorXd& x) {
        const StateTerms s = terms(x);
        PieceValue pv{p.dot(s.value) + shift_j, Eigen::VectorXd::Zero(dim),
                      Eigen::MatrixXd::Zero(dim, dim)};
        pv.gradient.segment(off, n) = p.cwiseProduct(s.d1);
        pv.hessian.block(off, off, n, n).diagonal() = p.cwiseProduct(s.d2);
        return pv;
      };
      pieces.push_back(std::move(piece));
    }
    return pieces;
  }
  const std::vector<Plan> vertices = priors.vertices();
  ConcavePiece piece;
  piece.eval = [vertices, comb, terms, off, n, dim](const Eigen::VectorXd& x) {
    const StateTerms s = terms(x);
    PieceValue pv{comb.offsets[0], Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim)};
    for (std::size_t k = 0; k < vertices.size(); ++k) {
      const double mu = comb.weights[k];
      if (mu == 0.0) continue;
      const double m = vertices[k].dot(s.value);
      const Plan g = vertices[k].cwiseProduct(s.d1);
      const double d1 = comb.index.derivative(m);
      pv.value += mu * comb.index.value(m);
      pv.gradient.segment(off, n) += mu * d1 * g;
      pv.hessian.block(off, off, n, n) +=
          mu * (comb.index.second_derivative(m) * g * g.transpose());
      pv.hessian.block(off, off, n, n).diagonal() += mu * d1 * vertices[k].cwiseProduct(s.d2);
    }
    return pv;
  };
  pieces.push_back(std::move(piece));
  return pieces;
}

ConcaveProgram consumer_program(const Agent& agent, const PriorSet& priors, const StatePrice& psi,
                                const Plan& upper, double floor) {
  const std::size_t n = priors.num_states();
  require_same_size(psi.values(), n, "state price");
  require_same_size(upper, n, "truncation box");
  const Plan q = psi.canonical().values();
  const auto ni = static_cast<Index>(n);
  const std::size_t dim = utility_dimension(agent, n);
  ConcaveProgram prog(dim);
  prog.lower.head(ni).setZero();
  prog.upper.head(ni) = upper;
  for (std::size_t k = 0; k < priors.size(); ++k) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Index>(dim));
    row.head(ni) = priors.vertex(k).cwiseProduct(q);
    prog.add_row(row, RowSense::kLessEqual, row.head(ni).dot(agent.endowment));
  }
  prog.objective = encode_utility(agent, priors, prog, 0, n, 0.0, floor);
  return prog;
}

DemandResult demand(const Agent& agent, const PriorSet& priors, const StatePrice& psi,
                    const Plan& upper, const DemandConfig& config) {
  const std::size_t n = priors.num_states();
  const auto ni = static_cast<Index>(n);
  if (psi.is_zero()) throw ModelError("demand: zero state price");
  if ((agent.endowment.array() > upper.array()).any()) {
    throw ModelError("demand: endowment lies outside the truncation box");
  }
  ConcaveProgram prog = consumer_program(agent, priors, psi, upper, config.floor);
  SolveResult res = maximize_concave(prog, config.optimizer);
  if (res.status == SolveStatus::kInfeasible) {
    throw ModelError(fmt::format("demand: consumer problem infeasible ({})", res.message));
  }

  DemandResult out;
  out.status = res.status;
  out.certificate_gap = res.certificate_gap;
  if (res.row_multipliers.size() > 0) out.kkt = res.row_multipliers;

  if (!is_strictly_concave(agent, priors)) {
    // Optimal set may be a face: pick the least-norm net trade on it.
    const double best = res.value;
    ConcaveProgram tie = prog;
    tie.objective.clear();
    const double slack = config.tie_tolerance * (1.0 + std::abs(best));
    for (const ConcavePiece& p : prog.objective) tie.levels.push_back({p, best - slack});
    const Plan e = agent.endowment;
    const auto dim = static_cast<Index>(prog.dim);
    ConcavePiece dist;
    dist.eval = [e, ni, dim](const Eigen::VectorXd& x) {
      PieceValue pv{-(x.head(ni) - e).squaredNorm(), Eigen::VectorXd::Zero(dim),
                    Eigen::MatrixXd::Zero(dim, dim)};
      pv.gradient.head(ni) = -2.0 * (x.head(ni) - e);
      pv.hessian.topLeftCorner(ni, ni).diagonal().setConstant(-2.0);
      return pv;
    };
    tie.objective.push_back(std::move(dist));
    OptimizerConfig cfg = config.optimizer;
    cfg.start = res.point;
    cfg.certify = false;
    const SolveResult refined = maximize_concave(tie, cfg);
    if (refined.status == SolveStatus::kOptimal) {
      res.point = refined.point;
      out.tie_break_applied = true;
    }
  }

  out.plan = res.point.head(ni).cwiseMax(0.0);
  out.utility_value = utility_clamped(agent, priors, out.plan, config.floor);
  out.net_trade_value = psi.values().cwiseProduct(out.plan - agent.endowment);

  const Plan q = psi.canonical().values();
  std::vector<double> bv;
  double bmax = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < priors.size(); ++k) {
    bv.push_back(priors.vertex(k).cwiseProduct(q).dot(out.plan - agent.endowment));
    bmax = std::max(bmax, bv.back());
  }
  for (std::size_t k = 0; k < priors.size(); ++k) {
    if (bv[k] >= bmax - 1e-9) out.active_budget_priors.push_back(k);
  }
  const Eigen::VectorXd eu = vertex_expected_utilities(agent, priors, out.plan, config.floor);
  Eigen::VectorXd shifted = eu;
  if (agent.preference.kind == PreferenceKind::kAnchored) {
    shifted -= vertex_expected_utilities(agent, priors, *agent.preference.anchor);
  }
  const std::vector<std::size_t> sel = effective_selection(agent, priors);
  double umin = std::numeric_limits<double>::infinity();
  for (std::size_t k : sel) umin = std::min(umin, shifted[static_cast<Index>(k)]);
  for (std::size_t k : sel) {
    if (shifted[static_cast<Index>(k)] <= umin + 1e-9) out.active_min_priors.push_back(k);
  }

  for (Index w = 0; w < ni; ++w) {
    if (out.plan[w] >= upper[w] - config.optimizer.active_tolerance) out.truncation_binding = true;
  }
  if (out.truncation_binding && config.post_check) {
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double tol = 1e-9 * (1.0 + std::abs(out.utility_value));
    for (std::size_t s = 0; s < config.post_check_samples; ++s) {
      Plan y(ni);
      for (Index w = 0; w < ni; ++w) y[w] = 4.0 * upper[w] * unit(rng);
      const Plan dir = y - out.plan;
      // Push along the direction to the budget frontier.
      double lo = 0.0, hi = 1.0;
      if (budget_value(psi.canonical(), priors, agent.endowment, y) > 0.0) {
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          const Plan p = (out.plan + mid * dir).cwiseMax(0.0);
          (budget_value(psi.canonical(), priors, agent.endowment, p) <= 0.0 ? lo : hi) = mid;
        }
      } else {
        lo = 1.0;
      }
      const Plan p = (out.plan + lo * dir).cwiseMax(0.0);
      if ((p.array() <= upper.array()).all()) continue;
      if (utility_clamped(agent, priors, p, config.floor) > out.utility_value + tol) {
        out.truncation_ok = false;
        break;
      }
    }
  }
  return out;
}

DemandResult demand(const Economy& economy, std::size_t agent, const StatePrice& psi,
                    const DemandConfig& config) {
  const Plan upper = config.truncation * economy.aggregate_endowment();
  return demand(economy.agent(agent), economy.priors(), psi, upper, config);
}

ExcessDemand excess_demand(const Economy& economy, const StatePrice& psi,
                           const DemandConfig& config) {
  ExcessDemand out;
  out.z = Plan::Zero(static_cast<Index>(economy.num_states()));
  for (std::size_t i = 0; i < economy.num_agents(); ++i) {
    out.per_agent.push_back(demand(economy, i, psi, config));
    out.z += out.per_agent.back().plan - economy.agent(i).endowment;
  }
  return out;
}

}  // namespace kw
