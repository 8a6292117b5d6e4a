#ifndef KW_EQUILIBRIUM_HPP
#define KW_EQUILIBRIUM_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kw/markets.hpp"

namespace kw {

// A solver stopped without meeting its tolerance where the caller needed a
// converged answer.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  // Fictitious-play step: psi <- (1 - g) psi + g psi*, g = damping / (1 + k / damping_horizon).
  double damping = 0.5;
  double damping_horizon = 20.0;
  // Softmax temperature of the price players, annealed geometrically.
  double temperature = 1.0;
  double annealing = 0.9;
  std::size_t max_outer_iterations = 60;
  double residual_tolerance = 1e-9;
  // Newton steps on z(psi) = 0 in log-price coordinates, tried before the
  // grid refinement.
  std::size_t newton_iterations = 30;
  // Halvings of the refinement window over the price simplex.
  std::size_t refinement_depth = 40;
  // Grid subdivisions per window; 0 picks 8 (two states), 4 (up to four), else 2.
  std::size_t refinement_subdivisions = 0;
  // 0 starts from the uniform price, otherwise from a seeded random price.
  std::uint64_t seed = 0;
  // Try the no-trade certificate before any iteration.
  bool no_trade_screen = true;
  DemandConfig demand;
  // Negishi iteration.
  std::size_t negishi_iterations = 200;
  double negishi_tolerance = 1e-12;
};

struct Equilibrium {
  StatePrice psi = StatePrice::uniform(1);
  std::vector<Plan> allocation;
  Plan worst_prior;
  Plan excess_demand;
  Plan disposal;
  std::optional<Eigen::VectorXd> welfare_weights;
  double residual = 0.0;
  bool converged = false;
  std::string method;
  std::size_t iterations = 0;
  std::size_t demand_evaluations = 0;
};

// Residual of excess demand z under a clearing convention:
// max(0, max z), plus max |z| for equality clearing.
double equilibrium_residual(const Plan& z, Clearing clearing);

Equilibrium solve_kw(const Economy& economy, const SolverConfig& config = {});

// Arrow-Debreu equilibrium of the economy with its prior set replaced by
// the single `prior`. Requires strictly concave differentiable Bernoulli
// utilities. psi is the state price density under `prior`.
Equilibrium solve_ad(const Economy& economy, const Plan& prior, const SolverConfig& config = {});

struct VerificationConfig {
  double budget_tolerance = 1e-7;
  double optimality_tolerance = 1e-7;
  double feasibility_tolerance = 1e-8;
  double mean_af_tolerance = 1e-9;
  double no_arbitrage_tolerance = 1e-8;
  DemandConfig demand;
};

struct VerificationReport {
  // E[psi (c - e)] in the caller's price units, and at the canonical price.
  std::vector<double> budget_slack;
  std::vector<double> canonical_budget_slack;
  // U(recomputed demand) - U(c).
  std::vector<double> optimality_gap;
  std::vector<Plan> recomputed_demand;
  double feasibility_residual = 0.0;
  // |Psi(sum xi) - sum Psi(xi)| at the canonical price.
  double no_arbitrage_gap = 0.0;
  bool no_arbitrage_holds = true;
  std::vector<Plan> net_trade_values;
  std::vector<bool> mean_af;
  bool budgets_ok = true;
  bool optimality_ok = true;
  bool feasibility_ok = true;
  // Budgets, optimality and feasibility; the no-arbitrage gap is reported
  // separately.
  bool verdict = true;
};

VerificationReport verify_equilibrium(const Economy& economy, const StatePrice& psi,
                                      const std::vector<Plan>& allocation,
                                      const VerificationConfig& config = {});

struct AgentCone {
  std::vector<Plan> generators;
  // Range of psi_0 / psi_w (w = 1..n-1) over prices supporting this agent
  // alone at its endowment; empty range reported as (inf, -inf).
  std::vector<std::pair<double, double>> ratio_intervals;
  bool supportable_alone = false;
  // Filled when a price is given or found: whether it supports the agent,
  // and the supporting prior sum_k mu_k P_k / sum mu_k.
  bool supported = false;
  Plan supporting_prior;
};

struct NoTradeCertificate {
  bool supportable = false;
  std::optional<StatePrice> psi;
  std::vector<AgentCone> agents;
  // False when the common-price search fell back to a grid heuristic.
  bool exact = true;
  std::string method;
  // Farkas multipliers for the joint system, when it was solved as one LP.
  Eigen::VectorXd farkas;
};

// Whether the endowment allocation is a Knight-Walras equilibrium at psi
// (or at some price, when psi is omitted).
NoTradeCertificate no_trade_certificate(const Economy& economy,
                                        const std::optional<StatePrice>& psi = std::nullopt);

}  // namespace kw

#endif  // KW_EQUILIBRIUM_HPP
