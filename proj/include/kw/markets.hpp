#ifndef KW_MARKETS_HPP
#define KW_MARKETS_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kw/concave_program.hpp"
#include "kw/preferences.hpp"
#include "kw/state_space.hpp"

namespace kw {

enum class Clearing { kFreeDisposal, kEquality };

std::string to_string(Clearing clearing);
// Accepts "disposal" / "free-disposal" and "equality".
Clearing parse_clearing(const std::string& text);

class Economy {
 public:
  Economy(std::vector<Agent> agents, PriorSet priors, Clearing clearing = Clearing::kFreeDisposal);

  const std::vector<Agent>& agents() const { return agents_; }
  const Agent& agent(std::size_t i) const { return agents_.at(i); }
  const PriorSet& priors() const { return priors_; }
  Clearing clearing() const { return clearing_; }
  const Plan& aggregate_endowment() const { return aggregate_; }
  std::size_t num_states() const { return priors_.num_states(); }
  std::size_t num_agents() const { return agents_.size(); }

  Economy with_priors(PriorSet priors) const;
  Economy with_clearing(Clearing clearing) const;
  Economy with_endowments(const std::vector<Plan>& endowments) const;

 private:
  std::vector<Agent> agents_;
  PriorSet priors_;
  Clearing clearing_;
  Plan aggregate_;
};

// E[psi (c - e)]; c is in the budget set iff this is <= tol.
double budget_value(const StatePrice& psi, const PriorSet& priors, const Plan& e, const Plan& c);

// Appends agent utility to `program`, whose variables [offset, offset + n)
// hold the agent's consumption. Piecewise-linear agents also use
// [lift_offset, lift_offset + n) for per-state utility levels (see
// utility_dimension). Returns pieces whose minimum equals U(c) - shift.
std::vector<ConcavePiece> encode_utility(const Agent& agent, const PriorSet& priors,
                                         ConcaveProgram& program, std::size_t offset,
                                         std::size_t lift_offset, double shift, double floor);
// Variables one agent needs in a program: n, or 2n for piecewise-linear.
std::size_t utility_dimension(const Agent& agent, std::size_t states);

// The consumer problem: maximize U over the budget (one row per prior
// vertex at the canonical form of psi) intersected with [0, upper].
ConcaveProgram consumer_program(const Agent& agent, const PriorSet& priors, const StatePrice& psi,
                                const Plan& upper, double floor = 1e-9);

struct DemandConfig {
  // Box [0, truncation * aggregate endowment].
  double truncation = 2.0;
  double floor = 1e-9;
  // Utility slack (relative) defining the optimal set in the tie-break stage.
  double tie_tolerance = 1e-11;
  OptimizerConfig optimizer;
  bool post_check = true;
  std::size_t post_check_samples = 256;
  std::uint64_t seed = 0x6b77;
};

struct DemandResult {
  Plan plan;
  double utility_value = 0.0;
  std::vector<std::size_t> active_budget_priors;
  std::vector<std::size_t> active_min_priors;
  // One multiplier per budget row (prior vertex); empty when uncertified.
  Eigen::VectorXd kkt;
  // psi (c - e) in the caller's price units.
  Plan net_trade_value;
  SolveStatus status = SolveStatus::kOptimal;
  double certificate_gap = 0.0;
  bool tie_break_applied = false;
  bool truncation_binding = false;
  // False when a sampled untruncated budget point beats the plan.
  bool truncation_ok = true;
};

DemandResult demand(const Agent& agent, const PriorSet& priors, const StatePrice& psi,
                    const Plan& upper, const DemandConfig& config = {});
DemandResult demand(const Economy& economy, std::size_t agent, const StatePrice& psi,
                    const DemandConfig& config = {});

struct ExcessDemand {
  Plan z;
  std::vector<DemandResult> per_agent;
};

ExcessDemand excess_demand(const Economy& economy, const StatePrice& psi,
                           const DemandConfig& config = {});

}  // namespace kw

#endif  // KW_MARKETS_HPP
