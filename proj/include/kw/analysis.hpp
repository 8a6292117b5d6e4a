#ifndef KW_ANALYSIS_HPP
#define KW_ANALYSIS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kw/equilibrium.hpp"

namespace kw {

struct EquivalenceVerdict {
  Equilibrium ad;
  // xi^i = psi (c^i - e^i) at the AD equilibrium.
  std::vector<Plan> net_trade_values;
  std::vector<bool> mean_af;
  std::vector<double> spreads;
  // Vertices attaining min and max of E^P xi^i: the separating pair.
  std::vector<std::pair<std::size_t, std::size_t>> separating_priors;
  bool verdict = false;
  // The AD pair checked against the Knightian budgets.
  VerificationReport knightian;
  // verdict agrees with the Knightian check (true => passes, false => some
  // agent violates a budget or is not optimal).
  bool consistent = false;
};

// Throws ConvergenceError if the AD solver does not converge.
EquivalenceVerdict ad_kw_equivalence(const Economy& economy, const Plan& prior,
                                     const SolverConfig& solver = {},
                                     const VerificationConfig& verification = {});

struct ImprovementConfig {
  double tolerance = 1e-6;
  double floor = 1e-9;
  OptimizerConfig optimizer;
};

struct ImprovementResult {
  std::optional<std::vector<Plan>> improvement;
  // Optimal common utility gain min_i U^i(d^i) - U^i(c^i).
  double gain = 0.0;
  SolveStatus status = SolveStatus::kOptimal;
  double certificate_gap = 0.0;
  // Engine tolerance qualifying a "none" answer (0 for piecewise-linear economies).
  double stationarity_tolerance = 0.0;
};

// Searches allocations d with U^i(d^i) >= U^i(c^i) + t for all i, clearing
// (by the economy's convention), and psi (d^i - e^i) mean-ambiguity free.
ImprovementResult uncertainty_neutral_improvement(const Economy& economy, const StatePrice& psi,
                                                  const std::vector<Plan>& allocation,
                                                  const ImprovementConfig& config = {});

struct SweepRecord {
  double epsilon = 0.0;
  std::vector<Plan> prior_vertices;
  Clearing clearing = Clearing::kFreeDisposal;
  std::optional<Equilibrium> equilibrium;
  bool failed = false;
  std::string failure;
  double trade_volume = 0.0;
  double disposal_l1 = 0.0;
  // Sup-norm distance over agents and states to the epsilon = 0 allocation.
  double distance_to_base = 0.0;
  // "supportable", "unsupportable" or "inconclusive".
  std::string certificate;
};

using PriorFamily = std::function<PriorSet(double)>;

// Records sorted by epsilon. The grid must contain 0 and family(0) must be a
// singleton.
std::vector<SweepRecord> kw_correspondence_sweep(const Economy& economy, const PriorFamily& family,
                                                 std::vector<double> grid,
                                                 const SolverConfig& config = {});

struct GenericityConfig {
  std::size_t draws = 100;
  std::uint64_t seed = 7;
  // One share vector for all states: individual endowments without risk.
  bool constant_shares = false;
  // Draws with an endowment entry below this fraction of the aggregate are
  // rejected and redrawn.
  double min_share = 1e-6;
  SolverConfig solver;
  VerificationConfig verification;
};

struct GenericityDraw {
  std::vector<Plan> endowments;
  bool verdict = false;
  double max_spread = 0.0;
  bool consistent = false;
};

struct GenericityResult {
  double fraction = 0.0;
  std::vector<GenericityDraw> draws;
};

// Redraws endowments with the template's aggregate and runs
// ad_kw_equivalence at `prior` for each draw.
GenericityResult genericity_experiment(const Economy& economy, const Plan& prior,
                                       const GenericityConfig& config = {});

// Two agents, equality clearing: binding budgets force xi^1 into the
// mean-ambiguity-free subspace, and with a positive price and only constant
// such plans, c^1 = e^1.
struct InferenceChain {
  bool budgets_bind = false;
  bool clears_exactly = false;
  bool xi_mean_af = false;
  bool price_positive = false;
  bool only_constants = false;
  bool no_trade = false;
  // Both implications hold on this candidate.
  bool holds = false;
};

InferenceChain equality_inference_chain(const Economy& economy, const StatePrice& psi,
                                        const std::vector<Plan>& allocation, double tol = 1e-9);

}  // namespace kw

#endif  // KW_ANALYSIS_HPP
