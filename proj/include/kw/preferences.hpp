#ifndef KW_PREFERENCES_HPP
#define KW_PREFERENCES_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kw/state_space.hpp"

namespace kw {

enum class BernoulliFamily { kPower, kExponential, kSquareRoot, kLogarithmic, kPiecewiseLinear };

// Strictly increasing, concave utility index over a single state's
// consumption.
class Bernoulli {
 public:
  // CRRA: x^(1-g)/(1-g), log for g == 1.
  static Bernoulli power(double gamma);
  // CARA: (1 - exp(-a x)) / a.
  static Bernoulli exponential(double a);
  static Bernoulli square_root();
  static Bernoulli logarithmic();
  // u(0) = 0, slope slopes[0] on [0, b_1], slopes[j] on [b_j, b_{j+1}], ...
  // Requires increasing breakpoints > 0 and decreasing positive slopes.
  static Bernoulli piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes);

  BernoulliFamily family() const { return family_; }
  double parameter() const { return param_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& slopes() const { return slopes_; }
  std::string name() const;

  // Throws ModelError for negative x, or x == 0 where u(0) = -infinity.
  double value(double x) const;
  // Value at max(x, floor) for the unbounded-at-zero families.
  double value_clamped(double x, double floor) const;
  // Derivative (right derivative at kinks), evaluated at max(x, floor) for
  // families whose derivative blows up at zero.
  double derivative(double x, double floor = 0.0) const;
  double second_derivative(double x, double floor = 0.0) const;
  // [right, left] derivative: a proper interval only at piecewise-linear kinks.
  std::pair<double, double> derivative_interval(double x) const;
  // Inverse of the marginal utility: the x >= 0 with u'(x) = y (0 if y >= u'(0)).
  double inverse_marginal(double y) const;

  bool strictly_concave() const { return family_ != BernoulliFamily::kPiecewiseLinear; }
  bool differentiable() const { return family_ != BernoulliFamily::kPiecewiseLinear; }
  // False where u(0) = -infinity: log, and CRRA with gamma >= 1. Such agents
  // sit outside norm continuity on the closed positive orthant; solvers
  // clamp consumption at a floor.
  bool continuous_at_zero() const;

  // Piecewise-linear form as min_j (intercept_j + slope_j x).
  std::vector<std::pair<double, double>> affine_pieces() const;

 private:
  Bernoulli(BernoulliFamily f, double p) : family_(f), param_(p) {}
  BernoulliFamily family_;
  double param_;
  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
};

// Concave increasing map for the smooth-ambiguity model:
// phi(x) = -exp(-theta x)/theta, or the identity when theta == 0.
struct AmbiguityIndex {
  double theta = 1.0;
  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;
};

enum class PreferenceKind { kMaxmin, kSmooth, kAnchored };

struct PreferenceSpec {
  PreferenceKind kind = PreferenceKind::kMaxmin;
  Bernoulli bernoulli = Bernoulli::square_root();
  // Maxmin only: vertex indices of the economy's prior set this agent
  // minimizes over. Empty means all vertices.
  std::vector<std::size_t> selection;
  // Smooth only.
  AmbiguityIndex index;
  std::vector<double> weights;
  // Anchored only.
  std::optional<Plan> anchor;

  static PreferenceSpec maxmin(Bernoulli u, std::vector<std::size_t> selection = {});
  static PreferenceSpec smooth(Bernoulli u, std::vector<double> weights, double theta = 1.0);
  static PreferenceSpec anchored(Bernoulli u, Plan anchor);
};

struct Agent {
  Plan endowment;
  PreferenceSpec preference;
};

std::string to_string(PreferenceKind kind);

// Throws ModelError when the agent is inconsistent with the prior set.
void validate(const Agent& agent, const PriorSet& priors);

// Vertex indices the agent's utility minimizes over (maxmin and anchored).
std::vector<std::size_t> effective_selection(const Agent& agent, const PriorSet& priors);

// U(c) is strictly concave: smooth Bernoulli and full-support priors.
bool is_strictly_concave(const Agent& agent, const PriorSet& priors);

// E^{P_k} u(c) for every vertex k.
Eigen::VectorXd vertex_expected_utilities(const Agent& agent, const PriorSet& priors,
                                          const Plan& c, double floor = 0.0);

// Requires c >= 0. Logarithmic (and CRRA >= 1) agents need c > 0.
double utility(const Agent& agent, const PriorSet& priors, const Plan& c);
// As utility(), with consumption clamped below at `floor` for agents whose
// Bernoulli index is unbounded at zero.
double utility_clamped(const Agent& agent, const PriorSet& priors, const Plan& c, double floor);

// Generators of the superdifferential at an interior c: for maxmin and
// anchored agents {P ⊙ u'(c) : P minimizing within tol}; for smooth agents the
// gradient. At piecewise-linear kinks every corner of the per-state
// derivative interval box is emitted.
std::vector<Plan> superdifferential(const Agent& agent, const PriorSet& priors, const Plan& c,
                                    double tol = 1e-9);

}  // namespace kw

#endif  // KW_PREFERENCES_HPP
