#include "kw/preferences.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace kw {

Bernoulli Bernoulli::power(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ModelError("power utility: gamma must be > 0");
  if (gamma == 1.0) return logarithmic();
  return Bernoulli(BernoulliFamily::kPower, gamma);
}

Bernoulli Bernoulli::exponential(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ModelError("exponential utility: a must be > 0");
  return Bernoulli(BernoulliFamily::kExponential, a);
}

Bernoulli Bernoulli::square_root() { return Bernoulli(BernoulliFamily::kSquareRoot, 0.5); }

Bernoulli Bernoulli::logarithmic() { return Bernoulli(BernoulliFamily::kLogarithmic, 1.0); }

Bernoulli Bernoulli::piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes) {
  if (slopes.size() != breakpoints.size() + 1) {
    throw ModelError("piecewise-linear utility: need one more slope than breakpoints");
  }
  for (std::size_t j = 0; j < breakpoints.size(); ++j) {
    if (!(breakpoints[j] > (j == 0 ? 0.0 : breakpoints[j - 1]))) {
      throw ModelError("piecewise-linear utility: breakpoints must be positive and increasing");
    }
  }
  for (std::size_t j = 0; j < slopes.size(); ++j) {
    if (!(slopes[j] > 0.0) || (j > 0 && !(slopes[j] < slopes[j - 1]))) {
      throw ModelError("piecewise-linear utility: slopes must be positive and strictly decreasing");
    }
  }
  Bernoulli b(BernoulliFamily::kPiecewiseLinear, 0.0);
  b.breakpoints_ = std::move(breakpoints);
  b.slopes_ = std::move(slopes);
  return b;
}

std::string Bernoulli::name() const {
  switch (family_) {
    case BernoulliFamily::kPower: return fmt::format("power(gamma={})", param_);
    case BernoulliFamily::kExponential: return fmt::format("exponential(a={})", param_);
    case BernoulliFamily::kSquareRoot: return "sqrt";
    case BernoulliFamily::kLogarithmic: return "log";
    case BernoulliFamily::kPiecewiseLinear: return "piecewise_linear";
  }
  return "?";
}

bool Bernoulli::continuous_at_zero() const {
  if (family_ == BernoulliFamily::kLogarithmic) return false;
  if (family_ == BernoulliFamily::kPower && param_ >= 1.0) return false;
  return true;
}

double Bernoulli::value(double x) const {
  if (!(x >= 0.0)) throw ModelError(fmt::format("utility: negative consumption {}", x));
  if (x == 0.0 && !continuous_at_zero()) {
    throw ModelError(fmt::format("utility: {} is -infinity at zero consumption", name()));
  }
  switch (family_) {
    case BernoulliFamily::kPower:
      if (param_ == 1.0) return std::log(x);
      return std::pow(x, 1.0 - param_) / (1.0 - param_);
    case BernoulliFamily::kExponential: return -std::expm1(-param_ * x) / param_;
    case BernoulliFamily::kSquareRoot: return std::sqrt(x);
    case BernoulliFamily::kLogarithmic: return std::log(x);
    case BernoulliFamily::kPiecewiseLinear: {
      double v = 0.0;
      double left = 0.0;
      for (std::size_t j = 0; j < slopes_.size(); ++j) {
        const double right = j < breakpoints_.size() ? breakpoints_[j] : x;
        if (x <= right) return v + slopes_[j] * (x - left);
        v += slopes_[j] * (right - left);
        left = right;
      }
      return v;
    }
  }
  return 0.0;
}

double Bernoulli::value_clamped(double x, double floor) const {
  x = std::max(x, 0.0);
  if (!continuous_at_zero()) x = std::max(x, floor);
  return value(x);
}

double Bernoulli::derivative(double x, double floor) const {
  x = std::max(x, floor);
  switch (family_) {
    case BernoulliFamily::kPower: return std::pow(x, -param_);
    case BernoulliFamily::kExponential: return std::exp(-param_ * x);
    case BernoulliFamily::kSquareRoot: return 0.5 / std::sqrt(x);
    case BernoulliFamily::kLogarithmic: return 1.0 / x;
    case BernoulliFamily::kPiecewiseLinear: {
      std::size_t j = 0;
      while (j < breakpoints_.size() && x >= breakpoints_[j]) ++j;
      return slopes_[j];
    }
  }
  return 0.0;
}

double Bernoulli::second_derivative(double x, double floor) const {
  x = std::max(x, floor);
  switch (family_) {
    case BernoulliFamily::kPower: return -param_ * std::pow(x, -param_ - 1.0);
    case BernoulliFamily::kExponential: return -param_ * std::exp(-param_ * x);
    case BernoulliFamily::kSquareRoot: return -0.25 / (x * std::sqrt(x));
    case BernoulliFamily::kLogarithmic: return -1.0 / (x * x);
    case BernoulliFamily::kPiecewiseLinear: return 0.0;
  }
  return 0.0;
}

std::pair<double, double> Bernoulli::derivative_interval(double x) const {
  const double right = derivative(x);
  if (family_ != BernoulliFamily::kPiecewiseLinear) return {right, right};
  for (std::size_t j = 0; j < breakpoints_.size(); ++j) {
    if (x == breakpoints_[j]) return {slopes_[j + 1], slopes_[j]};
  }
  return {right, right};
}

double Bernoulli::inverse_marginal(double y) const {
  if (!(y > 0.0)) throw ModelError("inverse marginal utility: need y > 0");
  switch (family_) {
    case BernoulliFamily::kPower: return std::pow(y, -1.0 / param_);
    case BernoulliFamily::kExponential: return y >= 1.0 ? 0.0 : -std::log(y) / param_;
    case BernoulliFamily::kSquareRoot: return 0.25 / (y * y);
    case BernoulliFamily::kLogarithmic: return 1.0 / y;
    case BernoulliFamily::kPiecewiseLinear: break;
  }
  throw ModelError("inverse marginal utility: piecewise-linear utility has no inverse");
}

std::vector<std::pair<double, double>> Bernoulli::affine_pieces() const {
  std::vector<std::pair<double, double>> out;
  if (family_ != BernoulliFamily::kPiecewiseLinear) return out;
  double left = 0.0;
  for (std::size_t j = 0; j < slopes_.size(); ++j) {
    out.emplace_back(value(left) - slopes_[j] * left, slopes_[j]);
    if (j < breakpoints_.size()) left = breakpoints_[j];
  }
  return out;
}

double AmbiguityIndex::value(double x) const {
  return theta == 0.0 ? x : -std::exp(-theta * x) / theta;
}

double AmbiguityIndex::derivative(double x) const {
  return theta == 0.0 ? 1.0 : std::exp(-theta * x);
}

double AmbiguityIndex::second_derivative(double x) const {
  return theta == 0.0 ? 0.0 : -theta * std::exp(-theta * x);
}

PreferenceSpec PreferenceSpec::maxmin(Bernoulli u, std::vector<std::size_t> selection) {
  PreferenceSpec p;
  p.kind = PreferenceKind::kMaxmin;
  p.bernoulli = std::move(u);
  p.selection = std::move(selection);
  return p;
}

PreferenceSpec PreferenceSpec::smooth(Bernoulli u, std::vector<double> weights, double theta) {
  PreferenceSpec p;
  p.kind = PreferenceKind::kSmooth;
  p.bernoulli = std::move(u);
  p.weights = std::move(weights);
  p.index.theta = theta;
  return p;
}

PreferenceSpec PreferenceSpec::anchored(Bernoulli u, Plan anchor) {
  PreferenceSpec p;
  p.kind = PreferenceKind::kAnchored;
  p.bernoulli = std::move(u);
  p.anchor = std::move(anchor);
  return p;
}

std::string to_string(PreferenceKind kind) {
  switch (kind) {
    case PreferenceKind::kMaxmin: return "maxmin";
    case PreferenceKind::kSmooth: return "smooth";
    case PreferenceKind::kAnchored: return "anchored";
  }
  return "?";
}

void validate(const Agent& agent, const PriorSet& priors) {
  const std::size_t n = priors.num_states();
  require_same_size(agent.endowment, n, "endowment");
  for (Eigen::Index w = 0; w < agent.endowment.size(); ++w) {
    if (!(agent.endowment[w] > 0.0) || !std::isfinite(agent.endowment[w])) {
      throw ModelError(fmt::format("endowment must be strictly positive; state {} has {}", w,
                                   agent.endowment[w]));
    }
  }
  const PreferenceSpec& pref = agent.preference;
  switch (pref.kind) {
    case PreferenceKind::kMaxmin: {
      std::vector<std::size_t> seen;
      for (std::size_t k : pref.selection) {
        if (k >= priors.size()) {
          throw ModelError(fmt::format("prior selection index {} out of range ({} vertices)", k,
                                       priors.size()));
        }
        if (std::find(seen.begin(), seen.end(), k) != seen.end()) {
          throw ModelError(fmt::format("prior selection index {} repeated", k));
        }
        seen.push_back(k);
      }
      break;
    }
    case PreferenceKind::kSmooth: {
      if (pref.weights.size() != priors.size()) {
        throw ModelError(fmt::format("smooth preferences: {} weights for {} prior vertices",
                                     pref.weights.size(), priors.size()));
      }
      double total = 0.0;
      for (double w : pref.weights) {
        if (!(w >= 0.0)) throw ModelError("smooth preferences: weights must be >= 0");
        total += w;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw ModelError(fmt::format("smooth preferences: weights sum to {}, not 1", total));
      }
      if (!(pref.index.theta >= 0.0)) throw ModelError("smooth preferences: theta must be >= 0");
      break;
    }
    case PreferenceKind::kAnchored: {
      if (!pref.anchor) throw ModelError("anchored preferences: missing anchor");
      require_same_size(*pref.anchor, n, "anchor");
      if ((pref.anchor->array() <= 0.0).any()) {
        throw ModelError("anchored preferences: anchor must be strictly positive");
      }
      break;
    }
  }
}

std::vector<std::size_t> effective_selection(const Agent& agent, const PriorSet& priors) {
  if (agent.preference.kind == PreferenceKind::kMaxmin && !agent.preference.selection.empty()) {
    return agent.preference.selection;
  }
  std::vector<std::size_t> all(priors.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return all;
}

bool is_strictly_concave(const Agent& agent, const PriorSet& priors) {
  return agent.preference.bernoulli.strictly_concave() && !priors.is_closure();
}

namespace {

Plan bernoulli_values(const Bernoulli& u, const Plan& c, double floor) {
  Plan v(c.size());
  for (Eigen::Index w = 0; w < c.size(); ++w) {
    v[w] = floor > 0.0 ? u.value_clamped(c[w], floor) : u.value(c[w]);
  }
  return v;
}

double combine(const Agent& agent, const PriorSet& priors, const Eigen::VectorXd& eu) {
  const PreferenceSpec& pref = agent.preference;
  switch (pref.kind) {
    case PreferenceKind::kMaxmin: {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k : effective_selection(agent, priors)) {
        best = std::min(best, eu[static_cast<Eigen::Index>(k)]);
      }
      return best;
    }
    case PreferenceKind::kSmooth: {
      double v = 0.0;
      for (std::size_t k = 0; k < priors.size(); ++k) {
        v += pref.weights[k] * pref.index.value(eu[static_cast<Eigen::Index>(k)]);
      }
      return v;
    }
    case PreferenceKind::kAnchored: {
      const Plan ua = bernoulli_values(pref.bernoulli, *pref.anchor, 0.0);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < priors.size(); ++k) {
        best = std::min(best, eu[static_cast<Eigen::Index>(k)] - priors.vertex(k).dot(ua));
      }
      return best;
    }
  }
  return 0.0;
}

void require_consumption(const Plan& c, std::size_t n) {
  require_same_size(c, n, "consumption");
  for (Eigen::Index w = 0; w < c.size(); ++w) {
    if (!(c[w] >= 0.0) || !std::isfinite(c[w])) {
      throw ModelError(fmt::format("negative or non-finite consumption {} in state {}", c[w], w));
    }
  }
}

}  // namespace

Eigen::VectorXd vertex_expected_utilities(const Agent& agent, const PriorSet& priors,
                                          const Plan& c, double floor) {
  const Plan u = bernoulli_values(agent.preference.bernoulli, c, floor);
  Eigen::VectorXd eu(static_cast<Eigen::Index>(priors.size()));
  for (std::size_t k = 0; k < priors.size(); ++k) {
    eu[static_cast<Eigen::Index>(k)] = priors.vertex(k).dot(u);
  }
  return eu;
}

double utility(const Agent& agent, const PriorSet& priors, const Plan& c) {
  require_consumption(c, priors.num_states());
  return combine(agent, priors, vertex_expected_utilities(agent, priors, c, 0.0));
}

double utility_clamped(const Agent& agent, const PriorSet& priors, const Plan& c, double floor) {
  require_consumption(c, priors.num_states());
  return combine(agent, priors, vertex_expected_utilities(agent, priors, c, floor));
}

std::vector<Plan> superdifferential(const Agent& agent, const PriorSet& priors, const Plan& c,
                                    double tol) {
  require_consumption(c, priors.num_states());
  if ((c.array() <= 0.0).any()) {
    throw ModelError("superdifferential: consumption must be strictly positive");
  }
  const Bernoulli& u = agent.preference.bernoulli;
  const Eigen::Index n = c.size();

  // Corners of the per-state derivative box (more than one only at kinks).
  std::vector<Plan> slopes{Plan(n)};
  for (Eigen::Index w = 0; w < n; ++w) {
    const auto [right, left] = u.derivative_interval(c[w]);
    if (right == left) {
      for (Plan& d : slopes) d[w] = right;
      continue;
    }
    std::vector<Plan> next;
    for (const Plan& d : slopes) {
      Plan a = d, b = d;
      a[w] = right;
      b[w] = left;
      next.push_back(a);
      next.push_back(b);
    }
    slopes = std::move(next);
  }

  const Eigen::VectorXd eu = vertex_expected_utilities(agent, priors, c);
  std::vector<Plan> gens;
  auto push_unique = [&](Plan g) {
    for (const Plan& h : gens) {
      if ((h - g).cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + g.cwiseAbs().maxCoeff())) return;
    }
    gens.push_back(std::move(g));
  };

  const PreferenceSpec& pref = agent.preference;
  if (pref.kind == PreferenceKind::kSmooth) {
    for (const Plan& d : slopes) {
      Plan g = Plan::Zero(n);
      for (std::size_t k = 0; k < priors.size(); ++k) {
        g += pref.weights[k] * pref.index.derivative(eu[static_cast<Eigen::Index>(k)]) *
             priors.vertex(k).cwiseProduct(d);
      }
      push_unique(std::move(g));
    }
    return gens;
  }

  Eigen::VectorXd shifted = eu;
  if (pref.kind == PreferenceKind::kAnchored) {
    const Plan ua = bernoulli_values(u, *pref.anchor, 0.0);
    for (std::size_t k = 0; k < priors.size(); ++k) {
      shifted[static_cast<Eigen::Index>(k)] -= priors.vertex(k).dot(ua);
    }
  }
  const std::vector<std::size_t> sel = effective_selection(agent, priors);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k : sel) best = std::min(best, shifted[static_cast<Eigen::Index>(k)]);
  for (std::size_t k : sel) {
    if (shifted[static_cast<Eigen::Index>(k)] > best + tol) continue;
    for (const Plan& d : slopes) push_unique(priors.vertex(k).cwiseProduct(d));
  }
  return gens;
}

}  // namespace kw
