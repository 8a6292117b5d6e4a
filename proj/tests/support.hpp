#ifndef KW_TESTS_SUPPORT_HPP
#define KW_TESTS_SUPPORT_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "kw/analysis.hpp"

namespace kwtest {

inline kw::Plan vec(std::initializer_list<double> xs) {
  kw::Plan p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) p[i++] = x;
  return p;
}

inline double sup(const kw::Plan& a, const kw::Plan& b) { return (a - b).cwiseAbs().maxCoeff(); }

inline double sup(const std::vector<kw::Plan>& a, const std::vector<kw::Plan>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, sup(a[i], b[i]));
  return d;
}

// Two agents with mirrored endowments (1/3, 2/3), (2/3, 1/3), square-root
// utilities, priors p_1 in [1/2 - eps, 1/2 + eps].
inline kw::Economy mirrored_economy(double eps, kw::Clearing clearing = kw::Clearing::kFreeDisposal) {
  const kw::Plan e1 = vec({1.0 / 3.0, 2.0 / 3.0});
  const kw::Plan e2 = vec({2.0 / 3.0, 1.0 / 3.0});
  std::vector<kw::Agent> agents{{e1, kw::PreferenceSpec::maxmin(kw::Bernoulli::square_root())},
                                {e2, kw::PreferenceSpec::maxmin(kw::Bernoulli::square_root())}};
  return kw::Economy(agents, kw::PriorSet::interval(vec({0.5, 0.5}), eps), clearing);
}

// Hand-rolled generators over a seeded engine.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool coin() { return index(2) == 1; }

  kw::Plan plan(std::size_t n, double lo, double hi) {
    kw::Plan p(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = uniform(lo, hi);
    return p;
  }

  // Point of the open simplex, bounded away from its faces by `floor`.
  kw::Plan simplex(std::size_t n, double floor = 0.02) {
    kw::Plan p(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = std::exponential_distribution<double>(1.0)(rng_);
    p /= p.sum();
    const double m = static_cast<double>(n);
    return (1.0 - floor * m) * p + kw::Plan::Constant(p.size(), floor);
  }

  kw::PriorSet priors(std::size_t n, std::size_t k) {
    std::vector<kw::Plan> vs;
    for (std::size_t j = 0; j < k; ++j) vs.push_back(simplex(n));
    return kw::PriorSet::from_vertices(vs);
  }

  kw::Bernoulli smooth_bernoulli() {
    switch (index(4)) {
      case 0: return kw::Bernoulli::power(uniform(0.3, 3.0));
      case 1: return kw::Bernoulli::exponential(uniform(0.5, 3.0));
      case 2: return kw::Bernoulli::square_root();
      default: return kw::Bernoulli::logarithmic();
    }
  }

  kw::Bernoulli crra() { return kw::Bernoulli::power(uniform(0.4, 3.0)); }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Random CRRA economy with interval-style priors around a random center.
inline kw::Economy random_economy(Gen& g, std::size_t states, std::size_t agents, double eps) {
  std::vector<kw::Agent> as;
  for (std::size_t i = 0; i < agents; ++i) {
    as.push_back({g.plan(states, 0.3, 1.5), kw::PreferenceSpec::maxmin(g.crra())});
  }
  const kw::Plan center = g.simplex(states, 0.15);
  return kw::Economy(as, kw::PriorSet::interval(center, eps));
}

}  // namespace kwtest

#endif  // KW_TESTS_SUPPORT_HPP
