#include <doctest.h>

#include <cmath>

#include "support.hpp"

using namespace kw;
using kwtest::vec;

namespace {

const Plan kE1 = vec({1.0 / 3.0, 2.0 / 3.0});

const PriorSet& p01() {
  static const PriorSet p = PriorSet::interval(vec({0.5, 0.5}), 0.1);
  return p;
}

}  // namespace

TEST_CASE("economy validation") {
  const Agent a{kE1, PreferenceSpec::maxmin(Bernoulli::square_root())};
  CHECK_THROWS_AS(Economy({}, p01()), ModelError);
  CHECK_THROWS_AS(Economy({Agent{vec({0.0, 1.0}), a.preference}}, p01()), ModelError);
  CHECK_THROWS_AS(Economy({Agent{vec({1.0, 1.0, 1.0}), a.preference}}, p01()), ModelError);
  const Economy ec = kwtest::mirrored_economy(0.1);
  CHECK(kwtest::sup(ec.aggregate_endowment(), vec({1.0, 1.0})) < 1e-15);
  CHECK(parse_clearing("equality") == Clearing::kEquality);
  CHECK(parse_clearing("free-disposal") == Clearing::kFreeDisposal);
  CHECK_THROWS_AS(parse_clearing("sometimes"), ModelError);
}

TEST_CASE("budget values") {
  const StatePrice one(vec({1.0, 1.0}));
  CHECK(budget_value(one, p01(), kE1, kE1) == 0.0);
  CHECK(std::abs(budget_value(one, p01(), kE1, vec({7.0 / 15.0, 7.0 / 15.0}))) < 1e-15);
  CHECK(budget_value(one, p01(), kE1, vec({0.5, 0.5})) == doctest::Approx(1.0 / 30.0).epsilon(1e-14));
}

TEST_CASE("benchmark demands") {
  const StatePrice one(vec({1.0, 1.0}));
  SUBCASE("maxmin square root") {
    const Agent a{kE1, PreferenceSpec::maxmin(Bernoulli::square_root())};
    const DemandResult d = demand(a, p01(), one, vec({2.0, 2.0}));
    CHECK(kwtest::sup(d.plan, vec({7.0 / 15.0, 7.0 / 15.0})) < 1e-9);
    REQUIRE(d.active_budget_priors.size() == 1);
    CHECK(kwtest::sup(p01().vertex(d.active_budget_priors[0]), vec({0.6, 0.4})) < 1e-15);
    CHECK(d.status == SolveStatus::kOptimal);
    CHECK(d.truncation_ok);
  }
  SUBCASE("full ambiguity keeps the endowment") {
    const Agent a{kE1, PreferenceSpec::maxmin(Bernoulli::square_root())};
    const DemandResult d = demand(a, PriorSet::full_simplex(2), StatePrice(vec({0.3, 0.7})), vec({2.0, 2.0}));
    CHECK(kwtest::sup(d.plan, kE1) < 1e-9);
  }
  SUBCASE("log utility, single prior") {
    const Agent a{kE1, PreferenceSpec::maxmin(Bernoulli::logarithmic())};
    const DemandResult d = demand(a, PriorSet::from_vertices({vec({0.5, 0.5})}), one, vec({2.0, 2.0}));
    CHECK(kwtest::sup(d.plan, vec({0.5, 0.5})) < 1e-9);
  }
  SUBCASE("piecewise linear: exact LP path and tie-break") {
    const Agent a{kE1, PreferenceSpec::maxmin(Bernoulli::piecewise_linear({0.5}, {2.0, 1.0}))};
    const DemandResult d = demand(a, p01(), one, vec({2.0, 2.0}));
    CHECK(d.tie_break_applied);
    CHECK(budget_value(one, p01(), kE1, d.plan) <= 1e-9);
    // No budget-feasible grid point does better.
    double best = -1e300;
    for (int i = 0; i <= 400; ++i) {
      for (int j = 0; j <= 400; ++j) {
        const Plan c = vec({i / 200.0, j / 200.0});
        if (budget_value(one, p01(), kE1, c) <= 0.0) best = std::max(best, utility(a, p01(), c));
      }
    }
    CHECK(d.utility_value >= best - 1e-9);
  }
  CHECK_THROWS_AS(demand(Agent{kE1, PreferenceSpec::maxmin(Bernoulli::square_root())}, p01(),
                         StatePrice(vec({0.0, 0.0})), vec({2.0, 2.0})),
                  ModelError);
}

TEST_CASE("excess demand at the symmetric price") {
  const Economy ec = kwtest::mirrored_economy(0.1);
  const ExcessDemand z = excess_demand(ec, StatePrice(vec({0.5, 0.5})));
  CHECK(kwtest::sup(z.z, vec({-1.0 / 15.0, -1.0 / 15.0})) < 1e-9);
}

TEST_CASE("demand oracle equivalence on random consumer problems") {
  kwtest::Gen g(424242);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + g.index(2);
    const PriorSet p = g.priors(n, 1 + g.index(3));
    const Bernoulli u = g.index(2) == 0 ? Bernoulli::square_root() : g.crra();
    const Agent a{g.plan(n, 0.3, 1.0), PreferenceSpec::maxmin(u)};
    const StatePrice psi(g.simplex(n, 0.1));
    const Plan upper = 2.0 * a.endowment.cwiseMax(0.6);
    const ConcaveProgram prog = consumer_program(a, p, psi, upper);
    const DemandResult d = demand(a, p, psi, upper);
    const std::size_t res = n == 2 ? 1500 : 150;
    const SolveResult o = grid_oracle(prog, res);
    const double step = upper.maxCoeff() / static_cast<double>(res);
    // Rounding the optimum down to the grid stays in budget; the loss is at
    // most the largest marginal utility just below it times the step.
    double lip = 0.0;
    for (Eigen::Index w = 0; w < d.plan.size(); ++w) lip += u.derivative(std::max(d.plan[w] - step, 1e-9));
    CAPTURE(t);
    CHECK(std::abs(d.utility_value - o.value) <= lip * step + 1e-6);
    CHECK(o.value <= d.utility_value + 1e-9);
  }
}

TEST_CASE("market properties at random prices") {
  kwtest::Gen g(8080);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 2 + g.index(3);
    const Economy ec = kwtest::random_economy(g, n, 2 + g.index(2), g.uniform(0.0, 0.1));
    const StatePrice psi(g.simplex(n, 0.05));
    const ExcessDemand z = excess_demand(ec, psi);
    CAPTURE(t);
    // Weak Walras law.
    CHECK(price(psi, ec.priors(), z.z) <= 1e-7);
    for (std::size_t i = 0; i < ec.num_agents(); ++i) {
      const Agent& a = ec.agent(i);
      const DemandResult& d = z.per_agent[i];
      const double b = budget_value(psi, ec.priors(), a.endowment, d.plan);
      CHECK(b <= 1e-9);
      CHECK(std::abs(b) <= 1e-7);
      // Homogeneity of degree zero.
      const DemandResult scaled = demand(ec, i, StatePrice(3.7 * psi.values()));
      CHECK(kwtest::sup(scaled.plan, d.plan) <= 1e-9);
    }
    // Demand beats random budget-feasible points; budget sets are convex.
    const Agent& a = ec.agent(0);
    const DemandResult& d = z.per_agent[0];
    Plan last = a.endowment;
    for (int k = 0; k < 1000; ++k) {
      // Inside the truncation box the demand is computed on.
      Plan c = g.plan(n, 0.0, 1.0).cwiseProduct(2.0 * ec.aggregate_endowment());
      if (budget_value(psi, ec.priors(), a.endowment, c) > 0.0) {
        // Scale toward zero until affordable.
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (budget_value(psi, ec.priors(), a.endowment, mid * c) <= 0.0 ? lo : hi) = mid;
        }
        c *= lo;
      }
      CHECK(utility_clamped(a, ec.priors(), c, 1e-9) <= d.utility_value + 1e-7);
      const double lambda = g.uniform(0.0, 1.0);
      CHECK(budget_value(psi, ec.priors(), a.endowment, lambda * c + (1.0 - lambda) * last) <= 1e-12);
      last = c;
    }
  }
}
