#include <doctest.h>

#include <cmath>

#include "support.hpp"

using namespace kw;
using kwtest::vec;

TEST_CASE("AD/KW equivalence verdicts") {
  SUBCASE("mirrored endowments: not equivalent") {
    const Economy ec = kwtest::mirrored_economy(0.1);
    const EquivalenceVerdict v = ad_kw_equivalence(ec, vec({0.5, 0.5}));
    CHECK_FALSE(v.verdict);
    CHECK(v.consistent);
    CHECK_FALSE(v.mean_af[0]);
    // Vertex expectations of xi^1 are +-eps (2/3 - 1/3) psi / 2 around zero.
    CHECK(v.spreads[0] == doctest::Approx(2.0 * 0.1 * (1.0 / 6.0) * 0.5 * 2.0).epsilon(1e-9));
    CHECK(v.knightian.canonical_budget_slack[0] ==
          doctest::Approx(v.spreads[0] / 2.0).epsilon(1e-9));
    CHECK_FALSE(v.knightian.budgets_ok);
  }
  SUBCASE("constant individual endowments: autarky") {
    std::vector<Agent> agents{{vec({0.3, 0.3}), PreferenceSpec::maxmin(Bernoulli::square_root())},
                              {vec({0.7, 0.7}), PreferenceSpec::maxmin(Bernoulli::power(2.0))}};
    const Economy ec(agents, PriorSet::interval(vec({0.5, 0.5}), 0.1));
    const EquivalenceVerdict v = ad_kw_equivalence(ec, vec({0.5, 0.5}));
    CHECK(v.verdict);
    CHECK(v.consistent);
    CHECK(v.knightian.verdict);
  }
  SUBCASE("singleton prior: always equivalent") {
    kwtest::Gen g(12);
    for (int t = 0; t < 5; ++t) {
      const Economy ec = kwtest::random_economy(g, 3, 2, 0.0);
      const EquivalenceVerdict v = ad_kw_equivalence(ec, ec.priors().vertex(0));
      CHECK(v.verdict);
      CHECK(v.consistent);
    }
  }
  CHECK_THROWS_AS(ad_kw_equivalence(kwtest::mirrored_economy(0.1), vec({0.9, 0.1})), ModelError);
}

TEST_CASE("uncertainty-neutral improvements") {
  SUBCASE("none at the endowment with ambiguity") {
    const Economy ec = kwtest::mirrored_economy(0.1);
    const ImprovementResult r = uncertainty_neutral_improvement(
        ec, StatePrice(vec({1.0, 1.0})), {ec.agent(0).endowment, ec.agent(1).endowment});
    CHECK_FALSE(r.improvement);
    CHECK(r.gain <= 1e-6);
  }
  SUBCASE("gains from trade under a single prior") {
    const Economy ec = kwtest::mirrored_economy(0.0);
    const ImprovementResult r = uncertainty_neutral_improvement(
        ec, StatePrice(vec({1.0, 1.0})), {ec.agent(0).endowment, ec.agent(1).endowment});
    REQUIRE(r.improvement);
    Plan total = Plan::Zero(2);
    for (std::size_t i = 0; i < 2; ++i) {
      total += (*r.improvement)[i];
      CHECK(utility(ec.agent(i), ec.priors(), (*r.improvement)[i]) >
            utility(ec.agent(i), ec.priors(), ec.agent(i).endowment) + 1e-6);
    }
    CHECK((total - ec.aggregate_endowment()).maxCoeff() <= 1e-9);
  }
  SUBCASE("none at solver equilibria") {
    kwtest::Gen g(55);
    for (int t = 0; t < 3; ++t) {
      const Economy ec = kwtest::random_economy(g, 2 + g.index(2), 2, g.uniform(0.02, 0.1));
      const Equilibrium eq = solve_kw(ec);
      REQUIRE(eq.converged);
      const ImprovementResult r = uncertainty_neutral_improvement(ec, eq.psi, eq.allocation);
      CAPTURE(t);
      CHECK_FALSE(r.improvement);
      CHECK(r.stationarity_tolerance > 0.0);
    }
  }
  SUBCASE("returned improvements satisfy the constraints") {
    kwtest::Gen g(56);
    for (int t = 0; t < 5; ++t) {
      const std::size_t n = 3;
      const Economy ec = kwtest::random_economy(g, n, 2, 0.05);
      const StatePrice psi(g.simplex(n, 0.1));
      const ImprovementResult r =
          uncertainty_neutral_improvement(ec, psi, {ec.agent(0).endowment, ec.agent(1).endowment});
      if (!r.improvement) continue;
      Plan total = Plan::Zero(3);
      for (std::size_t i = 0; i < 2; ++i) {
        const Plan& d = (*r.improvement)[i];
        total += d - ec.agent(i).endowment;
        const Plan xi = psi.canonical().values().cwiseProduct(d - ec.agent(i).endowment);
        CHECK(is_mean_ambiguity_free(ec.priors(), xi, 1e-9));
        CHECK(utility(ec.agent(i), ec.priors(), d) > utility(ec.agent(i), ec.priors(), ec.agent(i).endowment) + 1e-6);
      }
      CHECK(total.maxCoeff() <= 1e-9);
    }
  }
  SUBCASE("infeasible allocations are rejected") {
    const Economy ec = kwtest::mirrored_economy(0.1);
    CHECK_THROWS_AS(uncertainty_neutral_improvement(ec, StatePrice(vec({1.0, 1.0})), {vec({1.0, 1.0}), vec({1.0, 1.0})}),
                    ModelError);
  }
}

TEST_CASE("correspondence sweep") {
  const auto family = [](double e) { return PriorSet::interval(vec({0.5, 0.5}), e); };
  SUBCASE("mirrored family under free disposal") {
    const auto recs = kw_correspondence_sweep(kwtest::mirrored_economy(0.0), family, {0.1, 0.0, 0.01, 0.001});
    REQUIRE(recs.size() == 4);
    CHECK(recs[0].epsilon == 0.0);
    CHECK(recs[3].epsilon == 0.1);
    for (const Plan& c : recs[0].equilibrium->allocation) CHECK(kwtest::sup(c, vec({0.5, 0.5})) < 1e-8);
    for (std::size_t k = 1; k < 4; ++k) {
      CHECK(recs[k].certificate == "unsupportable");
      CHECK_FALSE(recs[k].failed);
      CHECK(recs[k].distance_to_base == doctest::Approx(recs[k].epsilon / 3.0).epsilon(1e-6));
      CHECK(recs[k].disposal_l1 == doctest::Approx(4.0 * recs[k].epsilon / 3.0).epsilon(1e-6));
    }
  }
  SUBCASE("equality clearing flags failures") {
    const auto recs = kw_correspondence_sweep(kwtest::mirrored_economy(0.0, Clearing::kEquality), family, {0.0, 0.1});
    CHECK_FALSE(recs[0].failed);
    CHECK(recs[1].failed);
    CHECK(recs[1].clearing == Clearing::kEquality);
  }
  SUBCASE("constant family gives identical records") {
    const auto constant = [](double) { return PriorSet::from_vertices({vec({0.5, 0.5})}); };
    const auto recs = kw_correspondence_sweep(kwtest::mirrored_economy(0.0), constant, {0.0, 0.05, 0.1});
    for (const auto& r : recs) CHECK(r.distance_to_base == 0.0);
  }
  SUBCASE("constant endowments: no trade anywhere") {
    std::vector<Agent> agents{{vec({0.4, 0.4}), PreferenceSpec::maxmin(Bernoulli::square_root())},
                              {vec({0.6, 0.6}), PreferenceSpec::maxmin(Bernoulli::square_root())}};
    const auto recs = kw_correspondence_sweep(Economy(agents, family(0.0)), family, {0.0, 0.05, 0.1});
    for (const auto& r : recs) CHECK(r.trade_volume <= 1e-8);
  }
  CHECK_THROWS_AS(kw_correspondence_sweep(kwtest::mirrored_economy(0.0), family, {0.1}), ModelError);
  CHECK_THROWS_AS(kw_correspondence_sweep(kwtest::mirrored_economy(0.0), family, {}), ModelError);
  const auto wide = [](double e) { return PriorSet::interval(vec({0.5, 0.5}), e + 0.1); };
  CHECK_THROWS_AS(kw_correspondence_sweep(kwtest::mirrored_economy(0.0), wide, {0.0}), ModelError);
}

TEST_CASE("genericity experiment") {
  const Economy ec = kwtest::mirrored_economy(0.1);
  GenericityConfig cfg;
  cfg.draws = 30;
  const GenericityResult r = genericity_experiment(ec, vec({0.5, 0.5}), cfg);
  CHECK(r.fraction == 0.0);
  for (const auto& d : r.draws) {
    CHECK(d.consistent);
    CHECK((d.endowments[0] + d.endowments[1] - Plan::Ones(2)).cwiseAbs().maxCoeff() < 1e-12);
  }
  cfg.constant_shares = true;
  CHECK(genericity_experiment(ec, vec({0.5, 0.5}), cfg).fraction == 1.0);
  // Reproducible.
  cfg.constant_shares = false;
  const GenericityResult again = genericity_experiment(ec, vec({0.5, 0.5}), cfg);
  CHECK(kwtest::sup(again.draws[7].endowments, r.draws[7].endowments) == 0.0);
  CHECK_THROWS_AS(genericity_experiment(kwtest::mirrored_economy(0.0), vec({0.5, 0.5}), cfg), ModelError);
  const Economy risky({Agent{vec({0.2, 0.7}), PreferenceSpec::maxmin(Bernoulli::square_root())}},
                      PriorSet::interval(vec({0.5, 0.5}), 0.1));
  CHECK_THROWS_AS(genericity_experiment(risky, vec({0.5, 0.5}), cfg), ModelError);
}

TEST_CASE("equality-clearing inference chain on synthetic candidates") {
  const Economy ec = kwtest::mirrored_economy(0.1, Clearing::kEquality);
  const StatePrice one(vec({1.0, 1.0}));
  const Plan e1 = ec.agent(0).endowment, e2 = ec.agent(1).endowment;
  SUBCASE("autarky satisfies every link") {
    const InferenceChain c = equality_inference_chain(ec, one, {e1, e2});
    CHECK(c.budgets_bind);
    CHECK(c.clears_exactly);
    CHECK(c.xi_mean_af);
    CHECK(c.only_constants);
    CHECK(c.no_trade);
    CHECK(c.holds);
  }
  SUBCASE("full insurance breaks the budget premise") {
    const InferenceChain c = equality_inference_chain(ec, one, {vec({0.5, 0.5}), vec({0.5, 0.5})});
    CHECK_FALSE(c.budgets_bind);
    CHECK(c.holds);
  }
  SUBCASE("random transfers never violate the implications") {
    kwtest::Gen g(4);
    for (int t = 0; t < 500; ++t) {
      // Transfers along the budget frontier of agent 1, mirrored to agent 2.
      const Plan d = g.plan(2, -0.2, 0.2);
      const StatePrice psi(g.simplex(2, 0.1));
      CHECK(equality_inference_chain(ec, psi, {e1 + d, e2 - d}).holds);
    }
  }
  SUBCASE("richer subspace: mean-ambiguity-free but nonzero trade") {
    std::vector<Agent> agents{{vec({0.5, 0.5, 0.5}), PreferenceSpec::maxmin(Bernoulli::square_root())},
                              {vec({0.5, 0.5, 0.5}), PreferenceSpec::maxmin(Bernoulli::square_root())}};
    const Economy e3(agents, PriorSet::from_vertices({vec({0.5, 0.25, 0.25}), vec({0.25, 0.5, 0.25})}),
                     Clearing::kEquality);
    const Plan d = vec({0.1, 0.1, -0.3});
    const InferenceChain c = equality_inference_chain(e3, StatePrice(vec({1.0, 1.0, 1.0})),
                                                      {agents[0].endowment + d, agents[1].endowment - d});
    CHECK(c.budgets_bind);
    CHECK(c.clears_exactly);
    CHECK(c.xi_mean_af);
    CHECK_FALSE(c.only_constants);
    CHECK_FALSE(c.no_trade);
    CHECK(c.holds);
  }
}
