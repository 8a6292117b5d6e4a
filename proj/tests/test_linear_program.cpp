#include <doctest.h>

#include "support.hpp"

using namespace kw;
using kwtest::vec;

TEST_CASE("small linear programs") {
  // max x + y  s.t.  x + 2y <= 4, 3x + y <= 6, x, y >= 0.
  LinearSystem s(2);
  s.set_nonnegative(0);
  s.set_nonnegative(1);
  s.add_row(vec({1.0, 2.0}), RowSense::kLessEqual, 4.0);
  s.add_row(vec({3.0, 1.0}), RowSense::kLessEqual, 6.0);
  const LpResult r = solve_lp(s, vec({1.0, 1.0}));
  REQUIRE(r.status == LpStatus::kOptimal);
  CHECK(r.value == doctest::Approx(2.8));
  CHECK(r.x[0] == doctest::Approx(1.6));
  CHECK(r.x[1] == doctest::Approx(1.2));

  LinearSystem u(1);
  u.add_row(vec({1.0}), RowSense::kGreaterEqual, 0.0);
  CHECK(solve_lp(u, vec({1.0})).status == LpStatus::kUnbounded);

  // Free variables and equalities.
  LinearSystem f(2);
  f.add_row(vec({1.0, -1.0}), RowSense::kEqual, 1.0);
  f.add_row(vec({1.0, 1.0}), RowSense::kLessEqual, 3.0);
  const LpResult rf = solve_lp(f, vec({0.0, 1.0}));
  REQUIRE(rf.status == LpStatus::kOptimal);
  CHECK(rf.value == doctest::Approx(1.0));
}

TEST_CASE("feasibility with witnesses and Farkas certificates") {
  LinearSystem ok(1);
  ok.set_nonnegative(0);
  ok.add_row(vec({1.0}), RowSense::kLessEqual, 1.0);
  const FeasibilityResult a = lp_feasibility(ok);
  REQUIRE(a.feasible);
  CHECK(ok.max_violation(a.witness) <= 1e-10);

  LinearSystem bad(1);
  bad.add_row(vec({1.0}), RowSense::kGreaterEqual, 1.0);
  bad.add_row(vec({1.0}), RowSense::kLessEqual, 0.0);
  const FeasibilityResult b = lp_feasibility(bad);
  REQUIRE_FALSE(b.feasible);
  CHECK(farkas_violation(bad, b.certificate) <= 1e-12);
}

TEST_CASE("random systems: witness or certificate") {
  kwtest::Gen g(3);
  int feasible = 0, infeasible = 0;
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + g.index(4), m = 1 + g.index(6);
    LinearSystem s(n);
    for (std::size_t j = 0; j < n; ++j) s.set_nonnegative(j, g.coin());
    for (std::size_t i = 0; i < m; ++i) {
      const RowSense sense = g.index(3) == 0 ? RowSense::kEqual : (g.coin() ? RowSense::kLessEqual : RowSense::kGreaterEqual);
      s.add_row(g.plan(n, -2.0, 2.0), sense, g.uniform(-2.0, 2.0));
    }
    const FeasibilityResult r = lp_feasibility(s);
    CAPTURE(t);
    if (r.feasible) {
      ++feasible;
      CHECK(s.max_violation(r.witness) <= 1e-9);
    } else {
      ++infeasible;
      CHECK(farkas_violation(s, r.certificate) <= 1e-9);
    }
  }
  CHECK(feasible > 0);
  CHECK(infeasible > 0);
}
