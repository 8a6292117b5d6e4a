#!/usr/bin/env python3
"""Independent oracles for the constants frozen into the C++ tests.

Everything here is computed without the C++ library: vertex enumeration,
scipy constrained optimisation, brute-force grids and exact sympy kernels.
Run it to regenerate the numbers quoted in tests/*.cpp.
"""
from fractions import Fraction

import numpy as np
import sympy as sp
from scipy.optimize import minimize

EPS = 0.1
VERTICES = [np.array([0.5 - EPS, 0.5 + EPS]), np.array([0.5 + EPS, 0.5 - EPS])]
E1 = np.array([1 / 3, 2 / 3])
E2 = np.array([2 / 3, 1 / 3])


def upper(x, vertices=VERTICES):
    return max(float(p @ x) for p in vertices)


def maxmin_sqrt(c, vertices=VERTICES):
    return min(float(p @ np.sqrt(np.maximum(c, 0.0))) for p in vertices)


def du_sqrt(x):
    return 0.5 / np.sqrt(x)


def demand(e, psi, vertices=VERTICES, utility=maxmin_sqrt):
    cons = [{"type": "ineq", "fun": (lambda c, p=p: -float((p * psi) @ (c - e)))}
            for p in vertices]
    best = None
    for start in (e, e / 2, np.full(2, 0.4)):
        res = minimize(lambda c: -utility(c, vertices), start, method="SLSQP",
                       constraints=cons, bounds=[(1e-12, 2.0)] * 2,
                       options={"ftol": 1e-15, "maxiter": 1000})
        if best is None or res.fun < best.fun:
            best = res
    return best.x


def brute_force_demand(e, psi, n=4001):
    # Walk the upper budget boundary: for a fixed c1 the largest feasible c2.
    best = (-np.inf, None)
    for c1 in np.linspace(0.0, 2.0, n):
        c2 = min((float((p * psi) @ e) - p[0] * psi[0] * c1) / (p[1] * psi[1])
                 for p in VERTICES)
        if c2 < 0:
            continue
        val = maxmin_sqrt(np.array([c1, c2]))
        if val > best[0]:
            best = (val, (c1, c2))
    return best


def main():
    psi = np.array([1.0, 1.0])
    print("price(c-e) at c=(7/15,7/15):", upper(psi * (np.full(2, 7 / 15) - E1)))
    print("price(c-e) at c=(1/2,1/2):", upper(psi * (np.full(2, 0.5) - E1)), "== 1/30:", 1 / 30)

    u = min(float(p @ np.sqrt(E1)) for p in VERTICES)
    print("maxmin sqrt utility at e1:", repr(u))
    print("supergradient at e1:", repr(VERTICES[1] * du_sqrt(E1)))

    d = demand(E1, psi)
    print("SLSQP demand:", d, "target 7/15 =", 7 / 15)
    print("brute-force demand:", brute_force_demand(E1, psi))

    singleton = [np.array([0.5, 0.5])]
    d_log = demand(E1, psi, singleton,
                   lambda c, v: min(float(p @ np.log(np.maximum(c, 1e-300))) for p in v))
    print("log demand under singleton prior:", d_log)

    ratio = du_sqrt(1 / 3) / du_sqrt(2 / 3)
    for eps in (0.001, 0.01, 0.1):
        r = (0.5 + eps) / (0.5 - eps)
        lo, hi = ratio, r * r * ratio
        print(f"eps={eps}: agent1 [{lo!r}, {hi!r}] agent2 [{1 / hi!r}, {1 / lo!r}]")

    a = sp.Matrix([[Fraction(1, 4) - Fraction(1, 2), Fraction(1, 2) - Fraction(1, 4), 0]])
    print("kernel of (-1/4,1/4,0):", [list(v) for v in a.nullspace()])

    # Arrow-Debreu benchmark: identical sqrt agents, constant aggregate endowment,
    # centroid prior. Full insurance at the mean endowment value.
    print("AD allocation agent 1:", 0.5 * E1.sum() / 1.0, "(both states)")
    for eps in (0.001, 0.01, 0.1):
        # Demand of agent 1 at psi=(1,1) under the eps interval family.
        print(f"eps={eps}: disposal-convention demand level {0.5 - eps / 3!r}")


if __name__ == "__main__":
    main()
