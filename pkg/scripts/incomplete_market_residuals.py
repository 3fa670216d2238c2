"""How far a two-security market sits from the per-state Pareto condition.

With rational beliefs and prices equal to present values, the per-state
condition asks for the same marginal utility in every state, i.e. flat
state consumption. The portfolio can only reach the span of the security
payoffs, so the residual is bounded below by how far a flat vector is from
that span. This script sweeps curvature and discount and prints both the
per-state residual and the per-security (weighted) residual.
"""

import argparse

import numpy as np

from qnash.economy import UtilitySpec
from qnash.equilibrium import MixedProfile, profile_to_ket, solve_iterative
from qnash.game import GameSpec
from qnash.lottery import entangle, rational_beliefs
from qnash.securities import check_pareto_condition, price_securities, securitize, solve_portfolio

PI_A = [2.0, 1.5, 1.5, 2.0]
PI_B = [1.4, 2.5, 2.5, 2.0]


def flat_distance(payoffs):
    """Relative least-squares distance from the all-ones vector to the span."""
    ones = np.ones(payoffs.shape[1])
    coef, *_ = np.linalg.lstsq(payoffs.T, ones, rcond=None)
    return float(np.linalg.norm(payoffs.T @ coef - ones) / np.linalg.norm(ones))


def sweep(spec, ket, gammas, e0):
    joint = entangle(ket)
    bel = rational_beliefs(joint)
    sec = securitize(spec)
    prices = price_securities(sec, joint)
    rows = []
    for g in gammas:
        u = UtilitySpec(g, spec.discount)
        port = solve_portfolio(u, sec, prices, bel, e0, np.ones(sec.m))
        rep = check_pareto_condition(u, port, prices, joint)
        rows.append((g, rep.max_residual, float(np.max(np.abs(rep.weighted_residuals)))))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--gammas", type=float, nargs="+", default=[0.5, 1.0, 2.0, 5.0])
    parser.add_argument("--discounts", type=float, nargs="+", default=[1.0, 0.95, 0.9])
    parser.add_argument("--endowment", type=float, default=1.0)
    parser.add_argument("--random-games", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    base = np.array([PI_A, PI_B])
    print(f"distance of flat consumption from the payoff span: {flat_distance(base):.4f}")
    print(f"{'game':>8} {'D':>5} {'gamma':>6} {'state':>10} {'weighted':>10}")
    for d in args.discounts:
        spec = GameSpec((2, 2), base, d)
        ket = solve_iterative(spec).ket
        for g, s, w in sweep(spec, ket, args.gammas, args.endowment):
            print(f"{'two-co':>8} {d:5.2f} {g:6.2f} {s:10.2e} {w:10.2e}")

    rng = np.random.default_rng(args.seed)
    for k in range(args.random_games):
        spec = GameSpec((2, 2), rng.uniform(0.5, 3.0, size=(2, 4)))
        ket = profile_to_ket(MixedProfile(tuple(rng.dirichlet(np.ones(2)) for _ in range(2))))
        for g, s, w in sweep(spec, ket, args.gammas[:1], args.endowment):
            print(f"{'rand' + str(k):>8} {1.0:5.2f} {g:6.2f} {s:10.2e} {w:10.2e}")


if __name__ == "__main__":
    main()
