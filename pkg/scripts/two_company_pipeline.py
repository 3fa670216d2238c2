"""Two-company example end to end: equilibrium, lottery, economy, securities.

    python scripts/two_company_pipeline.py --discount 0.95
"""

import argparse

import numpy as np

from qnash.economy import Agent, EconomySpec, UtilitySpec, check_quantum_price_conditions, consistent_aggregates, solve_pareto
from qnash.equilibrium import solve_iterative
from qnash.game import GameSpec
from qnash.lottery import entangle, rational_beliefs, trace_out_game
from qnash.securities import (
    check_pareto_condition,
    market_completeness,
    price_securities,
    securitize,
    solve_portfolio,
)

PI_A = [2.0, 1.5, 1.5, 2.0]
PI_B = [1.4, 2.5, 2.5, 2.0]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--discount", type=float, default=1.0)
    parser.add_argument("--gamma", type=float, default=1.0, help="portfolio agent curvature")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    spec = GameSpec((2, 2), [PI_A, PI_B], args.discount, ("A", "B"))
    res = solve_iterative(spec)
    print("pricing matrices:", [np.round(w, 6).tolist() for w in res.profile.weights])
    print("present values:  ", np.round(res.pv, 6).tolist(), "certified:", res.certified)

    joint = entangle(res.ket)
    bel = rational_beliefs(joint)
    print("lottery density diagonal:", np.round(trace_out_game(joint).diagonal(), 6).tolist())

    agents = (Agent(UtilitySpec(1.0, args.discount), 1.0, bel), Agent(UtilitySpec(2.0, args.discount), 1.0, bel))
    econ = EconomySpec(agents, 4.0, consistent_aggregates(agents, 4.0, args.discount, 4))
    alloc = solve_pareto(econ)
    rep = check_quantum_price_conditions(econ, alloc, joint)
    print("state prices:", np.round(alloc.state_prices, 6).tolist(), "conditions ok:", rep.ok)

    sec = securitize(spec)
    prices = price_securities(sec, joint)
    comp = market_completeness(sec)
    utility = UtilitySpec(args.gamma, args.discount)
    port = solve_portfolio(utility, sec, prices, bel, 1.0, [1.0, 1.0])
    pareto = check_pareto_condition(utility, port, prices, joint)
    print(f"securities: prices {np.round(prices.prices, 6).tolist()} rank {comp.rank}/{comp.n_states}")
    print("holdings:", np.round(port.holdings, 6).tolist(), "c0:", round(port.c0, 6))
    print("per-state residuals:", np.round(pareto.state_residuals, 6).tolist())
    print("per-security residuals:", np.array2string(pareto.weighted_residuals, precision=2))


if __name__ == "__main__":
    main()
