"""Acceptance criteria, one test each, at the stated tolerances.

Each test records ``(passed, detail)`` in ``RESULTS``; the conftest hook
prints one line per criterion at the end of the run.
"""

import time

import numpy as np
import pytest

from conftest import EQ_A, EQ_B, EQ_PRICES, random_game, random_profile, two_company
from qnash.cli import RunConfig, run
from qnash.economy import (
    Agent,
    EconomySpec,
    UtilitySpec,
    check_mrs_equality,
    check_quantum_price_conditions,
    consistent_aggregates,
    foc_residuals,
    solve_pareto,
    welfare,
)
from qnash.equilibrium import (
    MixedProfile,
    nash_map_step,
    profile_to_ket,
    sequential_best_response_ket,
    solve_iterative,
    solve_support_enum,
    verify_equilibrium,
)
from qnash.game import GameSpec, PayoffOperator, PriceKet, present_value, pricing_functional, sample_paths
from qnash.lottery import entangle, trace_out_game, trace_out_lottery
from qnash.securities import (
    check_pareto_condition,
    market_completeness,
    price_securities,
    securitize,
    solve_portfolio,
)
from test_economy import grid_welfare

RESULTS = {}


def record(key, ok, detail):
    RESULTS[key] = (bool(ok), detail)
    assert ok, detail


def nondegenerate_2x2(rng):
    while True:
        spec = GameSpec((2, 2), rng.normal(size=(2, 4)))
        a = spec.payoffs[0].reshape(2, 2).T
        b = spec.payoffs[1].reshape(2, 2)
        if np.min(np.abs(np.diff(a, axis=0))) < 1e-3 or np.min(np.abs(np.diff(b, axis=0))) < 1e-3:
            continue
        eqs = solve_support_enum(spec)
        if not eqs.skipped and len(eqs) % 2 == 1:
            return spec, eqs


def test_criterion_01_two_company_equilibrium():
    t0 = time.perf_counter()
    code, report = run(RunConfig("solve", ["two_company.json"]))
    elapsed = time.perf_counter() - t0
    eq = report["results"]["equilibrium"]
    dist = max(
        np.max(np.abs(np.array(eq["pricing_matrices"]["A"]) - EQ_A)),
        np.max(np.abs(np.array(eq["pricing_matrices"]["B"]) - EQ_B)),
    )
    pv_err = max(abs(eq["pv"]["A"] - 1.75), abs(eq["pv"]["B"] - 2.15625))
    ok = code == 0 and dist <= 1e-6 and pv_err <= 1e-9 and elapsed < 1.0
    record(1, ok, f"linf={dist:.2e} pv_err={pv_err:.2e} time={elapsed:.3f}s")


def test_criterion_02_sequential_entangled_solution():
    rng = np.random.default_rng(2)
    spec = two_company()
    worst = 0.0
    for _ in range(100):
        amp = rng.normal(size=2) + 1j * rng.normal(size=2)
        ket = sequential_best_response_ket(spec, 0, amp / np.linalg.norm(amp))
        pa = present_value(ket, PayoffOperator(spec.payoffs[0]))
        pb = present_value(ket, PayoffOperator(spec.payoffs[1]))
        worst = max(worst, abs(pa - 1.5), abs(pb - 2.5))
    record(2, worst <= 1e-12, f"max pv error {worst:.2e} over 100 splits")


def test_criterion_03_decoherence():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        dims = tuple(int(d) for d in rng.integers(1, 5, size=rng.integers(1, 4)))
        n = int(np.prod(dims))
        a = rng.normal(size=n) + 1j * rng.normal(size=n)
        q = PriceKet(a / np.linalg.norm(a), dims)
        for i, d in enumerate(dims):
            for f in range(d):
                for g in range(d):
                    if f != g:
                        worst = max(worst, abs(pricing_functional(q, i, f, g)))
    record(3, worst <= 1e-12, f"max off-diagonal {worst:.2e} over 1000 kets")


def test_criterion_04_oracle_agreement():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst_dist = worst_gain = 0.0
    for _ in range(100):
        spec, eqs = nondegenerate_2x2(rng)
        res = solve_iterative(spec)
        dist = min(res.profile.distance(e.profile) for e in eqs)
        worst_dist = max(worst_dist, dist)
        worst_gain = max(
            worst_gain,
            verify_equilibrium(spec, res.profile, 1e-6).worst_gain,
            max(verify_equilibrium(spec, e.profile, 1e-6).worst_gain for e in eqs),
        )
    elapsed = time.perf_counter() - t0
    ok = worst_dist <= 1e-5 and worst_gain <= 1e-6 and elapsed < 10.0
    record(4, ok, f"max dist {worst_dist:.2e} max gain {worst_gain:.2e} time={elapsed:.2f}s")


def test_criterion_05_fixed_point_iff_equilibrium():
    rng = np.random.default_rng(5)
    games = [two_company()] + [random_game(rng, (2, 2)) for _ in range(25)] + [
        random_game(rng, (3, 2)) for _ in range(25)
    ]
    mismatches = checked = 0
    for spec in games:
        profiles = [e.profile for e in solve_support_enum(spec)]
        profiles += [random_profile(rng, spec.dims) for _ in range(10)]
        profiles += [MixedProfile.vertex(spec.dims, s) for s in np.ndindex(*spec.dims)]
        for prof in profiles:
            fixed = nash_map_step(spec, prof).distance(prof) <= 1e-9
            eq = verify_equilibrium(spec, prof, 1e-9).ok
            mismatches += fixed != eq
            checked += 1
    record(5, mismatches == 0, f"{mismatches} mismatches over {checked} profiles in {len(games)} games")


def test_criterion_06_partial_traces():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(30):
        dims = ((2, 2), (2, 3), (3, 3))[rng.integers(3)]
        spec = random_game(rng, dims, discount=float(rng.uniform(0.5, 1.0)))
        res = solve_support_enum(spec)[0]
        joint = entangle(res.ket)
        rg, rl = trace_out_lottery(joint), trace_out_game(joint)
        cap = res.ket.capitalized_prices()
        worst = max(
            worst,
            abs(rg.trace - 1),
            abs(rl.trace - 1),
            np.max(np.abs(rg.spectrum() - rl.spectrum())),
            np.max(np.abs(rg.diagonal() - cap)),
            np.max(np.abs(rl.diagonal() - cap)),
        )
    record(6, worst <= 1e-12, f"max deviation {worst:.2e}")


def test_criterion_07_economy_focs():
    rng = np.random.default_rng(7)
    details = []
    bel = rng.dirichlet(np.ones(4))
    lam = np.array([1.0, 2.5])
    agg = rng.uniform(1, 4, size=4)
    econ = EconomySpec(tuple(Agent(UtilitySpec(1.0), l, bel) for l in lam), 3.0, agg)
    t0 = time.perf_counter()
    alloc = solve_pareto(econ)
    slowest = time.perf_counter() - t0
    share = lam / lam.sum()
    prop_err = max(np.max(np.abs(alloc.c - np.outer(share, agg))), np.max(np.abs(alloc.c0 - 3.0 * share)))
    details.append(f"proportional {prop_err:.1e}")
    worst_foc = worst_mrs = 0.0
    worst_gap = -np.inf
    for gammas in [(0.5, 2.0), (1.0, 5.0), (2.0, 0.5), (5.0, 1.0)]:
        for n in (2, 3, 4):
            agents = tuple(
                Agent(UtilitySpec(g, float(rng.uniform(0.8, 1))), float(rng.uniform(0.5, 2)),
                      rng.dirichlet(np.ones(n)))
                for g in gammas
            )
            econ = EconomySpec(agents, float(rng.uniform(1, 4)), rng.uniform(1, 4, n))
            t0 = time.perf_counter()
            alloc = solve_pareto(econ)
            slowest = max(slowest, time.perf_counter() - t0)
            worst_foc = max(worst_foc, max(foc_residuals(econ, alloc).values()))
            worst_mrs = max(worst_mrs, float(check_mrs_equality(econ, alloc).spread.max()))
            worst_gap = max(worst_gap, grid_welfare(econ) - welfare(econ, alloc.c0, alloc.c))
    details.append(f"foc {worst_foc:.1e} mrs {worst_mrs:.1e} grid gap {worst_gap:.1e} slowest {slowest:.3f}s")
    ok = prop_err <= 1e-8 and worst_foc <= 1e-8 and worst_mrs <= 1e-8 and worst_gap <= 1e-4 and slowest < 1
    record(7, ok, "; ".join(details))


def test_criterion_08_quantum_price_conditions():
    joint = entangle(profile_to_ket(MixedProfile((EQ_A, EQ_B))))
    agents = (Agent(UtilitySpec(1.0), 1.0, EQ_PRICES), Agent(UtilitySpec(2.0), 1.0, EQ_PRICES))
    econ = EconomySpec(agents, 4.0, consistent_aggregates(agents, 4.0, 1.0, 4))
    rep = check_quantum_price_conditions(econ, solve_pareto(econ), joint)
    mrs = float(np.nanmax(np.abs(rep.mrs_residual)))
    mu = float(np.nanmax(np.abs(rep.marginal_residual)))
    record(8, mrs <= 1e-8 and mu <= 1e-8, f"mrs residual {mrs:.2e} marginal-utility residual {mu:.2e}")


def test_criterion_09_incomplete_market_pareto():
    spec = two_company()
    joint = entangle(profile_to_ket(MixedProfile((EQ_A, EQ_B))))
    sec = securitize(spec)
    prices = price_securities(sec, joint)
    utility = UtilitySpec(1.0, spec.discount)
    port = solve_portfolio(utility, sec, prices, EQ_PRICES, 1.0, [1.0, 1.0])
    rep = check_pareto_condition(utility, port, prices, joint)
    comp = market_completeness(sec)
    ok = rep.max_residual <= 1e-6 and not comp.complete
    detail = (
        f"state residual {rep.max_residual:.2e} (weighted {np.max(np.abs(rep.weighted_residuals)):.1e}); "
        f"rank {comp.rank}/{comp.n_states} complete={comp.complete}"
    )
    record(9, ok, detail)


def test_criterion_10_sampler():
    ket = profile_to_ket(MixedProfile((EQ_A, EQ_B)))
    draws = sample_paths(ket, 100_000, seed=10)
    freq = np.bincount(draws, minlength=4) / draws.size
    tv = 0.5 * float(np.abs(freq - EQ_PRICES).sum())
    same = np.array_equal(draws, sample_paths(ket, 100_000, seed=10))
    record(10, tv <= 0.02 and same, f"tv={tv:.4f} deterministic={same}")


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0, 5.0])
def test_criterion_11_gradient_checks(gamma):
    u = UtilitySpec(gamma, 0.9)
    h = 1e-5
    worst = 0.0
    for c0 in (0.4, 1.0, 2.5):
        for c in (0.4, 1.0, 2.5):
            fd0 = (u.u(c0 + h, c) - u.u(c0 - h, c)) / (2 * h)
            fd1 = (u.u(c0, c + h) - u.u(c0, c - h)) / (2 * h)
            worst = max(worst, abs(u.du_dc0(c0) / fd0 - 1), abs(u.du_dc(c0, c) / fd1 - 1))
    prev_ok, prev = RESULTS.get(11, (True, ""))
    ok = worst <= 1e-6
    RESULTS[11] = (prev_ok and ok, f"{prev} gamma={gamma}: {worst:.1e}".strip())
    assert ok
