"""Command-line front end.

Subcommands: solve, lottery, economy, price, portfolio, demo. Reports go to
stdout (JSON or an aligned table), diagnostics to stderr. Exit status is 0
on success, 2 on invalid input and 3 when a solver fails to certify.

Every flag can also be set through an environment variable named
``QNASH_<FLAG>`` (e.g. ``QNASH_TOL``, ``QNASH_MAX_ITER``); flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .economy import (
    Agent,
    EconomySpec,
    UtilitySpec,
    check_mrs_equality,
    check_quantum_price_conditions,
    consistent_aggregates,
    solve_pareto,
)
from .equilibrium import SolverConfig, solve_iterative, solve_support_enum
from .errors import (
    NoInteriorOptimum,
    NoInteriorSolution,
    ParseError,
    QNashError,
    ValidationError,
)
from .game import enumerate_paths
from .lottery import entangle, rational_beliefs, trace_out_game, trace_out_lottery
from .securities import (
    check_pareto_condition,
    market_completeness,
    price_securities,
    securitize,
    security_expected_payoff,
    solve_portfolio,
)
from .specs import load_json, parse_agent, parse_economy, parse_game, parse_securities

log = logging.getLogger("qnash")

ENV_PREFIX = "QNASH_"
EXIT_OK, EXIT_INVALID, EXIT_UNCERTIFIED = 0, 2, 3
COMMANDS = ("solve", "lottery", "economy", "price", "portfolio", "demo")


class Uncertified(QNashError):
    code = "UNCERTIFIED"


@dataclass
class RunConfig:
    command: str
    inputs: list[str] = field(default_factory=list)
    format: str = "json"
    tol: float = 1e-9
    seed: int = 0
    max_iter: int = 200
    damping: float = 0.5
    restarts: int = 20
    theta: float = 1.0
    timing: bool = True

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown subcommand {self.command!r}", "command")
        if self.format not in ("json", "table"):
            raise ValidationError("must be json or table", "format")

    def solver(self) -> SolverConfig:
        return SolverConfig(
            max_iter=self.max_iter, damping=self.damping, restarts=self.restarts,
            tol=self.tol, seed=self.seed,
        )


# -- JSON helpers -------------------------------------------------------------


def _clean(x):
    """Plain JSON values; NaN/inf become null."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def emit_json(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=False, allow_nan=False)


# -- report sections ------------------------------------------------------------


def _equilibrium_section(spec, res):
    paths = enumerate_paths(spec)
    return {
        "method": res.method.value,
        "certified": res.certified,
        "epsilon": res.epsilon,
        "iterations": res.iterations,
        "pricing_matrices": {n: res.profile.weights[i] for i, n in enumerate(spec.names)},
        "pv": {n: res.pv[i] for i, n in enumerate(spec.names)},
        "ket": {
            "paths": [spec.path_label(p) for p in paths],
            "amplitudes": [[float(a.real), float(a.imag)] for a in res.ket.amplitudes],
            "capitalized_prices": res.ket.capitalized_prices(),
        },
    }


def _density_section(rho):
    m = rho.matrix
    return {
        "basis": rho.basis,
        "matrix": m.real,
        "max_imag": float(np.max(np.abs(m.imag))) if m.size else 0.0,
        "trace": rho.trace,
        "spectrum": rho.spectrum(),
        "rank": rho.rank(),
    }


def _game_echo(spec):
    return {
        "players": list(spec.names),
        "dims": list(spec.dims),
        "discount": spec.discount,
    }


def _solve(cfg, spec):
    res = solve_iterative(spec, cfg.solver())
    return res


def _cmd_solve(cfg, spec, out):
    res = _solve(cfg, spec)
    out["equilibrium"] = _equilibrium_section(spec, res)
    out["alternatives"] = [
        {n: p.weights[i] for i, n in enumerate(spec.names)} for p in res.alternatives
    ]
    if spec.n_players == 2:
        eqs = solve_support_enum(spec)
        out["support_enumeration"] = {
            "equilibria": [
                dict(_equilibrium_section(spec, e), support=[list(s) for s in e.support]) for e in eqs
            ],
            "skipped_supports": [[list(a), list(b)] for a, b in eqs.skipped],
        }
    else:
        out["support_enumeration"] = None
    return res


def _cmd_lottery(cfg, spec, out):
    res = _solve(cfg, spec)
    ket = entangle(res.ket)
    out["equilibrium"] = _equilibrium_section(spec, res)
    out["rho_game"] = _density_section(trace_out_lottery(ket))
    out["rho_lottery"] = _density_section(trace_out_game(ket))
    out["beliefs"] = rational_beliefs(ket)
    return res, ket


def _economy_section(econ, alloc, ket):
    mrs = check_mrs_equality(econ, alloc)
    section = {
        "aggregate_c0": econ.aggregate_c0,
        "aggregate_c": econ.aggregate_c,
        "allocation": {
            "c0": alloc.c0,
            "c": alloc.c,
            "phi0": alloc.phi0,
            "phi": alloc.phi,
            "state_prices": alloc.state_prices,
        },
        "foc_residuals": alloc.residuals,
        "mrs_check": {
            "ok": mrs.ok, "mrs": mrs.mrs, "spread": mrs.spread, "max_deviation": mrs.max_deviation,
        },
        "quantum_price_check": None,
    }
    bel = rational_beliefs(ket)
    if all(np.allclose(a.beliefs, bel, rtol=0, atol=1e-9) for a in econ.agents):
        q = check_quantum_price_conditions(econ, alloc, ket)
        section["quantum_price_check"] = {
            "ok": q.ok,
            "quantum_prices": q.quantum_prices,
            "mrs_residual": q.mrs_residual,
            "marginal_residual": q.marginal_residual,
            "multiplier_residual": q.multiplier_residual,
            "excluded_states": list(q.excluded_states),
            "max_residual": q.max_residual,
        }
    return section


def _cmd_economy(cfg, spec, econ_data, out):
    res, ket = _cmd_lottery(cfg, spec, out)
    econ = parse_economy(econ_data, spec.n_paths, rational_beliefs(ket), spec.discount)
    alloc = solve_pareto(econ)
    out["economy"] = _economy_section(econ, alloc, ket)
    return res


def _securities_rows(securities, prices, rho):
    return [
        {
            "name": securities.names[j],
            "payoffs": securities.payoffs[j],
            "price": prices.prices[j],
            "expected_payoff": security_expected_payoff(rho, securities.payoffs[j]),
            "game_position": None if securities.positions[j] is None else {
                "player": securities.positions[j][0], "theta": securities.positions[j][1],
            },
        }
        for j in range(securities.m)
    ]


def _market(cfg, spec, sec_data, ket):
    if sec_data is None:
        securities, prices, agent = securitize(spec, cfg.theta), "pv", {}
    else:
        securities, prices, agent = parse_securities(sec_data, spec)
    if prices == "pv":
        prices = price_securities(securities, ket)
    return securities, prices, agent


def _cmd_price(cfg, spec, sec_data, out):
    res = _solve(cfg, spec)
    ket = entangle(res.ket)
    securities, prices, _ = _market(cfg, spec, sec_data, ket)
    comp = market_completeness(securities, spec.n_paths)
    out["equilibrium"] = _equilibrium_section(spec, res)
    out["securities"] = _securities_rows(securities, prices, trace_out_game(ket))
    out["completeness"] = {"rank": comp.rank, "n_states": comp.n_states, "complete": comp.complete}
    return res


def _portfolio_section(spec, securities, prices, agent, ket):
    utility, e0, w, beliefs = parse_agent(agent, securities.m, spec.n_paths, rational_beliefs(ket))
    pf = solve_portfolio(utility, securities, prices, beliefs, e0, w)
    comp = market_completeness(securities, spec.n_paths)
    section = {
        "agent": {"gamma": utility.gamma, "beta": utility.beta, "endowment_c0": e0, "endowment_shares": w},
        "prices": prices.prices,
        "holdings": pf.holdings,
        "c0": pf.c0,
        "consumption": pf.consumption,
        "foc_residuals": pf.foc_residuals,
        "budget_residual": pf.budget_residual,
        "completeness": {"rank": comp.rank, "n_states": comp.n_states, "complete": comp.complete},
        "pareto_check": None,
    }
    try:
        rep = check_pareto_condition(utility, pf, prices, ket)
    except QNashError as e:
        log.warning("pareto check skipped: %s", e)
    else:
        section["pareto_check"] = {
            "ok": rep.ok,
            "state_residuals": rep.state_residuals,
            "max_residual": rep.max_residual,
            "weighted_residuals": rep.weighted_residuals,
            "weighted_ok": rep.weighted_ok,
            "excluded_states": list(rep.excluded_states),
        }
    return section


def _cmd_portfolio(cfg, spec, sec_data, out):
    res = _solve(cfg, spec)
    ket = entangle(res.ket)
    securities, prices, agent = _market(cfg, spec, sec_data, ket)
    out["equilibrium"] = _equilibrium_section(spec, res)
    out["portfolio"] = _portfolio_section(spec, securities, prices, agent, ket)
    return res


def _cmd_demo(cfg, spec, out):
    res, ket = _cmd_lottery(cfg, spec, out)
    bel = rational_beliefs(ket)
    agents = (Agent(UtilitySpec(1.0, spec.discount), 1.0, bel), Agent(UtilitySpec(2.0, spec.discount), 1.0, bel))
    econ = EconomySpec(agents, 4.0, consistent_aggregates(agents, 4.0, spec.discount, spec.n_paths))
    out["economy"] = _economy_section(econ, solve_pareto(econ), ket)
    securities = securitize(spec, cfg.theta)
    prices = price_securities(securities, ket)
    comp = market_completeness(securities, spec.n_paths)
    out["securities"] = _securities_rows(securities, prices, trace_out_game(ket))
    out["completeness"] = {"rank": comp.rank, "n_states": comp.n_states, "complete": comp.complete}
    agent = {"gamma": 1.0, "beta": spec.discount, "endowment_c0": 1.0, "endowment_shares": [1.0] * securities.m}
    out["portfolio"] = _portfolio_section(spec, securities, prices, agent, ket)
    return res


def _inputs(cfg, n_min, n_max):
    if not n_min <= len(cfg.inputs) <= n_max:
        raise ValidationError(f"{cfg.command} takes {n_min}..{n_max} input files", "inputs")
    return cfg.inputs


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Execute one subcommand. Returns ``(exit code, report)``."""
    t0 = time.perf_counter()
    report = {
        "tool": "qnash",
        "version": __version__,
        "command": cfg.command,
        "inputs": {
            "files": list(cfg.inputs),
            "options": {
                "tol": cfg.tol, "seed": cfg.seed, "max_iter": cfg.max_iter,
                "damping": cfg.damping, "restarts": cfg.restarts, "theta": cfg.theta,
            },
        },
        "results": {},
        "error": None,
    }
    out = report["results"]
    code = EXIT_OK
    try:
        if cfg.command == "demo":
            files = _inputs(cfg, 0, 1) or ["two_company.json"]
        else:
            files = _inputs(cfg, 1, 2)
        spec = parse_game(load_json(files[0]))
        report["inputs"]["game"] = _game_echo(spec)
        extra = load_json(files[1]) if len(files) > 1 else None
        if cfg.command == "solve":
            res = _cmd_solve(cfg, spec, out)
        elif cfg.command == "lottery":
            res, _ = _cmd_lottery(cfg, spec, out)
        elif cfg.command == "economy":
            if extra is None:
                raise ValidationError("economy needs a game file and an economy file", "inputs")
            res = _cmd_economy(cfg, spec, extra, out)
        elif cfg.command == "price":
            res = _cmd_price(cfg, spec, extra, out)
        elif cfg.command == "portfolio":
            res = _cmd_portfolio(cfg, spec, extra, out)
        else:
            res = _cmd_demo(cfg, spec, out)
        if not res.certified:
            raise Uncertified(f"equilibrium not certified at tol={cfg.tol}; epsilon={res.epsilon:.3e}")
    except (ValidationError, ParseError) as e:
        code = EXIT_INVALID
        report["error"] = {"code": e.code, "message": str(e), "field": getattr(e, "field", None)}
    except (Uncertified, NoInteriorSolution, NoInteriorOptimum) as e:
        code = EXIT_UNCERTIFIED
        report["error"] = {"code": e.code, "message": str(e), "field": None}
    except QNashError as e:
        code = EXIT_INVALID
        report["error"] = {"code": e.code, "message": str(e), "field": None}
    if report["error"]:
        log.error("%s: %s", report["error"]["code"], report["error"]["message"])
    report["timing"] = {"seconds": time.perf_counter() - t0} if cfg.timing else None
    return code, _clean(report)


# -- table rendering ------------------------------------------------------------


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, list):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    return str(v)


def _rows(prefix, obj, rows):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _rows(f"{prefix}.{k}" if prefix else str(k), v, rows)
    elif isinstance(obj, list) and obj and isinstance(obj[0], dict):
        for k, v in enumerate(obj):
            _rows(f"{prefix}[{k}]", v, rows)
    else:
        rows.append((prefix, _fmt(obj)))


def emit_table(report: dict) -> str:
    rows = []
    _rows("", {k: report[k] for k in ("command", "results", "error") if k in report}, rows)
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


# -- entry point ----------------------------------------------------------------


def _env(name, cast, default):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise ValidationError(f"cannot parse {raw!r}", ENV_PREFIX + name.upper()) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnash", description="Quantum Nash equilibria and the exchange economies priced by them."
    )
    parser.add_argument("--version", action="version", version=f"qnash {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "equilibrium pricing matrices and present values",
        "lottery": "density operators and rational beliefs of the entangled lottery",
        "economy": "Pareto allocation and price-condition checks; files: GAME ECONOMY",
        "price": "security prices and market completeness; files: GAME [SECURITIES]",
        "portfolio": "optimal holdings and the Pareto condition; files: GAME [SECURITIES]",
        "demo": "the two-company example end to end",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("inputs", nargs="*", metavar="FILE")
        p.add_argument("--format", choices=("json", "table"), default=_env("format", str, "json"))
        p.add_argument("--tol", type=float, default=_env("tol", float, 1e-9))
        p.add_argument("--seed", type=int, default=_env("seed", int, 0))
        p.add_argument("--max-iter", type=int, default=_env("max_iter", int, 200))
        p.add_argument("--damping", type=float, default=_env("damping", float, 0.5))
        p.add_argument("--restarts", type=int, default=_env("restarts", int, 20))
        p.add_argument("--theta", type=float, default=_env("theta", float, 1.0))
        p.add_argument("--no-timing", action="store_true", help="omit the timing field")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig(
            args.command, args.inputs, args.format, args.tol, args.seed, args.max_iter,
            args.damping, args.restarts, args.theta, not args.no_timing,
        )
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    code, report = run(cfg)
    print(emit_json(report) if cfg.format == "json" else emit_table(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
