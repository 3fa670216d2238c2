"""JSON input files: game, economy and securities specifications."""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .economy import Agent, EconomySpec, UtilitySpec, consistent_aggregates
from .errors import ParseError, ValidationError
from .game import GameSpec
from .securities import MarketPrices, SecuritySet

BUNDLED = ("two_company.json", "two_company_economy.json", "two_company_securities.json")


def resolve(path) -> Path:
    """Filesystem path, falling back to a bundled fixture of the same name."""
    p = Path(path)
    if p.exists() or p.name not in BUNDLED:
        return p
    return Path(str(resources.files("qnash") / "data" / p.name))


def load_json(path):
    p = resolve(path)
    try:
        with open(p) as fh:
            return json.load(fh)
    except FileNotFoundError as e:
        raise ParseError(f"{path}: file not found") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: line {e.lineno} col {e.colno}: {e.msg}") from e


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise ValidationError("expected an object", where or "<root>")
    if key not in obj:
        raise ValidationError("missing field", f"{where}.{key}" if where else key)
    return obj[key]


def _number(value, where, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValidationError("expected a finite number", where)
    if positive and not value > 0:
        raise ValidationError("must be positive", where)
    return float(value)


def _numbers(value, where, size=None):
    if not isinstance(value, list):
        raise ValidationError("expected an array of numbers", where)
    out = [_number(v, f"{where}[{k}]") for k, v in enumerate(value)]
    if size is not None and len(out) != size:
        raise ValidationError(f"expected {size} entries, got {len(out)}", where)
    return out


def parse_game(data) -> GameSpec:
    players = _require(data, "players", "")
    if not isinstance(players, list) or not players:
        raise ValidationError("expected a non-empty array", "players")
    names, labels = [], []
    for i, p in enumerate(players):
        name = _require(p, "name", f"players[{i}]")
        strategies = _require(p, "strategies", f"players[{i}]")
        if not isinstance(strategies, list) or not strategies:
            raise ValidationError("expected a non-empty array", f"players[{i}].strategies")
        names.append(str(name))
        labels.append(tuple(str(s) for s in strategies))
    if len(set(names)) != len(names):
        raise ValidationError("player names must be unique", "players")
    dims = tuple(len(l) for l in labels)
    n_paths = math.prod(dims)
    payoffs = _require(data, "payoffs", "")
    if not isinstance(payoffs, dict):
        raise ValidationError("expected an object keyed by player name", "payoffs")
    extra = set(payoffs) - set(names)
    if extra:
        raise ValidationError(f"unknown player(s) {sorted(extra)}", "payoffs")
    rows = [_numbers(_require(payoffs, n, "payoffs"), f"payoffs.{n}", n_paths) for n in names]
    discount = _number(data.get("discount", 1.0), "discount", positive=True)
    return GameSpec(dims, np.array(rows), discount, tuple(names), tuple(labels))


def game_to_json(spec: GameSpec) -> dict:
    return {
        "players": [{"name": n, "strategies": list(l)} for n, l in zip(spec.names, spec.labels)],
        "payoffs": {n: spec.payoffs[i].tolist() for i, n in enumerate(spec.names)},
        "discount": spec.discount,
    }


def parse_economy(data, n_states: int, rational=None, discount: float = 1.0) -> EconomySpec:
    """``rational`` supplies beliefs for agents declared ``"beliefs": "rational"``."""
    agents_raw = _require(data, "agents", "")
    if not isinstance(agents_raw, list) or not agents_raw:
        raise ValidationError("expected a non-empty array", "agents")
    agents = []
    for i, a in enumerate(agents_raw):
        where = f"agents[{i}]"
        if not isinstance(a, dict):
            raise ValidationError("expected an object", where)
        gamma = _number(a.get("gamma", 1.0), f"{where}.gamma", positive=True)
        beta = _number(a.get("beta", 1.0), f"{where}.beta", positive=True)
        lam = _number(a.get("lambda", 1.0), f"{where}.lambda", positive=True)
        beliefs = a.get("beliefs", "rational")
        if beliefs == "rational":
            if rational is None:
                raise ValidationError("rational beliefs need a solved game", f"{where}.beliefs")
            beliefs = rational
        else:
            beliefs = _numbers(beliefs, f"{where}.beliefs", n_states)
            if any(b < 0 for b in beliefs) or abs(sum(beliefs) - 1) > 1e-9:
                raise ValidationError("beliefs must lie on the simplex", f"{where}.beliefs")
        agents.append(Agent(UtilitySpec(gamma, beta), lam, beliefs))
    c0 = _number(_require(data, "aggregate_c0", ""), "aggregate_c0", positive=True)
    agg = data.get("aggregate_c", "consistent")
    if agg == "consistent":
        agg = consistent_aggregates(agents, c0, discount, n_states)
    else:
        agg = _numbers(agg, "aggregate_c", n_states)
        for k, v in enumerate(agg):
            if not v > 0:
                raise ValidationError("must be positive", f"aggregate_c[{k}]")
    return EconomySpec(tuple(agents), c0, agg)


def parse_securities(data, spec: GameSpec):
    """Returns ``(SecuritySet, prices or "pv", agent dict)``."""
    raw = _require(data, "securities", "")
    if not isinstance(raw, list) or not raw:
        raise ValidationError("expected a non-empty array", "securities")
    rows, names, positions = [], [], []
    for j, s in enumerate(raw):
        where = f"securities[{j}]"
        if not isinstance(s, dict):
            raise ValidationError("expected an object", where)
        names.append(str(s.get("name", f"S{j + 1}")))
        if "game_position" in s:
            pos = s["game_position"]
            if isinstance(pos, str) and pos in spec.names:
                pos = spec.names.index(pos)
            if isinstance(pos, bool) or not isinstance(pos, int) or not 0 <= pos < spec.n_players:
                raise ValidationError("unknown player", f"{where}.game_position")
            theta = _number(s.get("theta", 1.0), f"{where}.theta", positive=True)
            rows.append(theta * spec.payoffs[pos])
            positions.append((pos, theta))
        else:
            rows.append(_numbers(_require(s, "payoffs", where), f"{where}.payoffs", spec.n_paths))
            positions.append(None)
    securities = SecuritySet(np.array(rows), tuple(names), tuple(positions))
    prices = data.get("prices", "pv")
    if prices != "pv":
        prices = MarketPrices(_numbers(prices, "prices", securities.m))
    agent = data.get("agent", {})
    if not isinstance(agent, dict):
        raise ValidationError("expected an object", "agent")
    return securities, prices, agent


def parse_agent(agent: dict, m: int, n_states: int, rational):
    where = "agent"
    utility = UtilitySpec(
        _number(agent.get("gamma", 1.0), f"{where}.gamma", positive=True),
        _number(agent.get("beta", 1.0), f"{where}.beta", positive=True),
    )
    e0 = _number(agent.get("endowment_c0", 1.0), f"{where}.endowment_c0")
    w = agent.get("endowment_shares")
    w = [0.0] * m if w is None else _numbers(w, f"{where}.endowment_shares", m)
    beliefs = agent.get("beliefs", "rational")
    beliefs = rational if beliefs == "rational" else _numbers(beliefs, f"{where}.beliefs", n_states)
    return utility, e0, np.array(w), np.asarray(beliefs, dtype=float)
