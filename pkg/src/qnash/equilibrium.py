"""Quantum Nash equilibria over product (separable) price kets.

A mixed profile is the tuple of per-player pricing matrices of a product
ket. The Nash map moves each player's weights toward the pure strategies
that beat their current mix; its fixed points are the equilibria.
"""

from __future__ import annotations

import enum
import itertools
import logging
import weakref
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotBimatrix, ValidationError
from .game import (
    CONSTRUCTION_TOL,
    GameSpec,
    Normalization,
    PriceKet,
    path_index,
    present_value,
    pricing_matrices,
)

log = logging.getLogger(__name__)


class Method(enum.Enum):
    ITERATIVE = "iterative"
    SUPPORT_ENUM = "support_enum"
    SEQUENTIAL = "sequential"


@dataclass(frozen=True, eq=False)
class MixedProfile:
    """Per-player probability vectors (diagonals of the pricing matrices)."""

    weights: tuple[np.ndarray, ...]
    tol: float = field(default=CONSTRUCTION_TOL, repr=False)

    def __post_init__(self):
        ws = []
        for i, w in enumerate(self.weights):
            w = np.array(w, dtype=float).ravel()
            if w.size == 0 or np.any(w < -self.tol) or abs(w.sum() - 1) > self.tol:
                raise ValidationError("weights must lie on the simplex", f"weights[{i}]")
            w.setflags(write=False)
            ws.append(w)
        object.__setattr__(self, "weights", tuple(ws))

    @classmethod
    def from_ket(cls, q: PriceKet, tol=CONSTRUCTION_TOL) -> MixedProfile:
        return cls(tuple(m.weights for m in pricing_matrices(q)), tol)

    @classmethod
    def uniform(cls, dims) -> MixedProfile:
        return cls(tuple(np.full(d, 1.0 / d) for d in dims))

    @classmethod
    def vertex(cls, dims, strategies) -> MixedProfile:
        return cls(tuple(np.eye(d)[s] for d, s in zip(dims, strategies)))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(w.size for w in self.weights)

    def flat(self) -> np.ndarray:
        return np.concatenate(self.weights)

    def distance(self, other: MixedProfile) -> float:
        return float(np.max(np.abs(self.flat() - other.flat())))

    def replace(self, player: int, w) -> MixedProfile:
        ws = list(self.weights)
        ws[player] = w
        return MixedProfile(tuple(ws), self.tol)


@dataclass(frozen=True, eq=False)
class Verification:
    ok: bool
    worst_player: int
    worst_gain: float
    gains: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    profile: MixedProfile
    ket: PriceKet
    pv: tuple[float, ...]
    epsilon: float
    method: Method
    iterations: int = 0
    certified: bool = True
    support: tuple[tuple[int, ...], ...] = ()
    alternatives: tuple[MixedProfile, ...] = ()


class Equilibria(list):
    """List of equilibria; ``skipped`` records singular supports."""

    def __init__(self, items=(), skipped=()):
        super().__init__(items)
        self.skipped = list(skipped)


@dataclass
class SolverConfig:
    max_iter: int = 200
    damping: float = 0.5
    restarts: int = 20
    tol: float = 1e-9
    seed: int = 0
    newton_iter: int = 60
    snap: float = 1e-4
    distinct: float = 1e-4


def _check_dims(spec: GameSpec, profile: MixedProfile):
    if profile.dims != spec.dims:
        raise DimensionMismatch(f"profile dims {profile.dims} != game dims {spec.dims}")


_own_first_cache: "weakref.WeakKeyDictionary[GameSpec, list]" = weakref.WeakKeyDictionary()


def _own_first(spec: GameSpec):
    """Per player: payoffs as a ``(d_i, N / d_i)`` matrix, others flattened with
    the highest remaining player outermost."""
    mats = _own_first_cache.get(spec)
    if mats is None:
        n = spec.n_players
        mats = []
        for i in range(n):
            t = np.moveaxis(spec.payoff_tensor(i), n - 1 - i, 0)
            mats.append(spec.discount * t.reshape(spec.dims[i], -1))
        _own_first_cache[spec] = mats
    return mats


def _others(weights, player):
    out = np.ones(1)
    for j in range(len(weights) - 1, -1, -1):
        if j != player:
            out = np.kron(out, weights[j]) if out.size > 1 else weights[j]
    return out


def deviation_values(spec: GameSpec, weights, player: int) -> np.ndarray:
    """Present value to ``player`` of each pure strategy, others held at ``weights``."""
    return _own_first(spec)[player] @ _others(weights, player)


def profile_payoff(spec: GameSpec, profile: MixedProfile, player: int) -> float:
    _check_dims(spec, profile)
    return float(deviation_values(spec, profile.weights, player) @ profile.weights[player])


def _gains(spec: GameSpec, weights):
    out = []
    for i in range(spec.n_players):
        v = deviation_values(spec, weights, i)
        out.append(v - v @ weights[i])
    return out


def _nash_map(spec: GameSpec, weights):
    new = []
    for w, g in zip(weights, _gains(spec, weights)):
        phi = np.maximum(g, 0.0)
        new.append((w + phi) / (1.0 + phi.sum()))
    return new


def nash_map_step(spec: GameSpec, profile: MixedProfile) -> MixedProfile:
    _check_dims(spec, profile)
    return MixedProfile(tuple(_nash_map(spec, profile.weights)), profile.tol)


def verify_equilibrium(spec: GameSpec, profile: MixedProfile, eps: float = 1e-9) -> Verification:
    _check_dims(spec, profile)
    gains = tuple(float(max(g.max(), 0.0)) for g in _gains(spec, profile.weights))
    worst = int(np.argmax(gains))
    return Verification(gains[worst] <= eps, worst, gains[worst], gains)


def profile_to_ket(profile: MixedProfile, discount: float = 1.0) -> PriceKet:
    amps = np.ones(1)
    for w in reversed(profile.weights):
        amps = np.kron(amps, np.sqrt(np.clip(w, 0, None)))
    amps = amps / np.linalg.norm(amps)
    return PriceKet(amps, profile.dims, Normalization.FUTURE_VALUE, discount)


def _result(spec, profile, method, iterations=0, certified=True, support=(), alternatives=()):
    ket = profile_to_ket(profile, spec.discount)
    pv = tuple(present_value(ket, spec.payoff_operator(i)) for i in range(spec.n_players))
    eps = verify_equilibrium(spec, profile).worst_gain
    return EquilibriumResult(profile, ket, pv, eps, method, iterations, certified, support, alternatives)


# -- iterative solver ------------------------------------------------------


def _project(w):
    w = np.clip(w, 0.0, None)
    s = w.sum()
    return w / s if s > 0 else np.full(w.size, 1.0 / w.size)


def _unpack(x, dims):
    out, k = [], 0
    for d in dims:
        head = x[k : k + d - 1]
        out.append(np.append(head, 1.0 - head.sum()))
        k += d - 1
    return out


def _pack(weights):
    return np.concatenate([w[:-1] for w in weights])


def _residual(spec, x):
    ws = _unpack(x, spec.dims)
    return _pack(_nash_map(spec, ws)) - x


def _newton_polish(spec, weights, cfg: SolverConfig, stop=None):
    """Newton's method on ``NashMap(p) - p = 0`` in reduced coordinates.

    The map is piecewise smooth with every piece vanishing at the fixed
    point, so Newton steps taken from any nearby piece land close to it.
    """
    x = _pack(weights)
    if x.size == 0:
        return weights, 0
    r = _residual(spec, x)
    its = 0
    for its in range(1, cfg.newton_iter + 1):
        rn = np.max(np.abs(r))
        if rn < 1e-15 or (stop is not None and stop(_unpack(x, spec.dims))):
            break
        h = max(1e-9, 1e-4 * rn)
        jac = np.empty((x.size, x.size))
        for k in range(x.size):
            e = np.zeros(x.size)
            e[k] = h
            jac[:, k] = (_residual(spec, x + e) - r) / h
        step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        t = 1.0
        while t > 1e-4:
            xn = _pack([_project(w) for w in _unpack(x + t * step, spec.dims)])
            rn_new = _residual(spec, xn)
            if np.max(np.abs(rn_new)) < rn:
                x, r = xn, rn_new
                break
            t *= 0.5
        else:
            break
    return [_project(w) for w in _unpack(x, spec.dims)], its


# snapping only proposes candidates; verify_equilibrium decides
_SNAPS = (1e-2, 1e-1, 0.25)


def _snap(weights, threshold):
    return [_project(np.where(w < threshold, 0.0, w)) for w in weights]


def _certify(spec, candidates, best, tol):
    for cand in candidates:
        prof = MixedProfile(tuple(cand))
        eps = verify_equilibrium(spec, prof).worst_gain
        if best is None or eps < best[1]:
            best = (prof, eps)
    return best, best[1] <= tol


def _run_once(spec, start, cfg: SolverConfig):
    """One restart: damped iteration in blocks, each block followed by
    snapping and Newton polishing; stops once a candidate certifies."""
    ws = start
    lam = cfg.damping
    best, its, block = None, 0, 25
    while its < cfg.max_iter:
        for _ in range(min(block, cfg.max_iter - its)):
            mapped = _nash_map(spec, ws)
            ws = [(1 - lam) * w + lam * m for w, m in zip(ws, mapped)]
            its += 1
        best, done = _certify(spec, [_snap(ws, t) for t in (cfg.snap, *_SNAPS)], best, cfg.tol)
        if done:
            break
        def snapped_ok(cand):
            return any(
                verify_equilibrium(spec, MixedProfile(tuple(_snap(cand, t))), cfg.tol).ok
                for t in _SNAPS
            )

        polished, nits = _newton_polish(spec, ws, cfg, stop=snapped_ok)
        its += nits
        best, done = _certify(spec, [polished] + [_snap(polished, t) for t in (cfg.snap, *_SNAPS)], best, cfg.tol)
        if done:
            break
    return best[0], best[1], its


def _lexkey(profile):
    return tuple(np.round(profile.flat(), 12))


def solve_iterative(spec: GameSpec, config: SolverConfig | None = None) -> EquilibriumResult:
    """Damped Nash-map iteration from random simplex starts, Newton-polished.

    Returns the best certified profile (smallest epsilon, then
    lexicographic); if no restart certifies, the best one found is returned
    with ``certified=False``.
    """
    cfg = config or SolverConfig()
    rng = np.random.default_rng(cfg.seed)
    found = []
    total = 0
    for r in range(max(cfg.restarts, 1)):
        if r == 0:
            start = [np.full(d, 1.0 / d) for d in spec.dims]
        else:
            start = [rng.dirichlet(np.ones(d)) for d in spec.dims]
        prof, eps, its = _run_once(spec, start, cfg)
        total += its
        found.append((eps, _lexkey(prof), prof))
    found.sort(key=lambda t: (t[0], t[1]))
    certified = [t for t in found if t[0] <= cfg.tol]
    distinct = []
    for _, _, prof in certified:
        if all(prof.distance(p) > cfg.distinct for p in distinct):
            distinct.append(prof)
    best = found[0][2]
    res = _result(spec, best, Method.ITERATIVE, total, bool(certified), alternatives=tuple(distinct))
    if not certified:
        log.warning("no restart certified at tol=%g; best epsilon %g", cfg.tol, res.epsilon)
    return res


# -- bimatrix support enumeration -------------------------------------------


def _indifference(payoff, own_support, other_support):
    """Mix over ``other_support`` making every row in ``own_support`` equal.

    ``payoff[r, c]``: payoff to the row player. Returns None if singular.
    """
    k = len(own_support)
    a = np.zeros((k + 1, k + 1))
    a[:k, :k] = payoff[np.ix_(own_support, other_support)]
    a[:k, k] = -1.0
    a[k, :k] = 1.0
    b = np.zeros(k + 1)
    b[k] = 1.0
    if abs(np.linalg.det(a)) < 1e-12:
        return None
    return np.linalg.solve(a, b)[:k]


def solve_support_enum(spec: GameSpec, tol: float = 1e-9) -> Equilibria:
    """All equilibria of a two-player game with equal-size supports."""
    if spec.n_players != 2:
        raise NotBimatrix(f"support enumeration needs 2 players, got {spec.n_players}")
    d1, d2 = spec.dims
    # a[s1, s2]: payoff to player 1; b[s2, s1]: payoff to player 2
    a = spec.payoffs[0].reshape(d2, d1).T * spec.discount
    b = spec.payoffs[1].reshape(d2, d1) * spec.discount
    found, skipped = [], []
    for k in range(1, min(d1, d2) + 1):
        for s1 in itertools.combinations(range(d1), k):
            for s2 in itertools.combinations(range(d2), k):
                q = _indifference(a, s1, s2)  # player 2's mix
                p = _indifference(b, s2, s1)  # player 1's mix
                if q is None or p is None:
                    skipped.append((s1, s2))
                    continue
                if np.any(p < -tol) or np.any(q < -tol):
                    continue
                w1 = np.zeros(d1)
                w1[list(s1)] = np.clip(p, 0, None)
                w2 = np.zeros(d2)
                w2[list(s2)] = np.clip(q, 0, None)
                prof = MixedProfile((w1 / w1.sum(), w2 / w2.sum()))
                if not verify_equilibrium(spec, prof, tol).ok:
                    continue
                if any(prof.distance(e.profile) <= tol for e in found):
                    continue
                found.append(_result(spec, prof, Method.SUPPORT_ENUM, support=(s1, s2)))
    if skipped:
        log.info("skipped %d singular supports", len(skipped))
    found.sort(key=lambda e: e.support)
    return Equilibria(found, skipped)


# -- sequential play --------------------------------------------------------


def sequential_best_response_ket(spec: GameSpec, leader: int, weights) -> PriceKet:
    """Leader moves first; the follower best-responds to each leader strategy.

    Ties in the follower's best response go to the lowest strategy index.
    The result is entangled whenever the best response depends on the
    leader's choice.
    """
    if spec.n_players != 2:
        raise NotBimatrix(f"sequential play needs 2 players, got {spec.n_players}")
    follower = 1 - leader
    weights = np.asarray(weights, dtype=complex)
    if weights.size != spec.dims[leader]:
        raise DimensionMismatch(f"expected {spec.dims[leader]} leader amplitudes")
    amps = np.zeros(spec.n_paths, dtype=complex)
    for s in range(spec.dims[leader]):
        def path(f):
            strat = [0, 0]
            strat[leader], strat[follower] = s, f
            return path_index(spec.dims, strat)

        values = [spec.payoffs[follower, path(f)] for f in range(spec.dims[follower])]
        amps[path(int(np.argmax(values)))] = weights[s]
    return PriceKet(amps, spec.dims, Normalization.FUTURE_VALUE, spec.discount)


def is_product_ket(q: PriceKet, tol=1e-10) -> bool:
    """True if the two-player ket factorises (Schmidt rank 1)."""
    if len(q.dims) != 2:
        raise NotBimatrix("product test implemented for two players")
    m = q.amplitudes.reshape(q.dims[::-1])
    s = np.linalg.svd(m, compute_uv=False)
    return bool(np.sum(s > tol * max(s[0], 1e-300)) <= 1)


def best_response_is_constant(spec: GameSpec, leader: int) -> bool:
    follower = 1 - leader
    brs = set()
    for s in range(spec.dims[leader]):
        vals = []
        for f in range(spec.dims[follower]):
            strat = [0, 0]
            strat[leader], strat[follower] = s, f
            vals.append(spec.payoffs[follower, path_index(spec.dims, strat)])
        brs.add(int(np.argmax(vals)))
    return len(brs) == 1


__all__ = [
    "Equilibria",
    "EquilibriumResult",
    "Method",
    "MixedProfile",
    "SolverConfig",
    "Verification",
    "best_response_is_constant",
    "deviation_values",
    "is_product_ket",
    "nash_map_step",
    "profile_payoff",
    "profile_to_ket",
    "sequential_best_response_ket",
    "solve_iterative",
    "solve_support_enum",
    "verify_equilibrium",
]

