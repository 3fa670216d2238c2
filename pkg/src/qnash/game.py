"""Finite games as path spaces carrying complex price amplitudes.

Paths are the pure-strategy profiles of the game. Strategy tuples are
ordered by player ``(s_1, ..., s_n)`` and all indices are 0-based. The flat
path index is row-major with the *last* player outermost, so a vector of
length ``N`` reshapes to a tensor of shape ``dims[::-1]``; player ``i`` lives
on tensor axis ``n - 1 - i``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BasisMismatch,
    IndexOutOfRange,
    NormMismatch,
    NotUnitary,
    ValidationError,
)

CONSTRUCTION_TOL = 1e-9
PROPERTY_TOL = 1e-12
MAX_PATHS = 1_000_000


class Normalization(enum.Enum):
    RAW = "raw"  # sum |psi|^2 == D
    FUTURE_VALUE = "future_value"  # sum |q|^2 == 1


class Basis(enum.Enum):
    GAME = "game"
    GAME_LOTTERY = "game_lottery"


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GameSpec:
    """A finite game of strategy.

    ``payoffs`` has shape ``(n, N)``: row ``i`` is player ``i``'s payoff on
    every path in canonical order.
    """

    dims: tuple[int, ...]
    payoffs: np.ndarray
    discount: float = 1.0
    names: tuple[str, ...] = ()
    labels: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValidationError("at least one player required", "dims")
        for i, d in enumerate(dims):
            if d < 1:
                raise ValidationError("strategy count must be >= 1", f"dims[{i}]")
        n_paths = math.prod(dims)
        if n_paths > MAX_PATHS:
            raise ValidationError(f"{n_paths} paths exceeds limit {MAX_PATHS}", "dims")
        payoffs = np.asarray(self.payoffs, dtype=float)
        if payoffs.shape != (len(dims), n_paths):
            raise ValidationError(
                f"expected shape {(len(dims), n_paths)}, got {payoffs.shape}", "payoffs"
            )
        if not np.all(np.isfinite(payoffs)):
            raise ValidationError("payoffs must be finite", "payoffs")
        d = float(self.discount)
        if not (d > 0 and math.isfinite(d)):
            raise ValidationError("discount must be positive and finite", "discount")
        if d > 1:
            warnings.warn(f"discount factor {d} > 1", stacklevel=3)
        names = tuple(self.names) or tuple(f"P{i + 1}" for i in range(len(dims)))
        labels = tuple(tuple(l) for l in self.labels) or tuple(
            tuple(str(s) for s in range(di)) for di in dims
        )
        if len(names) != len(dims):
            raise ValidationError("one name per player required", "names")
        if len(labels) != len(dims) or any(len(l) != di for l, di in zip(labels, dims)):
            raise ValidationError("one label per strategy required", "labels")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "payoffs", _frozen(payoffs))
        object.__setattr__(self, "discount", d)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "labels", labels)

    @property
    def n_players(self) -> int:
        return len(self.dims)

    @property
    def n_paths(self) -> int:
        return self.payoffs.shape[1]

    def payoff_tensor(self, player: int) -> np.ndarray:
        return self.payoffs[player].reshape(self.dims[::-1])

    def payoff_operator(self, player: int) -> PayoffOperator:
        return PayoffOperator(self.payoffs[player])

    def path_label(self, path: GamePath) -> str:
        # outermost player first, as in B_0A_1
        return "".join(
            f"{self.names[i]}{self.labels[i][s]}" for i, s in reversed(list(enumerate(path.strategies)))
        )


@dataclass(frozen=True)
class GamePath:
    strategies: tuple[int, ...]
    index: int


def path_index(dims, strategies) -> int:
    dims = tuple(dims)
    if len(strategies) != len(dims):
        raise IndexOutOfRange(f"expected {len(dims)} strategies, got {len(strategies)}")
    for i, (s, d) in enumerate(zip(strategies, dims)):
        if not 0 <= s < d:
            raise IndexOutOfRange(f"strategy {s} of player {i} outside 0..{d - 1}")
    return int(np.ravel_multi_index(tuple(strategies)[::-1], dims[::-1]))


def path_strategies(dims, index: int) -> tuple[int, ...]:
    dims = tuple(dims)
    if not 0 <= index < math.prod(dims):
        raise IndexOutOfRange(f"path index {index} outside 0..{math.prod(dims) - 1}")
    return tuple(int(s) for s in np.unravel_index(index, dims[::-1]))[::-1]


def enumerate_paths(spec_or_dims) -> list[GamePath]:
    dims = spec_or_dims.dims if isinstance(spec_or_dims, GameSpec) else tuple(spec_or_dims)
    return [GamePath(path_strategies(dims, a), a) for a in range(math.prod(dims))]


def strategy_table(dims) -> np.ndarray:
    """``(N, n)`` integer array; row ``a`` holds the strategies on path ``a``."""
    dims = tuple(dims)
    idx = np.indices(dims[::-1]).reshape(len(dims), -1)
    return idx[::-1].T.copy()


@dataclass(frozen=True, eq=False)
class PriceKet:
    """Complex price amplitudes over game paths (or game x lottery pairs).

    ``dims`` are the game's strategy counts. For ``Basis.GAME_LOTTERY`` the
    amplitude vector has ``N * N`` entries indexed ``alpha * N + omega``.
    """

    amplitudes: np.ndarray
    dims: tuple[int, ...]
    normalization: Normalization = Normalization.FUTURE_VALUE
    discount: float = 1.0
    basis: Basis = Basis.GAME
    tol: float = field(default=CONSTRUCTION_TOL, repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        dims = tuple(int(d) for d in self.dims)
        n_paths = math.prod(dims)
        size = n_paths if self.basis is Basis.GAME else n_paths * n_paths
        if amps.size != size:
            raise BasisMismatch(f"expected {size} amplitudes, got {amps.size}")
        target = 1.0 if self.normalization is Normalization.FUTURE_VALUE else float(self.discount)
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - target) > self.tol:
            raise NormMismatch(f"squared norm {norm2!r} differs from {target!r}")
        object.__setattr__(self, "amplitudes", _frozen(amps))
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "discount", float(self.discount))

    @property
    def n_paths(self) -> int:
        return math.prod(self.dims)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def prices(self) -> np.ndarray:
        """Squared moduli of the stored amplitudes."""
        return np.abs(self.amplitudes) ** 2

    def capitalized_prices(self) -> np.ndarray:
        p = self.prices()
        return p / self.discount if self.normalization is Normalization.RAW else p

    def game_prices(self) -> np.ndarray:
        """Capitalized prices marginalised onto game paths."""
        p = self.capitalized_prices()
        if self.basis is Basis.GAME_LOTTERY:
            p = p.reshape(self.n_paths, self.n_paths).sum(axis=1)
        return p


@dataclass(frozen=True, eq=False)
class PayoffOperator:
    """Diagonal operator: weights on the Arrow-Debreu path projectors."""

    diagonal: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diagonal, dtype=float).ravel()
        if not np.all(np.isfinite(d)):
            raise ValidationError("payoff weights must be finite", "diagonal")
        object.__setattr__(self, "diagonal", _frozen(d))

    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)


@dataclass(frozen=True, eq=False)
class PricingMatrix:
    player: int
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(np.asarray(self.weights, dtype=float)))

    def matrix(self) -> np.ndarray:
        return np.diag(self.weights)


def normalize_to_future_value(psi: PriceKet, discount: float | None = None, tol=CONSTRUCTION_TOL) -> PriceKet:
    d = psi.discount if discount is None else float(discount)
    if psi.normalization is Normalization.FUTURE_VALUE:
        return psi
    norm2 = psi.norm2
    if abs(norm2 - d) > tol:
        raise NormMismatch(f"squared norm {norm2!r} differs from discount {d!r}")
    return PriceKet(
        psi.amplitudes / math.sqrt(d), psi.dims, Normalization.FUTURE_VALUE, d, psi.basis, tol
    )


def present_value(q: PriceKet, op: PayoffOperator, discount: float | None = None) -> float:
    """``D <Q|op|Q>`` for a future-value ket.

    On a joint game-lottery ket the operator is lifted to act on the game
    factor only.
    """
    d = q.discount if discount is None else float(discount)
    weights = op.diagonal
    if q.basis is Basis.GAME_LOTTERY and weights.size == q.n_paths:
        weights = np.repeat(weights, q.n_paths)
    if weights.size != q.amplitudes.size:
        raise BasisMismatch(
            f"operator has {op.diagonal.size} entries, ket has {q.amplitudes.size}"
        )
    return float(d * np.dot(weights, q.capitalized_prices()))


def _player_mask(dims, player, strategy):
    if not 0 <= player < len(dims):
        raise IndexOutOfRange(f"player {player} outside 0..{len(dims) - 1}")
    if not 0 <= strategy < dims[player]:
        raise IndexOutOfRange(f"strategy {strategy} outside 0..{dims[player] - 1}")
    return strategy_table(dims)[:, player] == strategy


def pricing_functional(q: PriceKet, player: int, f: int, g: int) -> complex:
    """``<Q| C_f^dagger C_g |Q>`` where ``C_s`` projects on paths with the
    player fixed at strategy ``s``."""
    amps = q.amplitudes
    if q.basis is Basis.GAME_LOTTERY:
        amps = amps.reshape(q.n_paths, q.n_paths)
    mf = _player_mask(q.dims, player, f)
    mg = _player_mask(q.dims, player, g)
    left = amps * (mf if amps.ndim == 1 else mf[:, None])
    right = amps * (mg if amps.ndim == 1 else mg[:, None])
    return complex(np.vdot(left, right))


def pricing_matrices(q: PriceKet) -> tuple[PricingMatrix, ...]:
    """Per-player marginals of the capitalized prices."""
    p = q.game_prices().reshape(q.dims[::-1])
    n = len(q.dims)
    out = []
    for i in range(n):
        axis = n - 1 - i
        others = tuple(a for a in range(n) if a != axis)
        out.append(PricingMatrix(i, p.sum(axis=others) if others else p))
    return tuple(out)


def is_unitary(u, tol=CONSTRUCTION_TOL) -> bool:
    u = np.asarray(u, dtype=complex)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), rtol=0, atol=tol
    )


def apply_unitary(q: PriceKet, u, tol=CONSTRUCTION_TOL) -> PriceKet:
    u = np.asarray(u, dtype=complex)
    if u.shape != (q.amplitudes.size, q.amplitudes.size):
        raise BasisMismatch(f"unitary of shape {u.shape} on ket of size {q.amplitudes.size}")
    if not is_unitary(u, tol):
        raise NotUnitary("U^dagger U deviates from identity")
    return PriceKet(u @ q.amplitudes, q.dims, q.normalization, q.discount, q.basis, q.tol)


def check_price_conserving(u, q: PriceKet, tol=CONSTRUCTION_TOL) -> bool:
    moved = apply_unitary(q, u, tol)
    return bool(np.max(np.abs(moved.prices() - q.prices())) <= tol)


def phase_unitary(phases) -> np.ndarray:
    return np.diag(np.exp(1j * np.asarray(phases, dtype=float)))


def sample_paths(q: PriceKet, size: int, seed=0) -> np.ndarray:
    """Draw ``size`` path indices with probability equal to the capitalized prices."""
    p = q.game_prices()
    p = np.clip(p, 0, None)
    rng = np.random.default_rng(seed)
    return rng.choice(p.size, size=size, p=p / p.sum())


def sample_path(q: PriceKet, seed=0) -> GamePath:
    a = int(sample_paths(q, 1, seed)[0])
    return GamePath(path_strategies(q.dims, a), a)
