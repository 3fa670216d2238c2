"""Single-bet lottery entangled with a game.

Lottery outcome ``omega`` ranges over the game's ``N`` paths. A joint ket
has amplitudes ``psi[alpha, omega]``; the physically used states are
supported on the diagonal ``omega == alpha`` and are stored as that
diagonal only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BasisMismatch, NormMismatch, ValidationError
from .game import (
    CONSTRUCTION_TOL,
    PROPERTY_TOL,
    Basis,
    Normalization,
    PriceKet,
)


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class JointKet:
    """Amplitudes over ``|f_alpha omega>``.

    Exactly one of ``diagonal`` (length ``N``) or ``matrix`` (``N x N``,
    rows = game path, columns = lottery outcome) is given. ``normalization``
    is ``None`` for the unnormalised output of the lottery operator.
    """

    dims: tuple[int, ...]
    diagonal: np.ndarray | None = None
    matrix: np.ndarray | None = None
    normalization: Normalization | None = Normalization.FUTURE_VALUE
    discount: float = 1.0
    tol: float = field(default=CONSTRUCTION_TOL, repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        n = math.prod(dims)
        object.__setattr__(self, "dims", dims)
        if (self.diagonal is None) == (self.matrix is None):
            raise ValidationError("give exactly one of diagonal or matrix", "amplitudes")
        if self.diagonal is not None:
            d = np.asarray(self.diagonal, dtype=complex).ravel()
            if d.size != n:
                raise BasisMismatch(f"expected {n} diagonal amplitudes, got {d.size}")
            object.__setattr__(self, "diagonal", _frozen(d))
        else:
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (n, n):
                raise BasisMismatch(f"expected {(n, n)} amplitude matrix, got {m.shape}")
            object.__setattr__(self, "matrix", _frozen(m))
        if self.normalization is not None:
            target = 1.0 if self.normalization is Normalization.FUTURE_VALUE else self.discount
            if abs(self.norm2 - target) > self.tol:
                raise NormMismatch(f"squared norm {self.norm2!r} differs from {target!r}")

    @property
    def n_paths(self) -> int:
        return math.prod(self.dims)

    @property
    def entangled_diagonal(self) -> bool:
        if self.diagonal is not None:
            return True
        m = self.matrix
        return bool(np.all(m[~np.eye(len(m), dtype=bool)] == 0))

    @property
    def norm2(self) -> float:
        a = self.diagonal if self.diagonal is not None else self.matrix
        return float(np.vdot(a, a).real)

    def as_matrix(self) -> np.ndarray:
        if self.matrix is not None:
            return np.array(self.matrix)
        return np.diag(self.diagonal)

    def scale(self) -> float:
        """Normalisation constant: 1 for future-value kets, ``D`` for raw ones."""
        if self.normalization is Normalization.RAW:
            return self.discount
        if self.normalization is None:
            return self.norm2
        return 1.0

    def to_price_ket(self) -> PriceKet:
        norm = self.normalization or Normalization.FUTURE_VALUE
        return PriceKet(
            self.as_matrix().ravel(), self.dims, norm, self.discount, Basis.GAME_LOTTERY, self.tol
        )


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray
    basis: str = "game"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("density operator must be square", "matrix")
        if not np.allclose(m, m.conj().T, rtol=0, atol=PROPERTY_TOL):
            raise ValidationError("density operator must be Hermitian", "matrix")
        if abs(np.trace(m).real - 1) > CONSTRUCTION_TOL:
            raise ValidationError(f"trace {np.trace(m).real!r} != 1", "matrix")
        if np.any(np.diag(m).real < -PROPERTY_TOL):
            raise ValidationError("negative diagonal entry", "matrix")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).real.copy()

    def spectrum(self) -> np.ndarray:
        return np.sort(np.linalg.eigvalsh(self.matrix))[::-1]

    def rank(self, tol=1e-12) -> int:
        return int(np.sum(self.spectrum() > tol))

    def is_pure(self, tol=1e-12) -> bool:
        return abs(np.trace(self.matrix @ self.matrix).real - 1) <= tol


def entangle(q: PriceKet) -> JointKet:
    """Place each path amplitude on the matching lottery outcome."""
    if q.basis is not Basis.GAME:
        raise BasisMismatch("entangle expects a game-basis ket")
    return JointKet(q.dims, diagonal=q.amplitudes, normalization=q.normalization, discount=q.discount)


def apply_lottery_operator(ket: JointKet) -> JointKet:
    """Keep ``omega == alpha`` components and annihilate the rest.

    The result is generally unnormalised; read its ``norm2``.
    """
    if ket.diagonal is not None:
        diag = ket.diagonal
    else:
        diag = np.diag(ket.matrix)
    return JointKet(ket.dims, diagonal=diag, normalization=None, discount=ket.discount)


def trace_out_lottery(ket: JointKet) -> DensityOperator:
    if ket.diagonal is not None:
        rho = np.diag(np.abs(ket.diagonal) ** 2)
    else:
        m = ket.matrix
        rho = m @ m.conj().T
    return DensityOperator(rho / ket.scale(), "game")


def trace_out_game(ket: JointKet) -> DensityOperator:
    if ket.diagonal is not None:
        rho = np.diag(np.abs(ket.diagonal) ** 2)
    else:
        m = ket.matrix
        rho = m.T @ m.conj()
    return DensityOperator(rho / ket.scale(), "lottery")


def rational_beliefs(ket: JointKet, discount: float | None = None, tol=CONSTRUCTION_TOL) -> np.ndarray:
    """Beliefs equal to the capitalized equilibrium prices ``|psi|^2 / D``."""
    d = ket.discount if discount is None else float(discount)
    if not ket.entangled_diagonal:
        raise ValidationError("rational beliefs need a diagonal joint ket", "ket")
    amps = ket.diagonal if ket.diagonal is not None else np.diag(ket.matrix)
    p = np.abs(amps) ** 2
    if ket.normalization is Normalization.RAW:
        if abs(p.sum() - d) > tol:
            raise NormMismatch(f"sum |psi|^2 = {p.sum()!r} differs from D = {d!r}")
        return p / d
    if abs(p.sum() - 1) > tol:
        raise NormMismatch(f"sum |q|^2 = {p.sum()!r} differs from 1")
    return p


def quantum_prices(ket: JointKet) -> np.ndarray:
    """Raw Arrow-Debreu prices ``|psi(f_omega, omega)|^2``, summing to ``D``."""
    return ket.discount * rational_beliefs(ket)
