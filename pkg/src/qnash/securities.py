"""Securities whose payoffs depend on the lottery outcome, priced at the
game's equilibrium, and single-agent portfolio choice."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .economy import BELIEF_TOL, UtilitySpec
from .errors import (
    ArbitrageError,
    DimensionMismatch,
    InfeasibleBudget,
    NoInteriorOptimum,
    PreconditionViolation,
    ValidationError,
)
from .game import GameSpec
from .lottery import DensityOperator, JointKet, rational_beliefs

PRICE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SecuritySet:
    """``payoffs[j, w]`` pays security ``j`` in lottery state ``w``.

    ``positions[j]`` is ``(player, theta)`` for a securitized game position,
    otherwise ``None``.
    """

    payoffs: np.ndarray
    names: tuple[str, ...] = ()
    positions: tuple[tuple[int, float] | None, ...] = ()

    def __post_init__(self):
        x = np.array(self.payoffs, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[0] == 0:
            raise ValidationError("payoffs must be an m x N matrix", "payoffs")
        if not np.all(np.isfinite(x)):
            raise ValidationError("payoffs must be finite", "payoffs")
        x.setflags(write=False)
        m = x.shape[0]
        names = tuple(self.names) or tuple(f"S{j + 1}" for j in range(m))
        positions = tuple(self.positions) or (None,) * m
        if len(names) != m or len(positions) != m:
            raise ValidationError("one name and position tag per security", "names")
        object.__setattr__(self, "payoffs", x)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "positions", positions)

    @property
    def m(self) -> int:
        return self.payoffs.shape[0]

    @property
    def n_states(self) -> int:
        return self.payoffs.shape[1]


@dataclass(frozen=True, eq=False)
class MarketPrices:
    prices: np.ndarray

    def __post_init__(self):
        p = np.array(self.prices, dtype=float).ravel()
        p.setflags(write=False)
        object.__setattr__(self, "prices", p)


def securitize(spec: GameSpec, theta: float = 1.0) -> SecuritySet:
    """One security per player paying ``theta`` times the player's payoff on
    the path matched to each lottery state."""
    if not theta > 0:
        raise ValidationError("theta must be positive", "theta")
    return SecuritySet(
        theta * spec.payoffs,
        tuple(f"x_{name}" for name in spec.names),
        tuple((i, float(theta)) for i in range(spec.n_players)),
    )


def security_expected_payoff(rho: DensityOperator, payoff) -> float:
    x = np.asarray(payoff, dtype=float).ravel()
    if x.size != rho.matrix.shape[0]:
        raise DimensionMismatch(f"payoff has {x.size} states, density operator {rho.matrix.shape[0]}")
    return float(np.dot(x, rho.diagonal()))


def price_security(payoff, ket: JointKet, discount: float | None = None) -> float:
    """Present value ``D * sum_w x(w) |psi_w|^2 / D`` at the equilibrium ket."""
    d = ket.discount if discount is None else float(discount)
    x = np.asarray(payoff, dtype=float).ravel()
    bel = rational_beliefs(ket, d)
    if x.size != bel.size:
        raise DimensionMismatch(f"payoff has {x.size} states, ket has {bel.size}")
    return float(d * np.dot(x, bel))


def price_securities(securities: SecuritySet, ket: JointKet, discount: float | None = None) -> MarketPrices:
    return MarketPrices([price_security(x, ket, discount) for x in securities.payoffs])


@dataclass(frozen=True)
class Completeness:
    rank: int
    n_states: int

    @property
    def complete(self) -> bool:
        return self.rank == self.n_states


def market_completeness(securities: SecuritySet, n_states: int | None = None) -> Completeness:
    x = securities.payoffs
    n = x.shape[1] if n_states is None else int(n_states)
    s = np.linalg.svd(x, compute_uv=False)
    rank = int(np.sum(s > 1e-10 * s[0])) if s.size and s[0] > 0 else 0
    return Completeness(rank, n)


@dataclass(frozen=True, eq=False)
class Portfolio:
    holdings: np.ndarray
    c0: float
    consumption: np.ndarray
    endowment_c0: float
    endowment_shares: np.ndarray
    utility: UtilitySpec
    securities: SecuritySet
    prices: MarketPrices
    beliefs: np.ndarray
    foc_residuals: np.ndarray
    budget_residual: float
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def wealth(self) -> float:
        return float(self.endowment_c0 + self.endowment_shares @ self.prices.prices)


def _objective(utility, beliefs, live, x, wealth, prices, s):
    c0 = wealth - s @ prices
    c = s @ x
    if c0 <= 0 or np.any(c[live] <= 0):
        return -np.inf
    return float(utility.v(c0) + utility.beta * np.dot(beliefs[live], utility.v(c[live])))


def portfolio_objective(portfolio: Portfolio, holdings) -> float:
    """Expected utility of ``holdings`` with date-0 consumption from the budget."""
    live = portfolio.beliefs > 0
    return _objective(
        portfolio.utility, portfolio.beliefs, live, portfolio.securities.payoffs,
        portfolio.wealth, portfolio.prices.prices, np.asarray(holdings, dtype=float),
    )


def _interior_start(x, prices, wealth, live):
    """Holdings with positive date-0 and (believed) state consumption, or None.

    Maximises ``t`` subject to ``c_w >= t`` on believed states and
    ``c0 >= t``.
    """
    m = x.shape[0]
    xl = x[:, live]
    # variables (s, t); maximise t
    a_ub = np.vstack([
        np.hstack([-xl.T, np.ones((xl.shape[1], 1))]),
        np.hstack([prices[None, :], np.ones((1, 1))]),
    ])
    b_ub = np.concatenate([np.zeros(xl.shape[1]), [wealth]])
    bounds = [(None, None)] * m + [(None, wealth)]
    res = linprog(np.r_[np.zeros(m), -1.0], A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0 or res.x[-1] <= 0:
        return None
    return res.x[:m]


def _foc(utility, beliefs, live, x, prices, c0, c):
    mu0 = beliefs.sum() * utility.du_dc0(c0)
    cl = c[live]
    mu = np.zeros(c.size)
    mu[live] = beliefs[live] * utility.du_dc(c0, cl)
    return x @ mu / mu0 - prices


def solve_portfolio(
    utility: UtilitySpec,
    securities: SecuritySet,
    prices: MarketPrices,
    beliefs,
    endowment_c0: float,
    endowment_shares=None,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> Portfolio:
    """Maximise expected utility over holdings subject to the date-0 budget.

    Date-0 consumption is eliminated through the budget, leaving a concave
    problem in the holdings solved by damped Newton with backtracking that
    keeps every believed state's consumption positive.
    """
    x = securities.payoffs
    m, n = x.shape
    p = prices.prices
    bel = np.asarray(beliefs, dtype=float).ravel()
    w = np.zeros(m) if endowment_shares is None else np.asarray(endowment_shares, dtype=float).ravel()
    if p.size != m or w.size != m:
        raise DimensionMismatch(f"{m} securities but {p.size} prices / {w.size} endowments")
    if bel.size != n:
        raise DimensionMismatch(f"{n} states but {bel.size} beliefs")
    if np.any(bel < -BELIEF_TOL) or abs(bel.sum() - 1) > BELIEF_TOL:
        raise ValidationError("beliefs must lie on the simplex", "beliefs")
    bel = np.clip(bel, 0, None)
    for j in range(m):
        if np.all(x[j] == 0) and abs(p[j]) > PRICE_TOL:
            raise ArbitrageError(f"security {securities.names[j]} pays nothing but costs {p[j]}")
    wealth = float(endowment_c0 + w @ p)
    if not wealth > 0:
        raise InfeasibleBudget(f"endowment value {wealth} is not positive")
    live = bel > 0
    s = _interior_start(x, p, wealth, live)
    if s is None:
        raise InfeasibleBudget("no portfolio gives positive consumption in every believed state")

    def f(s):
        return _objective(utility, bel, live, x, wealth, p, s)

    its = 0
    fval = f(s)
    for its in range(1, max_iter + 1):
        c0 = wealth - s @ p
        c = s @ x
        mu_c = np.zeros(n)
        mu_c[live] = bel[live] * utility.beta * utility.dv(c[live])
        grad = -p * utility.dv(c0) + x @ mu_c
        h_c = np.zeros(n)
        h_c[live] = bel[live] * utility.beta * utility.d2v(c[live])
        hess = np.outer(p, p) * utility.d2v(c0) + (x * h_c) @ x.T
        step = np.linalg.lstsq(hess, -grad, rcond=None)[0]
        if np.max(np.abs(_foc(utility, bel, live, x, p, c0, c))) <= tol:
            break
        t, improved = 1.0, False
        while t > 1e-12:
            cand = s + t * step
            fc = f(cand)
            if fc >= fval - 1e-15 * abs(fval) and np.isfinite(fc):
                s, fval, improved = cand, fc, True
                break
            t *= 0.5
        if not improved:
            break
    c0 = float(wealth - s @ p)
    c = s @ x
    foc = _foc(utility, bel, live, x, p, c0, c)
    budget = float(c0 + s @ p - (endowment_c0 + w @ p))
    if np.max(np.abs(foc)) > 1e-8 or not math.isfinite(c0):
        raise NoInteriorOptimum(
            f"portfolio FOC residual {np.max(np.abs(foc)):.3e} after {its} iterations",
            {"holdings": s.tolist(), "foc": foc.tolist(), "iterations": its},
        )
    return Portfolio(s, c0, c, float(endowment_c0), w, utility, securities, prices, bel, foc, budget, its)


@dataclass(frozen=True, eq=False)
class ParetoReport:
    ok: bool
    state_residuals: np.ndarray  # bracket-zero branch, per state; NaN on zero-price states
    weighted_residuals: np.ndarray  # weighted sum per security
    weighted_ok: bool
    excluded_states: tuple[int, ...]
    max_residual: float


def check_pareto_condition(
    utility: UtilitySpec, portfolio: Portfolio, prices: MarketPrices, ket: JointKet,
    discount: float | None = None, tol: float = 1e-6,
) -> ParetoReport:
    """Per-state intertemporal condition ``u'_w = D * sum_w (phi_w / D) * u'_0``.

    Also reports the weaker per-security condition
    ``sum_w phi_w x_j(w) (u'_w / (D sum_w phi_w u'_0 / D) - 1/D) = 0``, which
    is all the portfolio first-order conditions imply when the market is
    incomplete.
    """
    d = ket.discount if discount is None else float(discount)
    bel = rational_beliefs(ket, d)
    phi = d * bel
    if portfolio.beliefs.size != bel.size or np.max(np.abs(portfolio.beliefs - bel)) > BELIEF_TOL:
        raise PreconditionViolation("portfolio beliefs are not the rational beliefs")
    pv = price_securities(portfolio.securities, ket, d).prices
    if np.max(np.abs(prices.prices - pv)) > 1e-9:
        raise PreconditionViolation("prices are not the equilibrium present values")
    live = phi > 0
    mu0 = utility.du_dc0(portfolio.c0)
    c = portfolio.consumption
    state = np.full(c.size, np.nan)
    state[live] = utility.du_dc(portfolio.c0, c[live]) - d * np.sum(phi / d) * mu0
    x = portfolio.securities.payoffs
    ratio = np.zeros(c.size)
    ratio[live] = utility.du_dc(portfolio.c0, c[live]) / (d * np.sum(phi) * mu0) - 1.0 / d
    weighted = x @ (phi * ratio)
    worst = float(np.nanmax(np.abs(state), initial=0.0))
    excluded = tuple(int(w) for w in np.flatnonzero(~live))
    return ParetoReport(
        worst <= tol, state, weighted, bool(np.max(np.abs(weighted)) <= tol), excluded, worst
    )
