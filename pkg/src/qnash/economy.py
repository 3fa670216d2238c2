"""Two-period pure exchange economy over lottery-state contingent consumption.

Agents have time-separable CRRA utility ``u(c0, c_w) = v(c0) + beta * v(c_w)``
and beliefs over the ``N`` lottery outcomes. The weighted-welfare (Pareto)
program separates into one scalar market-clearing equation per date/state,
each solved for its multiplier by Newton's method in ``log(phi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BeliefMismatch, DomainError, NoInteriorSolution, ValidationError
from .lottery import JointKet, rational_beliefs

BELIEF_TOL = 1e-9
POSITIVITY_FLOOR = 1e-12


@dataclass(frozen=True)
class UtilitySpec:
    """CRRA with curvature ``gamma`` (1 = log) and time weight ``beta``."""

    gamma: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValidationError("gamma must be positive", "gamma")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValidationError("beta must be positive", "beta")

    @property
    def is_log(self) -> bool:
        return self.gamma == 1.0

    def _check(self, c):
        c = np.asarray(c, dtype=float)
        if self.gamma >= 1 and np.any(c <= 0):
            raise DomainError(f"consumption must be positive for gamma={self.gamma}")
        if np.any(c < 0):
            raise DomainError("consumption must be non-negative")
        return c

    def v(self, c):
        c = self._check(c)
        if self.is_log:
            return np.log(c)
        return (c ** (1 - self.gamma) - 1) / (1 - self.gamma)

    def dv(self, c):
        return self._check(c) ** (-self.gamma)

    def d2v(self, c):
        c = self._check(c)
        return -self.gamma * c ** (-self.gamma - 1)

    def inverse_dv(self, y):
        """Consumption whose marginal utility is ``y``."""
        return np.asarray(y, dtype=float) ** (-1.0 / self.gamma)

    def u(self, c0, c):
        return self.v(c0) + self.beta * self.v(c)

    def du_dc0(self, c0, c=None):
        return self.dv(c0)

    def du_dc(self, c0, c):
        return self.beta * self.dv(c)


@dataclass(frozen=True, eq=False)
class Agent:
    utility: UtilitySpec
    weight: float
    beliefs: np.ndarray

    def __post_init__(self):
        b = np.array(self.beliefs, dtype=float).ravel()
        if not self.weight > 0:
            raise ValidationError("Pareto weight must be positive", "lambda")
        if np.any(b < -BELIEF_TOL) or abs(b.sum() - 1) > BELIEF_TOL:
            raise ValidationError("beliefs must lie on the simplex", "beliefs")
        b = np.clip(b, 0, None)
        b.setflags(write=False)
        object.__setattr__(self, "beliefs", b)
        object.__setattr__(self, "weight", float(self.weight))


@dataclass(frozen=True, eq=False)
class EconomySpec:
    agents: tuple[Agent, ...]
    aggregate_c0: float
    aggregate_c: np.ndarray

    def __post_init__(self):
        agg = np.array(self.aggregate_c, dtype=float).ravel()
        if not self.agents:
            raise ValidationError("at least one agent required", "agents")
        if not self.aggregate_c0 > 0:
            raise ValidationError("aggregate must be positive", "aggregate_c0")
        if np.any(agg <= 0) or not np.all(np.isfinite(agg)):
            raise ValidationError("aggregates must be positive", "aggregate_c")
        for i, a in enumerate(self.agents):
            if a.beliefs.size != agg.size:
                raise ValidationError(
                    f"expected {agg.size} beliefs, got {a.beliefs.size}", f"agents[{i}].beliefs"
                )
        agg.setflags(write=False)
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "aggregate_c", agg)
        object.__setattr__(self, "aggregate_c0", float(self.aggregate_c0))

    @property
    def n_states(self) -> int:
        return self.aggregate_c.size

    def with_beliefs(self, beliefs) -> EconomySpec:
        agents = tuple(Agent(a.utility, a.weight, beliefs) for a in self.agents)
        return EconomySpec(agents, self.aggregate_c0, self.aggregate_c)


@dataclass(frozen=True, eq=False)
class Allocation:
    """Consumption plan and (unnormalised) Lagrange multipliers."""

    c0: np.ndarray
    c: np.ndarray
    phi0: float
    phi: np.ndarray
    residuals: dict = field(default_factory=dict)
    iterations: int = 0

    @property
    def state_prices(self) -> np.ndarray:
        """Multipliers in the ``phi0 = 1`` normalisation."""
        return self.phi / self.phi0


def expected_utility(utility: UtilitySpec, beliefs, c0, c, method="sum") -> float:
    """``sum_w bel(w) u(c0, c_w)``; ``method="trace"`` evaluates
    ``Tr(rho_bel u_hat)`` with both operators as diagonal matrices."""
    beliefs = np.asarray(beliefs, dtype=float)
    c = np.asarray(c, dtype=float)
    if method == "trace":
        rho = np.diag(beliefs)
        u_hat = np.diag(utility.u(c0, c))
        return float(np.trace(rho @ u_hat))
    if method != "sum":
        raise ValueError(f"unknown method {method!r}")
    total = 0.0
    for b, cw in zip(beliefs, c):
        total += b * float(utility.u(c0, cw))
    return total


def welfare(economy: EconomySpec, c0, c) -> float:
    return sum(
        a.weight * expected_utility(a.utility, a.beliefs, c0[i], c[i], "trace")
        for i, a in enumerate(economy.agents)
    )


def _clear_market(coefs, gammas, total, max_iter=100, tol=1e-14):
    """Solve ``sum_i (a_i / phi)^(1/g_i) = total`` for ``phi > 0``.

    Damped Newton in ``x = log(phi)``; the left side is convex and
    decreasing in ``x``, so starting left of the root the iterates rise
    monotonically.
    """
    live = coefs > 0
    a, g = coefs[live], gammas[live]
    x = float(np.min(np.log(a) - g * math.log(total)))
    its = 0
    for its in range(1, max_iter + 1):
        terms = np.exp((np.log(a) - x) / g)
        f = terms.sum() - total
        if abs(f) <= tol * total:
            break
        fp = -(terms / g).sum()
        step = -f / fp
        x += float(np.clip(step, -50.0, 50.0))
    phi = math.exp(x)
    c = np.zeros(coefs.size)
    c[live] = np.exp((np.log(a) - x) / g)
    # absorb last-ulp rounding so feasibility is exact to machine precision
    c *= total / c.sum()
    return phi, c, its


def solve_pareto(economy: EconomySpec, tol: float = 1e-8, max_iter: int = 100) -> Allocation:
    agents = economy.agents
    n_agents, n_states = len(agents), economy.n_states
    lam = np.array([a.weight for a in agents])
    gam = np.array([a.utility.gamma for a in agents])
    beta = np.array([a.utility.beta for a in agents])
    bel = np.array([a.beliefs for a in agents])

    phi0, c0, total_its = _clear_market(lam * bel.sum(axis=1), gam, economy.aggregate_c0, max_iter)
    c = np.zeros((n_agents, n_states))
    phi = np.zeros(n_states)
    for w in range(n_states):
        coefs = lam * bel[:, w] * beta
        if not np.any(coefs > 0):
            # nobody values this state: split by feasibility, price zero
            c[:, w] = economy.aggregate_c[w] / n_agents
            continue
        phi[w], c[:, w], its = _clear_market(coefs, gam, economy.aggregate_c[w], max_iter)
        total_its += its
    alloc = Allocation(c0, c, phi0, phi, iterations=total_its)
    res = foc_residuals(economy, alloc)
    alloc.residuals.update(res)
    worst = max(res.values())
    if not math.isfinite(worst) or worst > tol or np.any(c0 < POSITIVITY_FLOOR):
        raise NoInteriorSolution(f"FOC residual {worst:.3e} exceeds {tol:.1e}", worst)
    return alloc


def foc_residuals(economy: EconomySpec, alloc: Allocation) -> dict:
    """Max absolute residuals of the first-order and feasibility conditions."""
    r41 = r42 = 0.0
    for i, a in enumerate(economy.agents):
        u = a.utility
        r41 = max(r41, abs(a.weight * a.beliefs.sum() * u.du_dc0(alloc.c0[i]) - alloc.phi0))
        live = a.beliefs > 0
        if np.any(live):
            lhs = a.weight * a.beliefs[live] * u.du_dc(alloc.c0[i], alloc.c[i, live])
            r42 = max(r42, float(np.max(np.abs(lhs - alloc.phi[live]))))
    r43 = float(np.max(np.abs(alloc.c.sum(axis=0) - economy.aggregate_c)))
    r44 = abs(float(alloc.c0.sum()) - economy.aggregate_c0)
    return {"time0_foc": float(r41), "state_foc": r42, "state_feasibility": r43, "time0_feasibility": r44}


def marginal_rates(economy: EconomySpec, alloc: Allocation) -> np.ndarray:
    """``(I, N)`` array of belief-weighted MRS between state and date-0 consumption."""
    out = np.zeros((len(economy.agents), economy.n_states))
    for i, a in enumerate(economy.agents):
        u = a.utility
        c = np.maximum(alloc.c[i], POSITIVITY_FLOOR)
        denom = a.beliefs.sum() * u.du_dc0(alloc.c0[i])
        out[i] = a.beliefs * u.du_dc(alloc.c0[i], c) / denom
    return out


@dataclass(frozen=True, eq=False)
class MRSReport:
    ok: bool
    mrs: np.ndarray
    spread: np.ndarray
    price_deviation: np.ndarray
    max_deviation: float


def check_mrs_equality(economy: EconomySpec, alloc: Allocation, tol: float = 1e-8) -> MRSReport:
    mrs = marginal_rates(economy, alloc)
    spread = mrs.max(axis=0) - mrs.min(axis=0)
    dev = np.max(np.abs(mrs - alloc.state_prices), axis=0)
    worst = float(max(spread.max(), dev.max()))
    return MRSReport(worst <= tol, mrs, spread, dev, worst)


@dataclass(frozen=True, eq=False)
class QuantumPriceReport:
    ok: bool
    quantum_prices: np.ndarray
    mrs_residual: np.ndarray  # (I, N); NaN on excluded states
    marginal_residual: np.ndarray  # (I, N); NaN on excluded states
    multiplier_residual: np.ndarray  # (N,)
    excluded_states: tuple[int, ...]
    max_residual: float


def check_quantum_price_conditions(
    economy: EconomySpec, alloc: Allocation, ket: JointKet, discount: float | None = None, tol: float = 1e-8
) -> QuantumPriceReport:
    """Verify that the multipliers and marginal utilities reproduce the
    game's Arrow-Debreu prices under rational beliefs.

    States priced at zero are excluded and listed in ``excluded_states``.
    """
    d = ket.discount if discount is None else float(discount)
    bel = rational_beliefs(ket, d)
    for i, a in enumerate(economy.agents):
        if a.beliefs.size != bel.size or np.max(np.abs(a.beliefs - bel)) > BELIEF_TOL:
            raise BeliefMismatch(f"agent {i} beliefs differ from the rational beliefs")
    prices = d * bel
    live = prices > 0
    excluded = tuple(int(w) for w in np.flatnonzero(~live))
    mrs = marginal_rates(economy, alloc)
    mrs_res = np.full(mrs.shape, np.nan)
    mu_res = np.full(mrs.shape, np.nan)
    for i, a in enumerate(economy.agents):
        u = a.utility
        mrs_res[i, live] = mrs[i, live] - prices[live]
        rhs = d * np.sum(prices / d) * u.du_dc0(alloc.c0[i])
        mu_res[i, live] = u.du_dc(alloc.c0[i], alloc.c[i, live]) - rhs
    mult_res = np.where(live, alloc.state_prices - prices, np.nan)
    worst = float(
        max(np.nanmax(np.abs(mrs_res), initial=0.0), np.nanmax(np.abs(mu_res), initial=0.0),
            np.nanmax(np.abs(mult_res), initial=0.0))
    )
    return QuantumPriceReport(worst <= tol, prices, mrs_res, mu_res, mult_res, excluded, worst)


def consistent_aggregates(agents, aggregate_c0: float, discount: float, n_states: int) -> np.ndarray:
    """State aggregates under which the economy's normalised multipliers equal
    ``D * bel`` (the game prices) for rational-belief agents.

    Each agent then consumes ``c0 * (beta / D)^(1/gamma)`` in every state, so
    the aggregate is the same across states.
    """
    lam = np.array([a.weight for a in agents])
    gam = np.array([a.utility.gamma for a in agents])
    beta = np.array([a.utility.beta for a in agents])
    _, c0, _ = _clear_market(lam, gam, float(aggregate_c0))
    level = float(np.sum(c0 * (beta / discount) ** (1.0 / gam)))
    return np.full(n_states, level)
