"""Quantum Nash equilibria of finite games and the exchange economies they price."""

__version__ = "0.1.0"

from .economy import (  # noqa: E402
    Agent,
    Allocation,
    EconomySpec,
    UtilitySpec,
    check_mrs_equality,
    check_quantum_price_conditions,
    consistent_aggregates,
    expected_utility,
    solve_pareto,
)
from .equilibrium import (  # noqa: E402
    EquilibriumResult,
    MixedProfile,
    SolverConfig,
    nash_map_step,
    profile_payoff,
    profile_to_ket,
    sequential_best_response_ket,
    solve_iterative,
    solve_support_enum,
    verify_equilibrium,
)
from .game import (  # noqa: E402
    GamePath,
    GameSpec,
    Normalization,
    PayoffOperator,
    PriceKet,
    enumerate_paths,
    normalize_to_future_value,
    present_value,
    pricing_functional,
    pricing_matrices,
    sample_path,
)
from .lottery import (  # noqa: E402
    DensityOperator,
    JointKet,
    apply_lottery_operator,
    entangle,
    rational_beliefs,
    trace_out_game,
    trace_out_lottery,
)
from .securities import (  # noqa: E402
    MarketPrices,
    SecuritySet,
    check_pareto_condition,
    market_completeness,
    price_security,
    securitize,
    solve_portfolio,
)
