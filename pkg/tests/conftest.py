import numpy as np
import pytest

from qnash.equilibrium import MixedProfile, profile_to_ket
from qnash.game import GameSpec

# canonical order with B outermost: B0A0, B0A1, B1A0, B1A1
PI_A = [2.0, 1.5, 1.5, 2.0]
PI_B = [1.4, 2.5, 2.5, 2.0]
EQ_A = (5 / 16, 11 / 16)
EQ_B = (1 / 2, 1 / 2)
EQ_PRICES = np.array([5, 11, 5, 11]) / 32


def two_company(discount=1.0):
    return GameSpec((2, 2), [PI_A, PI_B], discount, ("A", "B"), (("0", "1"), ("0", "1")))


def random_game(rng, dims, discount=1.0):
    n_paths = int(np.prod(dims))
    return GameSpec(tuple(dims), rng.normal(size=(len(dims), n_paths)), discount)


def random_profile(rng, dims):
    return MixedProfile(tuple(rng.dirichlet(np.ones(d)) for d in dims))


@pytest.fixture
def game():
    return two_company()


@pytest.fixture
def eq_profile():
    return MixedProfile((EQ_A, EQ_B))


@pytest.fixture
def eq_ket(eq_profile):
    return profile_to_ket(eq_profile)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    RESULTS = getattr(module, "RESULTS", None)
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
