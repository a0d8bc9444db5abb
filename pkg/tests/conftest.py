"""Session-wide fixtures for the heavy solves shared across test modules."""

import pytest

from renewal_asym.corpus import builtin
from renewal_asym.volterra_engine import QuadratureGrid, solve_volterra


@pytest.fixture(scope="session")
def cts_beta_problem():
    return builtin("cts-beta").problem


@pytest.fixture(scope="session")
def cts_beta_trace(cts_beta_problem):
    """The exponent -1/2 family on its reference grid (h = 0.02, T = 500)."""
    return solve_volterra(cts_beta_problem, QuadratureGrid(0.02, 500.0))


@pytest.fixture(scope="session")
def poisson_problem():
    return builtin("poisson").problem


@pytest.fixture(scope="session")
def poisson_long_trace(poisson_problem):
    """Long, fine poisson trace for transform ladders (h = 0.01, T = 400)."""
    return solve_volterra(poisson_problem, QuadratureGrid(0.01, 400.0))
