"""Shared fixtures: the two reference square factors, the combining
coefficients the solver must reproduce for them, and the factor chains
used across the suite."""

import numpy as np
import pytest

from kronnoma import FactorChain, PatternMatrix, find_combiners

# optimal 3x3 square factor (canonical column order: values 3, 5, 6)
P3_ROWS = [[1, 1, 0], [1, 0, 1], [0, 1, 1]]

# an optimal 4x4 square factor kept in non-canonical column order (so
# canonicalization is exercised), with its expected combining matrix
P4_ROWS = [[0, 0, 0, 1], [0, 1, 1, 0], [1, 0, 1, 0], [1, 1, 0, 0]]
ALPHA4_ROWS = [[0, -1, 1, 1], [0, 1, -1, 1], [0, 1, 1, -1], [1, 0, 0, 0]]

# combining matrix solving P3 (rows isolate one class each, weight 2)
ALPHA3_ROWS = [[1, 1, -1], [1, -1, 1], [-1, 1, 1]]


@pytest.fixture(scope="session")
def P3() -> PatternMatrix:
    return PatternMatrix(np.array(P3_ROWS))


@pytest.fixture(scope="session")
def P4() -> PatternMatrix:
    return PatternMatrix(np.array(P4_ROWS))


@pytest.fixture(scope="session")
def F12() -> PatternMatrix:
    return PatternMatrix(np.array([[1, 1]]))


@pytest.fixture(scope="session")
def design3(P3):
    return find_combiners(P3)


@pytest.fixture(scope="session")
def design4(P4):
    return find_combiners(P4)


@pytest.fixture(scope="session")
def chain_9x18(F12, P3) -> FactorChain:
    """Reference overloaded chain: G = [1 1] (x) P3 (x) P3, 9 REs, 18 users."""
    return FactorChain(F12, P3, 2)


@pytest.fixture(scope="session")
def chain_3x6(F12, P3) -> FactorChain:
    """One-recursion variant: G is 3x6, small enough for exhaustive checks."""
    return FactorChain(F12, P3, 1)
