import sys
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from tslab.core import SparseVector
from tslab.theta import ThetaSpec

HALF = Fraction(1, 2)

# the norm engines recurse over the support; raise the limit once up front
sys.setrecursionlimit(max(sys.getrecursionlimit(), 10000))


@pytest.fixture
def geo():
    return ThetaSpec.geometric(HALF)


@pytest.fixture
def phi():
    return ThetaSpec.phi_harmonic(HALF)


def e(*indices):
    return SparseVector.indicator(indices)


rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6)

vectors = st.dictionaries(
    st.integers(min_value=1, max_value=20), rationals, min_size=0, max_size=8
).map(SparseVector)

small_sets = st.frozensets(st.integers(min_value=1, max_value=14), max_size=7).map(sorted)
