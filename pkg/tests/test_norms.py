from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import e
from tslab.core import SparseVector
from tslab.norms import (CapExceeded, FiniteFamily, SupportTooLarge, brute_force_norm,
                         iterated_norm, norm, norm_admissible, norm_allowable,
                         norm_finite_family, prop5_report)
from tslab.report import NOT_APPLICABLE
from tslab.schreier import Mode
from tslab.theta import ThetaSpec
from tslab.trees import evaluate_tree

HALF = Fraction(1, 2)
GEO = ThetaSpec.geometric(HALF)
PHI = ThetaSpec.phi_harmonic(HALF)
MODES = [Mode.ADMISSIBLE, Mode.ALLOWABLE]


def test_admissible_singleton_split():
    r = norm_admissible(e(3, 4, 5), GEO)
    assert r.value == Fraction(3, 2) and r.exact
    assert r.witness.level == 1 and [c.set for c in r.witness.children] == [(3,), (4,), (5,)]


def test_four_point_vector_is_three_halves():
    # {3},{4},{5} at level 1 gives 3/2; no tree using the point 2 does better
    x = e(2, 3, 4, 5)
    assert norm_admissible(x, GEO).value == Fraction(3, 2)
    assert norm_allowable(x, GEO).value == Fraction(3, 2)
    assert brute_force_norm(x, "allowable", GEO) == Fraction(3, 2)


@pytest.mark.parametrize("k", [1, 2, 7, 40])
def test_unit_vectors_have_norm_one(k):
    for mode in MODES:
        r = norm(e(k), GEO, mode)
        assert r.value == 1 and r.exact
    assert brute_force_norm(e(k), "admissible", GEO) == 1


def test_allowable_example_is_exact():
    r = norm_allowable(e(3, 4, 5), GEO)
    assert r.value == Fraction(3, 2) and r.exact


def test_iterated_examples():
    x = SparseVector({2: 3, 5: -1})
    assert iterated_norm(x, 0, "admissible", GEO) == 3
    assert iterated_norm(e(3, 4, 5), 1, "admissible", GEO) == Fraction(3, 2)
    for m in range(4):
        assert iterated_norm(e(7), m, "allowable", GEO) == 1
    with pytest.raises(ValueError):
        iterated_norm(x, -1, "admissible", GEO)


def test_finite_family_examples():
    assert norm_finite_family(e(3, 4, 5), FiniteFamily(((1, HALF),)), "admissible").value == Fraction(3, 2)
    fam2 = FiniteFamily(((2, Fraction(1, 4)),))
    assert norm_finite_family(e(2, 3, 4, 5), fam2, "admissible").value == 1
    assert norm_finite_family(e(9), FiniteFamily(((1, HALF),)), "allowable").value == 1
    with pytest.raises(ValueError):
        FiniteFamily(((1, HALF), (1, Fraction(1, 3))))


def test_oracle_examples():
    assert brute_force_norm(e(3, 4, 5), "admissible", GEO, 3) == Fraction(3, 2)
    assert brute_force_norm(SparseVector(), "admissible", GEO) == 0
    with pytest.raises(SupportTooLarge):
        brute_force_norm(SparseVector.indicator(range(2, 11)), "admissible", GEO)


def test_prop5_examples():
    assert prop5_report(GEO, 1, [e(2, 3, 4, 5), e(6)]).ok
    rep = prop5_report(ThetaSpec.constant_phi(HALF, HALF), 1, [e(2, 3)])
    assert rep.cases[0].id == "precondition" and rep.cases[0].status == NOT_APPLICABLE


def test_beyond_exact_cap_reports_bounds():
    x = SparseVector({k: (k % 5) + 1 for k in range(3, 23)})
    r = norm_allowable(x, GEO, exact_cap=6)
    assert r.lower <= r.upper and r.value == r.lower
    with pytest.raises(CapExceeded):
        iterated_norm(x, 1, "allowable", GEO, exact_cap=6)


def test_frozen_mixed_vector():
    # value from the brute-force oracle
    z = SparseVector({2: 1, 3: 5, 5: 1, 6: 1, 8: 2})
    assert norm_admissible(z, GEO).value == 5
    assert brute_force_norm(z, "allowable", GEO) == 5


small = st.dictionaries(st.integers(1, 9), st.fractions(-3, 3, max_denominator=4),
                        max_size=5).map(SparseVector)
medium = st.dictionaries(st.integers(1, 24), st.fractions(-3, 3, max_denominator=4),
                         max_size=10).map(SparseVector)
specs = st.sampled_from([GEO, PHI, ThetaSpec.constant_phi(HALF, Fraction(3, 4))])


@settings(max_examples=80, deadline=None)
@given(small, st.sampled_from([GEO, PHI]), st.sampled_from(MODES))
def test_engines_match_oracle(x, spec, mode):
    assert norm(x, spec, mode).value == brute_force_norm(x, mode, spec)


@settings(max_examples=80, deadline=None)
@given(medium, specs)
def test_norm_chain(x, spec):
    adm = norm_admissible(x, spec).value
    alw = norm_allowable(x, spec).value
    assert x.c0() <= adm <= alw <= x.ell1()


@settings(max_examples=60, deadline=None)
@given(medium, specs, st.sampled_from(MODES))
def test_depends_only_on_absolute_values(x, spec, mode):
    assert norm(x, spec, mode).value == norm(x.abs(), spec, mode).value


@settings(max_examples=60, deadline=None)
@given(medium, st.frozensets(st.integers(1, 24)), specs, st.sampled_from(MODES))
def test_restriction_never_increases_norm(x, E, spec, mode):
    assert norm(x.restrict(E), spec, mode).value <= norm(x, spec, mode).value


@settings(max_examples=60, deadline=None)
@given(medium, specs, st.sampled_from(MODES))
def test_witness_evaluates_to_value(x, spec, mode):
    r = norm(x, spec, mode)
    if x:
        assert evaluate_tree(r.witness, x, spec, mode) == r.lower


@settings(max_examples=40, deadline=None)
@given(small, specs, st.sampled_from(MODES))
def test_iterates_increase_to_norm(x, spec, mode):
    values = [iterated_norm(x, m, mode, spec) for m in range(len(x) + 2)]
    assert values == sorted(values)
    assert values[-1] == norm(x, spec, mode).value


@settings(max_examples=40, deadline=None)
@given(small, st.lists(st.tuples(st.integers(1, 4), st.fractions(Fraction(1, 9), Fraction(8, 9))),
                       min_size=1, max_size=3, unique_by=lambda t: t[0]),
       st.sampled_from(MODES))
def test_finite_family_matches_oracle(x, pairs, mode):
    fam = FiniteFamily(tuple(pairs))
    assert norm_finite_family(x, fam, mode).value == brute_force_norm(x, mode, fam)
