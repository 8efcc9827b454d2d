from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import e, small_sets
from tslab.core import EmptyMember, LengthMismatch, SparseVector
from tslab.schreier import (Mode, check_sequence, is_schreier_seminorm_bruteforce,
                            run_automaton, schreier_level, schreier_member,
                            schreier_member_exhaustive, schreier_seminorm, spreading_shift)


def test_membership_examples():
    assert not schreier_member({2, 3, 4}, 1)
    assert schreier_member({2, 3, 4, 5}, 2)
    assert schreier_member({3, 4, 5}, 1)
    assert schreier_member([], 3)
    assert schreier_member([1], 1)
    assert not schreier_member([1, 2], 5)
    assert schreier_member([9], 0) and not schreier_member([8, 9], 0)


def test_negative_level_rejected():
    with pytest.raises(ValueError):
        schreier_member([2], -1)


def test_schreier_level():
    assert schreier_level({2, 3, 4}) == 2
    assert schreier_level({5}) == 0
    assert schreier_level({1, 2}) is None


def test_check_sequence_examples():
    assert not check_sequence([{2, 4}, {3, 5}], 1, "admissible")
    assert check_sequence([{2, 4}, {3, 5}], 1, "allowable")
    assert not check_sequence([{1}, {2}], 1, Mode.ALLOWABLE)
    assert check_sequence([{2}, {3, 7}], 1, Mode.ADMISSIBLE)
    with pytest.raises(EmptyMember):
        check_sequence([set(), {2}], 1, "admissible")
    with pytest.raises(ValueError):
        check_sequence([{2}], 1, "sideways")


def test_seminorm_example():
    value, witness = schreier_seminorm(e(1, 2, 3), 1)
    assert value == 2 and witness == (2, 3)


def test_spreading_shift_examples():
    assert spreading_shift((2, 3), (2, 5))
    assert not spreading_shift((2, 3), (1, 9))
    with pytest.raises(LengthMismatch):
        spreading_shift((2, 3), (4,))


def test_automaton_agrees_with_exhaustive_on_all_small_sets():
    for size in range(0, 7):
        for f in combinations(range(1, 11), size):
            for n in range(0, 4):
                assert schreier_member(f, n) == schreier_member_exhaustive(f, n), (f, n)


@given(small_sets, st.integers(0, 3), st.data())
def test_hereditary(f, n, data):
    if schreier_member(f, n) and f:
        sub = data.draw(st.lists(st.sampled_from(f), unique=True))
        assert schreier_member(sub, n)


@given(small_sets, st.integers(0, 3), st.lists(st.integers(0, 4)))
def test_spreading(f, n, bumps):
    if not schreier_member(f, n):
        return
    spread, last = [], 0
    for i, v in enumerate(f):
        step = bumps[i] if i < len(bumps) else 0
        last = max(v + step, last + 1)
        spread.append(last)
    assert spreading_shift(f, spread)
    assert schreier_member(spread, n)


@given(small_sets, st.integers(0, 3))
def test_nested_levels(f, n):
    if schreier_member(f, n):
        assert schreier_member(f, n + 1)


@given(small_sets, st.integers(0, 3))
def test_automaton_state_none_iff_rejected(f, n):
    assert (run_automaton(f, n) is None) == (not schreier_member(f, n))


coeff_vectors = st.dictionaries(st.integers(1, 14), st.integers(-6, 6), max_size=9).map(SparseVector)


@settings(max_examples=200)
@given(coeff_vectors, st.integers(0, 4))
def test_seminorm_matches_bruteforce(x, p):
    value, witness = schreier_seminorm(x, p)
    assert value == is_schreier_seminorm_bruteforce(x, p)
    assert schreier_member(witness, p)
    assert sum(abs(x[k]) for k in witness) == value


@given(coeff_vectors, st.integers(0, 3))
def test_seminorm_monotone_in_p(x, p):
    assert schreier_seminorm(x, p)[0] <= schreier_seminorm(x, p + 1)[0]
