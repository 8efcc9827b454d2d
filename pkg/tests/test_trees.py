import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import e
from tslab.core import SparseVector
from tslab.norms import norm
from tslab.schreier import Mode
from tslab.theta import ThetaSpec
from tslab.trees import (InvalidTree, NormingTree, NotDisjoint, NotS1Tree, OrderTooLarge,
                         ceil_to_multiple, evaluate_tree, flatten_to_s1, lift_s1_to_sN,
                         random_antichain, random_tree, retarget_to_sN, validate_tree,
                         verify_disjoint_family)

GEO = ThetaSpec.geometric(Fraction(1, 2))
leaf = NormingTree.leaf
branch = NormingTree.branch

SINGLETONS = branch([3, 4, 5], 1, [leaf([3]), leaf([4]), leaf([5])])
S2 = branch([2, 3, 4, 5], 2, [leaf([2, 3]), leaf([4, 5])])


def unit(level):
    return Fraction(1)


def test_single_node_tree():
    v = validate_tree(leaf([3, 4]), "admissible", GEO)
    assert v.ok
    root = v.meta[()]
    assert (root.tag, root.order, root.height) == (1, 0, 0)


def test_singleton_split_meta():
    v = validate_tree(SINGLETONS, "admissible", GEO)
    assert v.ok
    for i in range(3):
        assert v.meta[(i,)].tag == Fraction(1, 2) and v.meta[(i,)].order == 1


def test_invalid_min_set():
    t = branch([1, 2], 1, [leaf([1]), leaf([2])])
    assert not validate_tree(t, "allowable", GEO).ok
    with pytest.raises(InvalidTree):
        evaluate_tree(t, e(1, 2), GEO)


def test_child_outside_parent_and_overlap():
    assert not validate_tree(branch([3, 4], 1, [leaf([3]), leaf([9])]), "allowable", GEO).ok
    interleaved = branch([3, 4, 5, 6], 1, [leaf([3, 5]), leaf([4, 6])])
    assert validate_tree(interleaved, "allowable", GEO).ok
    assert not validate_tree(interleaved, "admissible", GEO).ok


def test_internal_node_needs_level():
    with pytest.raises(InvalidTree):
        NormingTree((2, 3), (leaf([2]),), None)


def test_evaluate_examples():
    assert evaluate_tree(leaf([2]), e(2), GEO) == 1
    assert evaluate_tree(SINGLETONS, e(3, 4, 5), GEO) == Fraction(3, 2)
    assert evaluate_tree(SINGLETONS, e(3), GEO) == Fraction(1, 2)


def test_flatten_s2_branching():
    f = flatten_to_s1(S2)
    assert validate_tree(f, "admissible", GEO).ok
    assert {n.level for _, n in f.walk() if not n.is_leaf} == {1}
    assert f.leaf_orders() == [((2, 3), 2), ((4, 5), 2)]


def test_flatten_fixed_points():
    assert flatten_to_s1(SINGLETONS) == SINGLETONS
    assert flatten_to_s1(leaf([4, 7])) == leaf([4, 7])


@pytest.mark.parametrize("o,N,expected", [(5, 3, 6), (6, 3, 6), (1, 4, 4), (0, 3, 0)])
def test_ceil_to_multiple(o, N, expected):
    assert ceil_to_multiple(o, N) == expected


def test_lift_leaf_orders():
    # a chain of five level-1 branchings puts the leaf at order 5
    t = leaf([20])
    for _ in range(5):
        t = branch([20], 1, [t])
    assert [o for _, o in lift_s1_to_sN(t, 3).leaf_orders()] == [6]
    t6 = branch([20], 1, [t])
    assert [o for _, o in lift_s1_to_sN(t6, 3).leaf_orders()] == [6]
    one = branch([20], 1, [leaf([20])])
    assert [o for _, o in lift_s1_to_sN(one, 4).leaf_orders()] == [4]


def test_lift_rejects_non_s1():
    with pytest.raises(NotS1Tree):
        lift_s1_to_sN(S2, 2)


def test_retarget_examples():
    assert [o for _, o in retarget_to_sN(S2, 2).leaf_orders()] == [2, 2]
    assert Counter(retarget_to_sN(S2, 1).leaf_orders()) == Counter(S2.leaf_orders())
    assert retarget_to_sN(leaf([5]), 3) == leaf([5])


def test_disjoint_family_examples():
    assert verify_disjoint_family(SINGLETONS, [(0,), (1,), (2,)], 1, "admissible")
    nested = branch([3, 4, 5, 6, 7, 8], 1, [branch([3, 4, 5], 1, [leaf([3]), leaf([4]), leaf([5])]),
                                          branch([6, 7, 8], 1, [leaf([6]), leaf([7, 8])])])
    assert validate_tree(nested, "admissible", GEO).ok
    assert verify_disjoint_family(nested, [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1)], 2, "admissible")
    assert verify_disjoint_family(nested, [()], 0, "admissible")
    with pytest.raises(OrderTooLarge):
        verify_disjoint_family(nested, [(0, 0)], 1, "admissible")
    with pytest.raises(NotDisjoint):
        verify_disjoint_family(nested, [(0,), (0, 0)], 2, "admissible")


def test_json_roundtrip():
    assert NormingTree.from_json(S2.to_json()) == S2
    with pytest.raises(ValueError):
        NormingTree.from_json({"set": [2], "colour": 1})


seeds = st.integers(0, 2 ** 32 - 1)
modes = st.sampled_from([Mode.ADMISSIBLE, Mode.ALLOWABLE])


@settings(max_examples=150, deadline=None)
@given(seeds, modes)
def test_random_trees_are_valid(seed, mode):
    t = random_tree(random.Random(seed), mode)
    assert validate_tree(t, mode, unit).ok


@settings(max_examples=150, deadline=None)
@given(seeds, modes)
def test_flatten_preserves_leaves_and_orders(seed, mode):
    t = random_tree(random.Random(seed), mode)
    f = flatten_to_s1(t)
    assert validate_tree(f, mode, unit).ok
    assert all(n.level == 1 for _, n in f.walk() if not n.is_leaf)
    assert Counter(f.leaf_orders()) == Counter(t.leaf_orders())


@settings(max_examples=150, deadline=None)
@given(seeds, modes, st.integers(1, 4))
def test_retarget_rounds_orders_up(seed, mode, N):
    t = random_tree(random.Random(seed), mode)
    r = retarget_to_sN(t, N)
    assert validate_tree(r, mode, unit).ok
    assert all(n.level == N for _, n in r.walk() if not n.is_leaf)
    expected = Counter((s, ceil_to_multiple(o, N)) for s, o in t.leaf_orders())
    assert Counter(r.leaf_orders()) == expected


@settings(max_examples=150, deadline=None)
@given(seeds, modes)
def test_disjoint_nodes_form_schreier_family(seed, mode):
    rng = random.Random(seed)
    t = random_tree(rng, mode)
    paths = random_antichain(rng, t)
    m = max(sum(t.node(p[:i]).level for i in range(len(p))) for p in paths)
    assert verify_disjoint_family(t, paths, m, mode)


@settings(max_examples=60, deadline=None)
@given(seeds, modes, st.dictionaries(st.integers(1, 9), st.integers(-4, 4), max_size=6))
def test_tree_value_at_most_norm(seed, mode, coeffs):
    x = SparseVector(coeffs)
    t = random_tree(random.Random(seed), mode, max_index=9)
    assert evaluate_tree(t, x, GEO, mode) <= norm(x, GEO, mode).value
