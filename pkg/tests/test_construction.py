import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tslab.construction import (ConstructionTooLarge, HypothesisViolated, IndexStream,
                                InsufficientStream, KeyOutOfRange, L1pqInstance, LayeredFamily,
                                NotInSpan, NotSkipped, build_layers, check_pure_form_bounds,
                                check_repeated_average, coordinate_map, ell1_of,
                                is_repeated_average, modified_lower_bound, p_of, pure_form,
                                random_l1pq_instance, repeated_average, residue, th21_bound,
                                th21_rhs, u_vector, verify_l1pq, verify_lskipped)
from tslab.core import SparseVector
from tslab.norms import norm_allowable
from tslab.report import FAIL, NOT_APPLICABLE, PASS
from tslab.schreier import schreier_member
from tslab.theta import ParamSet, ThetaSpec

HALF = Fraction(1, 2)
GEO = ThetaSpec.geometric(HALF)
PHI = ThetaSpec.phi_harmonic(HALF)
CPHI = ThetaSpec.constant_phi(HALF, HALF)


def geo_family(N, p, start, L=None):
    L = L or (2,) * N
    return LayeredFamily(GEO, ParamSet(N, p, L), IndexStream.from_start(start))


# index streams and repeated averages

def test_stream_errors():
    s = IndexStream.from_list([2, 3], budget=10)
    assert [next(s), next(s)] == [2, 3]
    with pytest.raises(InsufficientStream):
        next(s)
    with pytest.raises(ConstructionTooLarge):
        next(IndexStream.from_start(1, budget=0))
    bad = IndexStream.from_list([3, 3])
    next(bad)
    with pytest.raises(ValueError):
        next(bad)


def test_repeated_average_examples():
    ra = repeated_average(2, IndexStream.from_start(2))
    q = Fraction(1, 4), Fraction(1, 8)
    assert ra.vector == SparseVector({2: q[0], 3: q[0], 4: q[1], 5: q[1], 6: q[1], 7: q[1]})
    assert repeated_average(1, IndexStream.from_start(3)).vector == \
        SparseVector({3: Fraction(1, 3), 4: Fraction(1, 3), 5: Fraction(1, 3)})
    assert repeated_average(0, [5]).vector == SparseVector.basis(5)


def test_repeated_average_size():
    # an order-2 average starting at m has m (2^m - 1) points
    for m in (2, 3, 4):
        assert len(repeated_average(2, IndexStream.from_start(m)).vector) == m * (2 ** m - 1)


def test_repeated_average_from_short_stream_fails():
    with pytest.raises(InsufficientStream):
        repeated_average(1, IndexStream.from_list([4, 5]))


def test_is_repeated_average():
    v = repeated_average(2, IndexStream.from_start(2)).vector
    assert is_repeated_average(v, 2)
    assert not is_repeated_average(v, 1)
    assert not is_repeated_average(SparseVector(), 1)


def test_order_zero_sup_bound_not_applicable():
    rep = check_repeated_average(repeated_average(0, [1]))
    status = {c.id: c.status for c in rep.cases}
    assert status["c0<=1/min"] == NOT_APPLICABLE and rep.ok


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 3), st.integers(1, 4), st.integers(1, 3))
def test_repeated_average_invariants(p, start, step):
    if p == 3 and (start > 2 or step > 1):
        return  # past these the order-3 averages run to hundreds of thousands of points
    stream = IndexStream(range(start, 10 ** 6, step))
    ra = repeated_average(p, stream)
    v = ra.vector
    coeffs = [v[k] for k in v.support]
    assert sum(coeffs) == 1
    assert schreier_member(v.support, p)
    if p >= 1:
        assert v.c0() <= Fraction(1, v.support[0])
    assert coeffs == sorted(coeffs, reverse=True)
    assert check_repeated_average(ra).ok


# residues and layered vectors

def test_residue_examples():
    assert (residue(7, 3), residue(6, 3), residue(5, 3)) == (1, 3, 2)
    with pytest.raises(ValueError):
        residue(3, 0)


@given(st.integers(1, 500), st.integers(1, 9))
def test_residue_property(k, L):
    r = residue(k, L)
    assert 1 <= r <= L and (k - r) % L == 0


def test_p_of():
    params = ParamSet(3, (1, 2, 5), (2, 2, 2))
    assert p_of(params, {1: 2, 3: 1}) == 7


def test_single_level_coefficients_sum_to_two():
    fam = geo_family(1, (1,), 3)
    entry = fam.entry(1, 1)
    assert sum(entry.coeffs.values()) == 2
    assert fam.vector(1, 1) == SparseVector({k: Fraction(2, 3) for k in (3, 4, 5)})


def test_coordinate_l1_is_inverse_theta():
    fam = geo_family(1, (1,), 3)
    for k in (1, 2):
        q = fam.order(1, k)
        assert ell1_of(coordinate_map(fam, fam.vector(1, k), 0)) == 1 / GEO.at(q)


def test_coordinate_map_rejects_vectors_outside_span():
    fam = geo_family(1, (1,), 3)
    fam.vector(1, 2)
    with pytest.raises(NotInSpan):
        coordinate_map(fam, SparseVector({3: 1, 4: 2, 5: 1}), 1)
    with pytest.raises(NotInSpan):
        coordinate_map(fam, SparseVector({10 ** 6: 1}), 0)


def test_key_out_of_range():
    fam = geo_family(2, (1, 1), 2)
    with pytest.raises(KeyOutOfRange):
        fam.vector(3, 1)
    with pytest.raises(KeyOutOfRange):
        fam.vector(1, 0)
    with pytest.raises(KeyOutOfRange):
        pure_form(fam, 1, 2, [3])


def test_budget_failure_freezes_family():
    fam = LayeredFamily(GEO, ParamSet(2, (1, 1), (2, 2)), IndexStream.from_start(3, budget=100))
    with pytest.raises(ConstructionTooLarge):
        fam.vector(2, 1)
    with pytest.raises(ConstructionTooLarge):
        fam.vector(0, 500)


def test_two_level_family_from_two():
    fam = geo_family(2, (1, 1), 2)
    top = fam.vector(2, 1)
    assert len(top) == 62 and top.ell1() == 6
    assert fam.used_counts() == [62, 2, 1]
    assert fam.coefficients_nonincreasing(1) == (True, True)


def test_coefficients_not_globally_nonincreasing():
    fam = geo_family(1, (1,), 3)
    for k in range(1, 4):
        fam.vector(1, k)
    within, overall = fam.coefficients_nonincreasing(1)
    assert within and not overall


def test_build_layers_and_dump_are_deterministic():
    a = build_layers(GEO, ParamSet(2, (1, 1), (2, 2)), IndexStream.from_start(2), [0, 0, 1])
    b = build_layers(GEO, ParamSet(2, (1, 1), (2, 2)), IndexStream.from_start(2), [0, 0, 1])
    assert a.dumps() == b.dumps()


# pure forms

def test_pure_forms_partition_and_sandwich():
    fam = geo_family(2, (1, 1), 2)
    rep = check_pure_form_bounds(fam, 1, 1, 1)
    status = {c.id: c.status for c in rep.cases}
    assert status["partition:k=1,s=1,M=1"] == PASS
    assert status["sandwich:k=1,s=1,M=1,r=1"] == PASS
    assert status["cornorm:k=1,level=2"] == NOT_APPLICABLE
    assert pure_form(fam, 1, 2, [1]) + pure_form(fam, 1, 2, [2]) == fam.vector(2, 1)


def test_sandwich_lower_bound_fails_on_degenerate_family():
    # from V = {1, 2, ...} every vector is a multiple of e_1, so three of the
    # four residue classes are empty while the lower estimate is (1/2 - 1)^2 = 1/4
    fam = geo_family(3, (1, 1, 1), 1)
    assert fam.vector(3, 1) == SparseVector({1: 8})
    rep = check_pure_form_bounds(fam, 1, 1, 2)
    failed = sorted(c.id for c in rep.failures())
    assert failed == ["sandwich:k=1,s=1,M=2,r=1,2", "sandwich:k=1,s=1,M=2,r=2,1",
                      "sandwich:k=1,s=1,M=2,r=2,2"]
    assert all(c.margins["lower"] == Fraction(1, 4) and c.margins["ratio"] == 0
               for c in rep.failures())


def test_u_vector_places_coefficients_at_minima():
    fam = geo_family(2, (1, 1), 2)
    u = u_vector(fam, 1, 2, [], 1)
    entry = fam.entry(2, 1)
    assert u == SparseVector({fam.vector(1, j).support[0]: a for j, a in entry.coeffs.items()})


# L-skipped sequences

def test_lskipped_example():
    rep = verify_lskipped([4, 3, 2, 1], 1, 2, [1, 3])
    assert rep.ok
    assert rep.cases[0].margins["slack"] == 3  # 6 <= 10/2 + 4


def test_lskipped_rejections():
    with pytest.raises(NotSkipped):
        verify_lskipped([4, 3, 2, 1], 1, 2, [1, 2])
    with pytest.raises(NotSkipped):
        verify_lskipped([4, 3, 2, 1], 1, 2, [7])
    with pytest.raises(ValueError):
        verify_lskipped([1, 2], 1, 2, [1])


@settings(max_examples=200)
@given(st.lists(st.fractions(0, 10, max_denominator=5), min_size=1, max_size=25),
       st.integers(1, 20), st.integers(1, 5), st.data())
def test_lskipped_bounds(values, start, L, data):
    a = sorted(values, reverse=True)
    J = list(range(start, start + len(a)))
    picks, last = [], None
    for j in J:
        if (last is None or j - last >= L) and data.draw(st.booleans()):
            picks.append(j)
            last = j
    assert verify_lskipped(a, start, L, picks).ok
    r = data.draw(st.integers(1, L))
    cls = [j for j in J if residue(j, L) == r]
    if cls:
        rep = verify_lskipped(a, start, L, cls)
        assert rep.ok and rep.cases[1].status == PASS


# S_{p+q} seminorm estimate for weighted block sums

def test_l1pq_norm_hypothesis_violation():
    inst = L1pqInstance(p=0, q=0, P=(2, 3), G=[(2,)], a={2: Fraction(1)}, Q=(2,),
                        z={2: SparseVector({2: 2})})
    with pytest.raises(HypothesisViolated) as err:
        verify_l1pq(inst)
    assert err.value.index == 2


def test_l1pq_support_hypothesis_violation():
    inst = L1pqInstance(p=1, q=0, P=(2, 4), G=[(2,)], a={2: Fraction(1)}, Q=(2,),
                        z={2: SparseVector({5: HALF})})
    with pytest.raises(HypothesisViolated) as err:
        verify_l1pq(inst)
    assert err.value.index == 1


@pytest.mark.parametrize("p,q", [(0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (2, 0), (1, 2), (2, 1)])
def test_l1pq_conclusions_on_random_instances(p, q):
    rng = random.Random(p * 10 + q)
    for _ in range(3):
        rep = verify_l1pq(random_l1pq_instance(rng, p, q))
        assert rep.ok, rep.failures()


# norm estimates for the layered vectors

def test_th21_values():
    assert th21_rhs(CPHI, 3, Fraction(1, 4)) == Fraction(14, 3)
    assert th21_rhs(GEO, 4, 1) == Fraction(17, 2)
    assert th21_rhs(PHI, 10, Fraction(10, 512)) == Fraction(41, 80)


def test_th21_bound_on_ten_levels():
    bound, ratio = th21_bound(PHI, ParamSet(10, (1,) * 10, (2,) * 10), 1)
    assert (bound, ratio) == (Fraction(119, 320), Fraction(11, 1024))
    assert bound <= Fraction(41, 80)


def test_modified_lower_bound_values():
    assert modified_lower_bound(ParamSet(2, (1, 1), (2, 2)), GEO) == {0: Fraction(1, 4)}
    assert modified_lower_bound(ParamSet(1, (1,), (2,)), GEO) == {0: Fraction(1, 4)}


def test_modified_lower_bound_below_exact_norm():
    fam = geo_family(2, (1, 1), 1)
    x = fam.vector(2, 1)
    value = norm_allowable(x, GEO).value
    for bound in modified_lower_bound(fam, k=1).values():
        assert bound <= value
