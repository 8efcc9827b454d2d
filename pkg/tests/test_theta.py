from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tslab.report import FAIL, NOT_APPLICABLE, PASS
from tslab.theta import (FForm, NotFound, ParamSet, ThetaSpec, big_theta, big_theta_bruteforce,
                         check_ABC, check_ddag, check_regular, compositions, delta_m,
                         find_parameters, minimal_k, theta_at, theta_ratio_sup)

HALF = Fraction(1, 2)
GEO = ThetaSpec.geometric(HALF)
PHI = ThetaSpec.phi_harmonic(HALF)
CPHI = ThetaSpec.constant_phi(HALF, HALF)


def test_theta_values():
    assert theta_at(GEO, 3) == Fraction(1, 8)
    assert theta_at(PHI, 2) == Fraction(1, 12)
    assert theta_at(CPHI, 1) == Fraction(1, 4)
    table = ThetaSpec.table(["1/2", "1/3"], "1/2")
    assert [table.at(n) for n in (1, 2, 3, 4)] == [HALF, Fraction(1, 3), Fraction(1, 6),
                                                   Fraction(1, 12)]


@pytest.mark.parametrize("make", [lambda: ThetaSpec.geometric(1), lambda: ThetaSpec.geometric(0),
                                  lambda: ThetaSpec.constant_phi(HALF, 2),
                                  lambda: ThetaSpec.table([], HALF),
                                  lambda: ThetaSpec("nope", theta=HALF)])
def test_invalid_specs(make):
    with pytest.raises(ValueError):
        make()


def test_theta_index_must_be_positive():
    with pytest.raises(ValueError):
        GEO.at(0)


def test_regularity_examples():
    assert check_regular(GEO, 50).ok
    assert check_regular(PHI, 50).ok
    r = check_regular(ThetaSpec.table([HALF, Fraction(2, 3)], HALF), 10)
    assert not r.nonincreasing_ok
    assert r.first_violation == (1, 2)


def test_delta_examples():
    d = delta_m(PHI, 2, 200)
    assert d < Fraction(1, 4)
    assert d == Fraction(201, 812)  # n = 200: (1/4) * 201/203, the window maximum
    for horizon in (3, 10, 77):
        assert delta_m(GEO, 1, horizon) == HALF
    assert delta_m(CPHI, 3, 100) == Fraction(1, 8)


@pytest.mark.parametrize("spec,F,R,h", [
    (PHI, FForm.two_over_r(), 8, 60),
    (CPHI, FForm.one_over_c2r(HALF), 8, 60),
    (GEO, FForm.one_over_c2r(1), 5, 40),
])
def test_ddag_examples(spec, F, R, h):
    rep = check_ddag(spec, F, R, h)
    assert rep.ok and rep.summary[PASS] == R


def test_fform_parse_and_values():
    assert FForm.parse("2/r")(4) == HALF
    assert FForm.parse("one_over_c2r:1/2")(2) == 2
    assert FForm.parse("table:1,1/2")(2) == HALF
    with pytest.raises(ValueError):
        FForm.parse("table:1")(2)
    with pytest.raises(ValueError):
        FForm.parse("bogus")


def test_big_theta_examples():
    assert big_theta(PHI, 2, 4) == (Fraction(1, 128), (1, 3))
    assert big_theta(GEO, 3, 5)[0] == Fraction(1, 32)
    assert big_theta(CPHI, 2, 3)[0] == Fraction(1, 32)


def test_compositions_count():
    assert len(list(compositions(6, 3))) == 10


def test_theta_ratio_examples():
    assert theta_ratio_sup(PHI, 2, 40) <= 1
    assert big_theta(PHI, 2, 4)[0] / PHI.at(4) == Fraction(5, 8)
    assert theta_ratio_sup(CPHI, 3, 30) == Fraction(1, 4)
    assert theta_ratio_sup(GEO, 2, 20) == 1


def test_abc_for_two_levels_reports_vacuous_clause():
    rep = check_ABC(PHI, ParamSet(2, (1, 2), (2, 2)), FForm.two_over_r(), 100)
    status = {c.id: c.status for c in rep.cases}
    assert status["B"] == NOT_APPLICABLE


def test_abc_fails_with_witness_for_large_theta():
    rep = check_ABC(ThetaSpec.geometric(Fraction(9, 10)), ParamSet(2, (1, 3), (2, 2)),
                    FForm.one_over_c2r(1), 50)
    a = next(c for c in rep.cases if c.id == "A:M=0")
    assert a.status == FAIL and a.witness["n"] == 3


@pytest.mark.parametrize("spec", [CPHI, PHI])
def test_find_parameters_then_check(spec):
    from tslab.theta import default_fform
    F = default_fform(spec)
    params = find_parameters(spec, 2, F)
    assert isinstance(params, ParamSet)
    assert check_ABC(spec, params, F, 100).ok


def test_find_parameters_not_found():
    res = find_parameters(ThetaSpec.geometric(Fraction(999, 1000)), 3, FForm.one_over_c2r(1),
                          p_cap=50)
    assert isinstance(res, NotFound) and res.constraint == "A"


def test_minimal_k_examples():
    assert minimal_k(GEO, ParamSet(2, (1, 2), (2, 2))) == 43008
    assert minimal_k(GEO, ParamSet(1, (1,), (2,))) == 336
    assert minimal_k(CPHI, ParamSet(1, (1,), (2,))) == 672


def test_paramset_validation():
    with pytest.raises(ValueError):
        ParamSet(2, (1,), (2, 2))
    with pytest.raises(ValueError):
        ParamSet(1, (1,), (1,))
    with pytest.raises(ValueError):
        ParamSet.from_json({"N": 1, "p": [1], "L": [2], "x": 0})
    assert ParamSet.from_json('{"N": 1, "p": [1], "L": [2]}') == ParamSet(1, (1,), (2,))


specs = st.sampled_from([GEO, PHI, CPHI, ThetaSpec.phi_harmonic(Fraction(2, 3)),
                         ThetaSpec.constant_phi(Fraction(3, 4), Fraction(1, 3))])


@settings(max_examples=60, deadline=None)
@given(specs, st.integers(1, 8), st.integers(1, 40))
def test_big_theta_at_most_theta_p(spec, N, p):
    if p >= N:
        assert big_theta(spec, N, p)[0] <= spec.at(p)


@settings(max_examples=60, deadline=None)
@given(specs, st.integers(1, 5), st.integers(1, 14))
def test_big_theta_dp_matches_bruteforce(spec, N, p):
    if p >= N:
        value, witness = big_theta(spec, N, p)
        assert value == big_theta_bruteforce(spec, N, p)
        assert sum(witness) == p and len(witness) == N


@given(st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100)),
       st.integers(1, 6), st.integers(14, 80))
def test_geometric_delta_is_exact(theta, m, horizon):
    if horizon > 2 * m:
        assert delta_m(ThetaSpec.geometric(theta), m, horizon) == theta ** m
