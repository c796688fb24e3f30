from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings, strategies as st

from hhpainleve.painleve import (ParameterError, QuadNumber, SystemParams, classify, dominant_balances,
                                 resonances)

couplings = st.fractions(min_value=-40, max_value=40, max_denominator=9).filter(lambda c: c != 0)
lams = st.fractions(min_value=-5, max_value=5, max_denominator=9)


def _balance(p, case):
    return {b.case: b for b in dominant_balances(p)}.get(case)


@settings(max_examples=80, deadline=None)
@given(lams, couplings)
def test_case1_resonances_solve_the_quadratic(lam, C):
    assume(C != -2)
    p = SystemParams(lam, C)
    rep = resonances(_balance(p, "Case1"), p)
    extra = rep.values[2:]
    for r in extra:
        if r.is_rational:
            assert r.p ** 2 - 5 * r.p + 6 * (2 + C) == 0
    if all(r.is_rational for r in extra):
        assert sum(r.p for r in extra) == 5
        assert extra[0].p * extra[1].p == 6 * (2 + C)


@settings(max_examples=80, deadline=None)
@given(lams, couplings)
def test_case2_exists_exactly_below_minus_two(lam, C):
    p = SystemParams(lam, C)
    assert (_balance(p, "Case2") is not None) == (C < -2)


@settings(max_examples=80, deadline=None)
@given(lams, couplings)
def test_case2_alpha_and_pairing(lam, C):
    assume(C < -2)
    p = SystemParams(lam, C)
    b = _balance(p, "Case2")
    rep = resonances(b, p)
    assert b.leading_y == F(6) / C
    if b.alpha.is_rational:
        a = b.alpha.p
        assert a * a - a + F(12) / C == 0
        assert -2 < a < 0
        assert 1 - 2 * a in rep.rational_values()


def test_case1_leading_coefficient():
    p = SystemParams(1, -1)
    b = _balance(p, "Case1")
    assert b.leading_y == -3
    assert [a * a for a in b.leading_x] == [9, 9]
    assert b.leading_x[0] == -b.leading_x[1]


def test_logarithmic_branch_at_minus_two():
    p = SystemParams(1, -2)
    assert _balance(p, "Case1").logarithmic
    assert classify(p).label == "LogarithmicBranch"
    with pytest.raises(ParameterError):
        resonances(_balance(p, "Case1"), p)


def test_zero_coupling_is_rejected():
    with pytest.raises(ParameterError):
        SystemParams(1, 0)


@pytest.mark.parametrize("lam,C,label", [
    (1, -1, "IntegrableCandidate(i)"),
    (F(5, 2), -6, "IntegrableCandidate(ii)"),
    (F(1, 16), -16, "IntegrableCandidate(iii)"),
    (F(1, 9), F(-16, 5), "NonintegrableRationalCase2"),
    (1, F(-9, 8), "NonintegrableRationalCase1"),
    (1, 1, "NonintegrableIrrational"),
    (2, -1, "LogarithmicBranch"),
    (F(1, 2), -16, "NonintegrableRationalCase1"),
])
def test_classification(lam, C, label):
    assert classify(SystemParams(lam, C)).label == label


def test_half_integer_resonances_are_flagged():
    got = classify(SystemParams(1, F(-9, 8)))
    assert got.detail["puiseux_eligible"]
    rep = resonances(_balance(SystemParams(1, F(-9, 8)), "Case1"), SystemParams(1, F(-9, 8)))
    assert rep.rational_values() == [-1, F(3, 2), F(7, 2), 6]


def test_irrational_resonance_is_exact():
    p = SystemParams(F(1, 9), F(-16, 5))
    rep = resonances(_balance(p, "Case1"), p)
    assert not rep.all_rational
    assert QuadNumber.make(F(5, 2), F(1, 2), F(269, 5)) in rep.values


def test_quad_number_collapses_perfect_squares():
    assert QuadNumber.make(1, 2, 9) == QuadNumber.make(7)
    assert not QuadNumber.make(0, 1, 2).is_rational
    assert not QuadNumber.make(0, 1, -2).is_real


def test_scan_finds_exactly_the_integrable_cases():
    lam_grid = [F(-1), F(0), F(1, 16), F(1, 9), F(1, 2), F(1), F(2)]
    for C in (F(-1), F(-6), F(-16)):
        for lam in lam_grid:
            label = classify(SystemParams(lam, C)).label
            integrable = C == -6 or (C == -1 and lam == 1) or (C == -16 and lam == F(1, 16))
            assert label.startswith("IntegrableCandidate") == integrable, (lam, C, label)
