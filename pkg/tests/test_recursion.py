import json
from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings, strategies as st

from hhpainleve.painleve import ParameterError, SystemParams, dominant_balances, resonances
from hhpainleve.recursion import (ObstructionError, ObstructionReport, SeriesSolution, determinant,
                                  determinant_zeros, generate_case2_series, generate_generic,
                                  generate_puiseux_series, make_family, puiseux_discovery, resonance_solve)
from hhpainleve.verify import check_system

# rational resonances: Case 1 from one resonance r (the other is 5 - r), Case 2 from alpha
case1_res = st.fractions(min_value=F(-15, 2), max_value=F(25, 2), max_denominator=2)
case2_alpha = st.sampled_from([F(-3, 2), F(-1), F(-1, 2)])   # grids of step 1 or 1/2


def case1_coupling(r):
    return r * (5 - r) / 6 - 2


def case2_coupling(alpha):
    return F(12) / (alpha - alpha * alpha)


def _check_zeros(p, case):
    bal = {b.case: b for b in dominant_balances(p)}[case]
    fam = make_family(p, bal)
    expected = sorted({int(r * fam.q) for r in resonances(bal, p).positive_rational()})
    zeros = determinant_zeros(p, case, 200 * fam.q)
    assert zeros == expected


@settings(max_examples=25, deadline=None)
@given(case1_res, st.fractions(min_value=-3, max_value=3, max_denominator=5))
def test_case1_determinant_zeros_are_the_resonances(r, lam):
    C = case1_coupling(r)
    assume(C not in (0, -2))
    _check_zeros(SystemParams(lam, C), "Case1")


@settings(max_examples=25, deadline=None)
@given(case2_alpha, st.fractions(min_value=-3, max_value=3, max_denominator=5))
def test_case2_determinant_zeros_are_the_resonances(alpha, lam):
    _check_zeros(SystemParams(lam, case2_coupling(alpha)), "Case2")


@settings(max_examples=12, deadline=None)
@given(case1_res, st.fractions(min_value=-2, max_value=2, max_denominator=3), st.sampled_from(["+", "-"]))
def test_generic_families_solve_the_system_or_report(r, lam, branch):
    C = case1_coupling(r)
    assume(C not in (0, -2))
    p = SystemParams(lam, C)
    out = generate_generic(p, branch=branch, N=10)
    if isinstance(out, ObstructionReport):
        bal = dominant_balances(p)[0]
        fam = make_family(p, bal)
        assert determinant(out.step, fam).is_zero()
    else:
        assert check_system(out).passed


def test_unsupported_grid_is_reported():
    p = SystemParams(0, case2_coupling(F(-1, 3)))
    bal = {b.case: b for b in dominant_balances(p)}["Case2"]
    with pytest.raises(ObstructionError) as info:
        make_family(p, bal)
    assert info.value.report.kind == "unsupported"


def test_resonance_roots_at_one_ninth():
    roots = resonance_solve(F(1, 9))
    assert [(r.c1_fourth.to_fraction(), r.b2.to_fraction()) for r in roots] == [
        (F(625, 128), F(-1819, 663552)), (F(-8125, 23936), F(-8700683, 1364926464))]


def test_resonance_roots_for_irrational_discriminant():
    # at lam = 0 the quadratic in c1^4 has an irrational discriminant
    for r in resonance_solve(0):
        assert not r.c1_fourth.is_rational()


@pytest.mark.parametrize("branch", ["real-plus", "real-i", "c2-plus", "c2-i"])
def test_case2_families_are_exact_solutions(branch):
    sol = generate_case2_series(F(1, 9), branch, N=10)
    assert check_system(sol).passed
    assert set(sol.free_parameters) == {"a2", "b4"}
    assert sol.meta["resonance_steps"] == [4, 6] or sorted(sol.meta["registry"]) == ["a2", "b4"]


def test_case2_leading_terms():
    sol = generate_case2_series(F(1, 9), "real-plus", N=2)
    assert sol.y.coeff(-2) == F(-15, 8)
    assert sol.x.coeff(F(-3, 2)) ** 4 == F(625, 128)


def test_unknown_branch():
    with pytest.raises(ParameterError):
        generate_case2_series(F(1, 9), "no-such-branch")


def test_puiseux_condition_forces_d0():
    st_ = puiseux_discovery(1)
    conds = [o for o in st_.obstructions if o.kind == "conditional"]
    assert len(conds) == 1 and conds[0].step == 7
    assert conds[0].condition.free_names() == ("D0",)
    assert conds[0].condition.linear_part("D0")[0] == F(-225, 112)
    sol = generate_puiseux_series(1, N=12)
    assert sol.bindings == {"D0": 0}
    assert set(sol.free_parameters) == {"D1", "D2"}


@pytest.mark.parametrize("sign", [1, -1])
def test_puiseux_families_are_exact_solutions(sign):
    sol = generate_puiseux_series(F(2, 3), sign=sign, N=16)
    assert check_system(sol).passed
    assert sol.x.q == 2 or any(e.denominator == 2 for e, c in sol.x.terms() if not c.is_zero())


def test_puiseux_with_d0_kept_is_obstructed():
    fam_sol = generate_puiseux_series(1, N=2, bindings={"D0": 1})
    # D0 = 1 is only allowed while the resonance at 7/2 is beyond the truncation
    assert check_system(fam_sol).passed
    with pytest.raises(ObstructionError):
        generate_puiseux_series(1, N=8, bindings={"D0": 1})


def test_bindings_substitute_exactly():
    sol = generate_case2_series(F(1, 9), "real-plus", N=6, bindings={"a2": 0, "b4": F(1, 2)})
    assert sol.free_parameters == ()
    assert sol.y.coeff(4) == F(1, 2)


def test_negate_x_is_a_solution():
    sol = generate_case2_series(F(1, 9), "c2-plus", N=6)
    assert check_system(sol.negate_x()).passed


def test_solution_json_round_trip():
    for sol in (generate_case2_series(F(1, 9), "real-i", N=6), generate_puiseux_series(1, N=10)):
        text = json.dumps(sol.to_json(), sort_keys=True)
        back = SeriesSolution.from_json(json.loads(text))
        assert json.dumps(back.to_json(), sort_keys=True) == text
        assert back.x == sol.x and back.y == sol.y
