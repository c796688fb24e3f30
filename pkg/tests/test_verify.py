from fractions import Fraction as F

import mpmath
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from hhpainleve.painleve import ParameterError, SystemParams
from hhpainleve.recursion import generate_case2_series, generate_puiseux_series
from hhpainleve.scalar import QQ, ParamPoly
from hhpainleve.series import PSeries
from hhpainleve.verify import (FirstOrderCoeffs, VerificationError, check_system, closed_form_pole,
                               closed_form_series, closed_form_values, compare_closed_form, consistency_sample,
                               convergence_certificate, derive_fourth_order, energy_series, first_order_coeffs,
                               match_parameters, index_threshold, printed_case2_bounds, reduction_denominators,
                               reduction_locus, residual_first_order, residual_fourth_order, residual_system,
                               verify_solution, weierstrass_half_power_coeffs)

LAM = F(1, 9)


@pytest.fixture(scope="module")
def case2():
    return generate_case2_series(LAM, "real-plus", N=8)


@pytest.fixture(scope="module")
def puiseux():
    return generate_puiseux_series(1, N=12)


def test_residual_system_is_zero(case2, puiseux):
    for sol in (case2, puiseux):
        r1, r2 = residual_system(sol)
        assert all(c.is_zero() for _, c in r1.terms())
        assert all(c.is_zero() for _, c in r2.terms())


def test_residual_system_locates_a_perturbation(case2):
    bad = case2.substitute({})
    bad.y = bad.y + PSeries.monomial(QQ(1), 1, bad.y.order, names=bad.y.names, field=bad.y.field)
    check = check_system(bad)
    # 2*x*t first disturbs the x-equation at t^(-3/2 + 1)
    assert not check.passed and check.location == "x-equation at t^-1/2"


def test_fourth_order_coefficients():
    f = derive_fourth_order()
    lam, C = sympy.symbols("lam C")
    expected = {(1, 0, 1, 0): 2 * (C - 4), (0, 0, 1, 0): -4 * lam - 1, (0, 2, 0, 0): 2 * (C + 1),
                (0, 0, 0, 1): -4, (1, 0, 0, 0): -4 * lam, (3, 0, 0, 0): 20 * C / 3,
                (2, 0, 0, 0): 2 * (2 * C * lam - 3)}
    assert set(f.terms) == set(expected)
    for mono, expr in expected.items():
        assert sympy.simplify(f.coefficient(*mono) - expr) == 0


def test_fourth_order_residual_vanishes(case2, puiseux):
    for sol in (case2, puiseux):
        H = energy_series(sol)
        assert all(c.is_zero() for _, c in residual_fourth_order(sol, H).terms())


def test_fourth_order_with_wrong_energy_fails(case2):
    H = energy_series(case2)
    r = residual_fourth_order(case2, H.value + 1)
    assert any(not c.is_zero() for _, c in r.terms())


def test_energy_of_symbolic_family_is_polynomial(case2):
    H = energy_series(case2)
    assert set(H.value.free_names()) <= {"a2", "b4"}
    assert not H.value.is_constant()


def test_energy_of_zero_solution():
    z = PSeries(0, 1, [QQ(0)], 4, (), QQ)
    from hhpainleve.recursion import SeriesSolution
    sol = SeriesSolution(z, z, SystemParams(1, -1), (), {}, "zero", {})
    assert energy_series(sol).value == 0


def test_energy_rejects_short_series():
    sol = generate_case2_series(LAM, "real-plus", N=1)
    with pytest.raises(VerificationError):
        energy_series(sol)


def test_energy_matches_closed_form_at_a_regular_point():
    sol = closed_form_series("8.1", 10)
    H = energy_series(sol).value.constant()
    H = H.embed(300) if hasattr(H, "embed") else mpmath.mpf(H)
    with mpmath.workprec(300):
        tau = -closed_form_pole("8.1", 0, 300) + 3 * mpmath.pi / 2 * 3     # sin((t - t0)/3) = -1
        h = mpmath.mpf(10) ** -25

        def xy(t):
            x2, y = closed_form_values("8.1", t, 300)
            return mpmath.sqrt(x2), y

        (xm, ym), (x0, y0), (xp, yp) = xy(tau - h), xy(tau), xy(tau + h)
        xt, yt = (xp - xm) / (2 * h), (yp - ym) / (2 * h)
        lam, C = mpmath.mpf(1) / 9, mpmath.mpf(-16) / 5
        numeric = (xt**2 + yt**2 + lam * x0**2 + y0**2) / 2 + x0**2 * y0 - C / 3 * y0**3
        assert abs(numeric - H) < mpmath.mpf(10) ** -30


def test_first_order_coefficients():
    c = first_order_coeffs(SystemParams(1, F(-16, 5)), 0, "4a")
    assert (c.A, c.B, c.C, c.D) == (F(-32, 15), -1, 0, 0)
    c = first_order_coeffs(SystemParams(1, F(-9, 8)), F(3), "4b'")
    assert (c.A, c.B, c.C, c.D) == (F(-4, 3), -1, 0, F(16, 5))
    c = first_order_coeffs(SystemParams(1, F(-9, 8)), F(3), "4b")
    assert (c.A, c.B, c.C, c.D) == (F(-4, 3), -1, 0, F(16, 5))


@pytest.mark.parametrize("C,factor", [(F(-1), "C + 1"), (F(-4, 3), "3*C + 4"), (F(-3), "C + 3")])
def test_reduction_denominator_errors(C, factor):
    with pytest.raises(ParameterError, match=factor.replace("*", r"\*").replace("+", r"\+")):
        first_order_coeffs(SystemParams(1, C), 1, "4b")


def test_reduction_denominators_factor():
    d = reduction_denominators()
    assert "(C + 1)**2*(3*C + 4)" in d.values()
    assert "(C + 1)**3*(C + 3)*(3*C + 4)" in d.values()


@pytest.mark.parametrize("variant", ["4a", "4b", "4b'"])
def test_consistency_sampling(variant):
    checks = consistency_sample(variant, samples=6, seed=3)
    assert len(checks) == 6 and all(c.passed for c in checks)


def test_consistency_example_point():
    (check,) = consistency_sample("4b", samples=0, points=[(1, -6, 1)])
    assert check.passed


@settings(max_examples=20, deadline=None)
@given(st.fractions(min_value=-5, max_value=5, max_denominator=4),
       st.fractions(min_value=-5, max_value=5, max_denominator=4).filter(lambda c: c not in (0, -1, -3, F(-4, 3))),
       st.fractions(min_value=-5, max_value=5, max_denominator=4))
def test_cubic_reduction_holds_exactly_on_its_locus(lam, C, H):
    (check,) = consistency_sample("4b", samples=0, points=[(lam, C, H)])
    if reduction_locus(lam, C):
        assert check.passed
    else:
        # off the locus only the y^0 terms can disagree
        assert check.passed or "y^0" in check.location


def test_puiseux_primed_reduction(puiseux):
    y = puiseux.substitute({"D1": 0}).y
    fit = residual_first_order(y, FirstOrderCoeffs(F(-4, 3), F(-1), F(0), None))
    names = fit.fitted_D.names
    assert fit.passed
    assert fit.fitted_D == ParamPoly.const(F(1, 24), names) + ParamPoly.var("D2", names, 84)
    H = energy_series(puiseux.substitute({"D1": 0}))
    assert residual_first_order(y, first_order_coeffs(puiseux.params, H.value, "4b'")).passed


def test_primed_reduction_fails_with_d1(puiseux):
    fit = residual_first_order(puiseux.y, FirstOrderCoeffs(F(-4, 3), F(-1), F(0), None))
    assert not fit.passed


@pytest.mark.parametrize("which,branch", [("8.1", 1), ("8.2", -1)])
def test_half_power_reduction_on_closed_forms(which, branch):
    y = closed_form_series(which, 12).y
    assert residual_first_order(y, weierstrass_half_power_coeffs(1), branch).passed
    assert not residual_first_order(y, weierstrass_half_power_coeffs(1), -branch).passed
    assert residual_first_order(y, weierstrass_half_power_coeffs(-1), -branch).passed


def test_zero_series_with_zero_coefficients():
    z = PSeries(0, 1, [QQ(0)], 6, (), QQ)
    assert residual_first_order(z, FirstOrderCoeffs(0, 0, 0, 0)).passed


@pytest.mark.parametrize("which", ["8.1", "8.2"])
def test_closed_form_series_are_solutions(which):
    sol = closed_form_series(which, 10)
    assert check_system(sol).passed
    assert sol.y.coeff(-2) == F(-15, 8)


def test_match_rejects_other_leading_coefficient():
    fam = generate_case2_series(LAM, "c2-plus", N=6)
    with pytest.raises(VerificationError):
        match_parameters(fam, closed_form_series("8.1", 6))


def test_numeric_comparison_at_one_point():
    fam = generate_case2_series(LAM, "real-plus", N=16)
    m = match_parameters(fam, closed_form_series("8.1", 16))
    (row,) = compare_closed_form(fam.substitute(m.bindings), "8.1", [mpmath.mpc("0.3", "0.1")], prec=200)
    assert row.passed and row.dx < mpmath.mpf(10) ** -10


def test_verify_solution_bundle(case2):
    checks = {c.name: c for c in verify_solution(case2, "closed-form-8.1")}
    assert all(c.passed for c in checks.values())
    assert {"residual_system", "x_to_minus_x", "energy_constant", "fourth_order"} <= set(checks)


def test_threshold_formula():
    assert index_threshold(LAM, F(3, 2)) == 8
    assert index_threshold(F(0), F(21)) == 8           # 1 + sqrt(49)
    assert index_threshold(F(0), F(22)) == 9           # 1 + ceil(sqrt(51))


def test_printed_index_bounds_are_below_one():
    c1 = F(3, 2)                                          # |c1| = (625/128)^(1/4) < 3/2
    for k in range(9, 201):
        a, b = printed_case2_bounds(LAM, c1, k)
        assert a <= 1 and b <= 1


def test_certificate_refuses_large_parameters(case2):
    cert = convergence_certificate(case2, {"a2": 50, "b4": 50}, horizon=30)
    assert not cert.granted and cert.reason


def test_puiseux_certificate_needs_exceptions():
    sol = generate_puiseux_series(1, N=20)
    strict = convergence_certificate(sol, {"D1": 1, "D2": 1}, horizon=20)
    assert not strict.granted
    lenient = convergence_certificate(sol, {"D1": 1, "D2": 1}, horizon=20, allow_exceptions=True)
    assert lenient.granted
    assert [(e["component"], e["index"]) for e in lenient.exceptions] == [("x", "3")]
