from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from hhpainleve.scalar import QQ, ParamPoly, alg_root
from hhpainleve.series import PSeries, SeriesError

K = alg_root(2, 2)[1]
small = st.fractions(min_value=-9, max_value=9, max_denominator=6)


def series(q=1, names=()):
    coeffs = st.lists(st.builds(lambda a, b: K.from_coords([a, b]), small, small), min_size=1, max_size=6)
    bases = st.integers(min_value=-3, max_value=2).map(lambda b: F(b, q))
    return st.builds(lambda base, cs: PSeries(base, q, cs, base + F(len(cs) + 2, q), names, K), bases, coeffs)


@settings(max_examples=50, deadline=None)
@given(series(), series())
def test_multiplication_commutes(a, b):
    assert a * b == b * a


@settings(max_examples=50, deadline=None)
@given(series(2), series(2))
def test_leibniz_rule(a, b):
    lhs = (a * b).diff()
    rhs = a.diff() * b + a * b.diff()
    assert lhs.first_difference(rhs, min(lhs.order, rhs.order)) is None


@settings(max_examples=50, deadline=None)
@given(series(), series(), series())
def test_distributive(a, b, c):
    lhs = a * (b + c)
    rhs = a * b + a * c
    assert lhs.first_difference(rhs, min(lhs.order, rhs.order)) is None


@settings(max_examples=40, deadline=None)
@given(series())
def test_inverse(a):
    if a.is_zero() or a.lead().is_zero():
        return
    one = a * a.inv()
    assert one.coeff(0) == 1
    assert one.first_difference(PSeries(0, 1, [K.one()], one.order, (), K), one.order) is None


@settings(max_examples=40, deadline=None)
@given(series())
def test_sqrt_squares_back(a):
    if a.is_zero():
        return
    sq = a * a
    r = sq.sqrt("+")
    assert (r * r).first_difference(sq, min(sq.order, (r * r).order)) is None
    assert r == a or r == -a


def test_sqrt_of_odd_valuation_has_half_integer_exponents():
    t = PSeries(-2, 1, [QQ(4), QQ(0), QQ(1)], 2, (), QQ)
    r = t.sqrt("+")
    assert r.valuation == -1
    assert (r * r).first_difference(t, 2) is None
    u = PSeries(-1, 1, [QQ(1), QQ(2)], 3, (), QQ)
    s = u.sqrt("+")
    assert s.valuation == F(-1, 2)
    assert all(e.denominator == 2 for e, c in s.terms() if not c.is_zero())
    assert (s * s).first_difference(u, 3) is None


def test_diff_of_monomials():
    s = PSeries.monomial(QQ(1), F(3, 2), 10, q=2)
    d = s.diff()
    assert d.coeff(F(1, 2)) == F(3, 2)
    assert s.diff(2).coeff(F(-1, 2)) == F(3, 4)


def test_truncation_order_tracks_valuation():
    a = PSeries(-2, 1, [QQ(1), QQ(2)], 3, (), QQ)
    b = PSeries(1, 1, [QQ(5)], 4, (), QQ)
    assert (a * b).order == min(a.order + 1, b.order - 2)
    assert (a + b).order == 3


def test_shift_and_refine():
    a = PSeries(0, 1, [QQ(1), QQ(2)], 2, (), QQ)
    assert a.shift(F(1, 2)).coeff(F(3, 2)) == 2
    r = a.refine(2)
    assert r.q == 2 and r.coeff(1) == 2 and r.coeff(F(1, 2)) == 0


def test_parameter_substitution():
    names = ("D1",)
    c = ParamPoly.var("D1", names, QQ(3))
    s = PSeries(0, 2, [ParamPoly.const(QQ(1), names), ParamPoly(names), c], 4, names, QQ)
    got = s.substitute({"D1": F(1, 3)}, drop_bound=True)
    assert got.coeff(1) == 1 and got.names == ()


def test_eval_matches_direct_sum():
    a = PSeries(F(-1, 2), 2, [QQ(1), QQ(0), QQ(F(1, 3))], 2, (), QQ)
    v, tail = a.eval(F(1, 4), prec=128)
    with mpmath.workprec(128):
        t = mpmath.mpf(1) / 4
        direct = t ** mpmath.mpf(-0.5) + t ** mpmath.mpf(0.5) / 3
        assert abs(v - direct) < mpmath.mpf(10) ** -35
    assert tail > 0


def test_eval_at_the_pole_raises():
    with pytest.raises(SeriesError):
        PSeries(-2, 1, [QQ(1)], 2, (), QQ).eval(0)


def test_json_round_trip():
    names = ("a2",)
    x = PSeries(F(-3, 2), 1, [ParamPoly.const(K.gen(), names), ParamPoly.var("a2", names)], F(5, 2), names, K)
    back = PSeries.from_json(x.to_json(), K)
    assert back == x and back.to_json() == x.to_json()
