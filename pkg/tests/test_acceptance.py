"""One test per acceptance criterion; each prints a single PASS/FAIL line.

Printed values are transcribed from the published series and compared by
exact equality.  Where a printed coefficient disagrees with the recursion the
test fails and names the coefficient.
"""
from fractions import Fraction as F

import mpmath
import pytest
import sympy

from hhpainleve.painleve import SystemParams, classify, dominant_balances, resonances
from hhpainleve.recursion import (determinant_zeros, generate_case2_series, generate_generic,
                                  generate_puiseux_series, resonance_solve, verify_resonance_root)
from hhpainleve.scalar import FieldError, ParamPoly, Surd
from hhpainleve.verify import (check_system, closed_form_series, closed_form_values, compare_closed_form,
                               convergence_certificate, derive_fourth_order, energy_series,
                               match_parameters, residual_fourth_order)

LAM = F(1, 9)


def _poly(names, const=0, **linear):
    out = ParamPoly.const(const, names)
    for name, coeff in linear.items():
        out = out + ParamPoly.var(name, names, coeff)
    return out


def _mismatches(series, table, label):
    bad = []
    for exponent, expected in table:
        got = series.coeff(exponent)
        if not got == expected:
            bad.append(f"{label} t^{exponent}: printed {expected!r}, computed {got!r}")
    return bad


# -- 1 ------------------------------------------------------------------------------

RESONANCE_TABLE = [
    # (lam, C, case, alpha, resonance set, expected label)
    (F(1), F(-1), "Case1", -2, {-1, 2, 3, 6}, "IntegrableCandidate(i)"),
    (F(3, 7), F(-6), "Case1", -2, {-1, 6, 8, -3}, "IntegrableCandidate(ii)"),
    (F(3, 7), F(-6), "Case2", -1, {-1, 0, 6, 3}, "IntegrableCandidate(ii)"),
    (F(-2), F(-6), "Case1", -2, {-1, 6, 8, -3}, "IntegrableCandidate(ii)"),
    (F(1, 16), F(-16), "Case1", -2, {-1, 6, 12, -7}, "IntegrableCandidate(iii)"),
    (F(1, 16), F(-16), "Case2", F(-1, 2), {-1, 0, 6, 2}, "IntegrableCandidate(iii)"),
]


def test_criterion_1_resonance_table(criterion):
    problems = []
    for lam, C, case, alpha, expected, label in RESONANCE_TABLE:
        p = SystemParams(lam, C)
        bal = {b.case: b for b in dominant_balances(p)}[case]
        rep = resonances(bal, p)
        got = set(rep.rational_values()) if rep.all_rational else None
        if got != expected or bal.alpha.value() != alpha:
            problems.append(f"{case} at ({lam}, {C}): {got}, alpha {bal.alpha}")
        if classify(p).label != label:
            problems.append(f"({lam}, {C}) classified {classify(p).label}")
    p = SystemParams(LAM, F(-16, 5))
    bal = {b.case: b for b in dominant_balances(p)}["Case2"]
    rep = resonances(bal, p)
    if not (rep.all_rational and rep.rational_values() == [-1, 0, 4, 6]):
        problems.append(f"C=-16/5 Case2 resonances {[str(r) for r in rep.values]}")
    if not (bal.alpha.is_rational and bal.alpha.value() == F(-3, 2)):
        problems.append(f"C=-16/5 alpha {bal.alpha}")
    criterion(1, not problems, "; ".join(problems) or "cases (i)-(iii) and r = -1, 0, 4, 6 with alpha = -3/2")
    assert not problems


# -- 2 ------------------------------------------------------------------------------

def _printed_system(u, b2, lam):
    """The two printed conditions with ``u = c1**4``; the first is divided by ``c1``."""
    e1 = 557056 * u**2 + (15552000 * lam - 4860000) * u + 864000000 * b2 \
        + 108000000 * lam**2 - 67500000 * lam + 10546875
    e2 = 818176 * u**2 + (15660000 * lam - 4893750) * u - 810000000 * b2 - 6328125
    return e1, e2


def test_criterion_2_resonance_system(criterion):
    roots = resonance_solve(LAM)
    got = {(r.c1_fourth.to_fraction(), r.b2.to_fraction()) for r in roots
           if r.c1_fourth.is_rational() and r.b2.is_rational()}
    expected = {(F(625, 128), F(-1819, 663552)), (F(-8125, 23936), F(-8700683, 1364926464))}
    own = all(verify_resonance_root(r, *r.equations) for r in roots)
    printed = all(_printed_system(u, b2, LAM) == (0, 0) for u, b2 in got)
    ok = len(roots) == 2 and got == expected and own and printed
    criterion(2, ok, "c1^4, b2 = 625/128, -1819/663552 and -8125/23936, -8700683/1364926464")
    assert ok


# -- 3 ------------------------------------------------------------------------------

def _reference_first_family(sol):
    K = sol.field
    th = K.gen()                           # 2**(1/4)
    n = sol.names
    x = [
        (F(-3, 2), _poly(n, th * F(5, 4))),
        (F(-1, 2), _poly(n, 25 / (96 * th))),
        (F(1, 2), _poly(n, -5 * th / 16)),
        (F(3, 2), _poly(n, 5275 / (663552 * th))),
        (F(5, 2), _poly(n, a2=1)),
    ]
    y = [
        (F(-2), _poly(n, F(-15, 8))),
        (F(-1), _poly(n, 5 * th**2 / 32)),
        (F(0), _poly(n, F(-205, 2304))),
        (F(1), _poly(n, 115 * th**2 / 13824)),
        (F(2), _poly(n, F(-1819, 663552))),
        (F(3), _poly(n, 741719 * th**2 / 1528823808, a2=5 * th / 12)),
        (F(4), _poly(n, b4=1)),
    ]
    return x, y


def _reference_second_family(sol):
    K = sol.field
    th, i = K.gen(), K.i()
    n = sol.names
    x = [
        (F(-3, 2), _poly(n, 5 * i * th / 4)),
        (F(-1, 2), _poly(n, -25 * i / (96 * th))),
        (F(1, 2), _poly(n, -5 * i * th / 9216)),
        (F(3, 2), _poly(n, -5275 * i / (663552 * th))),
        (F(5, 2), _poly(n, a2=1)),
    ]
    y = [
        (F(-2), _poly(n, F(-15, 8))),
        (F(-1), _poly(n, -5 * th**2 / 32)),
        (F(0), _poly(n, F(-205, 2304))),
        (F(1), _poly(n, -115 * th**2 / 13824)),
        (F(2), _poly(n, F(-1819, 663552))),
        (F(3), _poly(n, -741719 * th**2 / 1528823808, a2=-5 * i * th / 12)),
        (F(4), _poly(n, b4=1)),
    ]
    return x, y


def test_criterion_3_series_fidelity(criterion):
    bad = []
    for branch, table, tag in (("real-plus", _reference_first_family, "first"), ("real-i", _reference_second_family, "second")):
        sol = generate_case2_series(LAM, branch, N=4)
        xs, ys = table(sol)
        bad += _mismatches(sol.x, xs, f"{tag} x")
        bad += _mismatches(sol.y, ys, f"{tag} y")
    criterion(3, not bad, "; ".join(bad) or "all printed coefficients through t^4")
    assert not bad, "\n".join(bad)


# -- 4 ------------------------------------------------------------------------------

def test_criterion_4_closed_form_matching(criterion):
    fam = generate_case2_series(LAM, "real-plus", N=20)
    m = match_parameters(fam, closed_form_series("8.1", 20))
    th = m.bindings["a2"].field.gen()
    ok = (m.passed and m.order >= 21
          and m.bindings["a2"] == th * F(-21497, 42467328)
          and m.bindings["b4"] == F(-858455, 12039487488))
    criterion(4, ok, f"a2 = {m.bindings.get('a2')}, b4 = {m.bindings.get('b4')}, "
                     f"agreement below t^{m.order}" + (f", first difference {m.location}" if m.location else ""))
    assert ok


def test_second_closed_form_matches_the_i_branch():
    fam = generate_case2_series(LAM, "real-i", N=12)
    m = match_parameters(fam, closed_form_series("8.2", 12))
    K = m.bindings["a2"].field
    assert m.passed
    assert m.bindings["a2"] == K.i() * K.gen() * F(-21497, 42467328)
    assert m.bindings["b4"] == F(-858455, 12039487488)


# -- 5 ------------------------------------------------------------------------------

def test_criterion_5_convergence(criterion):
    sol = generate_case2_series(LAM, "real-plus", N=8)
    cert = convergence_certificate(sol, {"a2": 1, "b4": 1}, horizon=200, epsilon=F(1, 100))
    ok = (cert.granted and cert.threshold_N == 8 and cert.verified_range[1] >= 200
          and cert.tail_proven and cert.ring["inner"] == "0" and cert.ring["outer"] == "1 - 1/100"
          and max(cert.max_magnitude.values()) <= 1)
    criterion(5, ok, f"N = {cert.threshold_N}, indices {cert.verified_range}, "
                     f"ring 0 < |tau| <= {cert.ring['outer']}")
    assert ok


def test_threshold_is_eight_for_every_leading_coefficient():
    for branch in ("real-plus", "real-i", "c2-plus", "c2-i"):
        cert = convergence_certificate(generate_case2_series(LAM, branch, N=8), {"a2": 1, "b4": 1}, horizon=40)
        assert cert.granted and cert.threshold_N == 8


# -- 6 ------------------------------------------------------------------------------

def _as_field(value, K):
    if isinstance(value, Surd):
        try:
            return value.to_field(K)
        except FieldError:
            return None
    return K(value)


def _printed_puiseux(sol):
    """Printed table; entries are ``coeff * sqrt(radicand)`` per parameter monomial."""
    half = F(7, 2)                          # sqrt(7)/sqrt(2) = sqrt(7/2)
    x = [
        (F(-2), {(): Surd(F(3, 2), half)}),
        (F(0), {(): Surd(F(7, 8), F(1, 2))}),
        (F(3, 2), {("D1",): Surd(4, F(1, 14))}),
        (F(2), {(): Surd(F(1, 160), half)}),
        (F(7, 2), {("D1",): Surd(F(-15, 224), half)}),
        (F(4), {("D2",): Surd(F(-1, 2), half)}),
        (F(5), {("D1", "D1"): Surd(F(-467, 8624), half)}),
        (F(11, 2), {("D1",): Surd(F(1157, 430080), half)}),
        (F(6), {(): Surd(F(1, 115200), half)}),
    ]
    y = [
        (F(-2), {(): F(-3)}),
        (F(0), {(): F(-1, 4)}),
        (F(3, 2), {("D1",): F(1)}),
        (F(2), {(): F(-1, 80)}),
        (F(7, 2), {("D1",): F(-15, 128)}),
        (F(4), {("D2",): F(1)}),
        (F(5), {("D1", "D1"): F(-79, 616)}),
        (F(11, 2), {("D1",): F(1157, 245760)}),
    ]
    return x, y


def _table_poly(entry, names, K):
    out = ParamPoly(names)
    for mono, value in entry.items():
        v = _as_field(value, K)
        if v is None:
            return None
        term = ParamPoly.const(v, names)
        for n in mono:
            term = term * ParamPoly.var(n, names)
        out = out + term
    return out


def test_criterion_6_puiseux(criterion):
    sol = generate_puiseux_series(1, N=12)
    K, names = sol.field, sol.names
    bad = []
    xs, ys = _printed_puiseux(sol)
    for label, series, table in (("x", sol.x, xs), ("y", sol.y, ys)):
        for e, entry in table:
            want = _table_poly(entry, names, K)
            got = series.coeff(e)
            if want is None or not got == want:
                bad.append(f"{label} t^{e}: printed {entry}, computed {got!r}")
    # the printed y t^6 term has no operator before 1/57600; only its magnitude is legible
    y6 = sol.y.coeff(6)
    if not (y6 == F(1, 57600) or y6 == F(-1, 57600)):
        bad.append(f"y t^6: |printed| 1/57600, computed {y6!r}")

    long = generate_puiseux_series(1, N=50)
    cert = convergence_certificate(long, {"D1": 1, "D2": 1}, horizon=50, allow_exceptions=True)
    exc = cert.exceptions
    flagged = (cert.granted and len(exc) == 1 and exc[0]["component"] == "x" and exc[0]["index"] == "3"
               and sol.x.coeff(F(3, 2)) == _table_poly({("D1",): Surd(1, F(8, 7))}, names, K))
    if not flagged:
        bad.append(f"bound exceptions {exc}")

    y = sol.substitute({"D1": 0}).y
    r = y.diff(1) * y.diff(1) + (y * y * y).scale(F(4, 3)) + y * y
    constant = all(c.is_zero() for e, c in r.terms() if e != 0 and e < r.order)
    if not constant:
        bad.append("y_t^2 + 4/3 y^3 + y^2 is not constant with D1 = 0")
    H = energy_series(sol.substitute({"D1": 0}))
    if not r.coeff(0) == H.value.scale(F(16, 15)):
        bad.append(f"reduction constant {r.coeff(0)!r} differs from 16H/15")
    criterion(6, not bad, "; ".join(bad) or "all printed coefficients, one exception, reduction constant")
    assert not bad, "\n".join(bad)


# -- 7 ------------------------------------------------------------------------------

def _families():
    yield generate_case2_series(LAM, "real-plus", N=8)
    yield generate_case2_series(LAM, "c2-i", N=8)
    yield generate_puiseux_series(1, N=12)
    yield generate_puiseux_series(F(-3, 5), sign=-1, N=12)
    for lam, C in ((F(1), F(-1)), (F(2, 3), F(-6)), (F(1, 16), F(-16))):
        p = SystemParams(lam, C)
        for b in dominant_balances(p):
            yield generate_generic(p, b, N=10)


def _predicted_steps(lam, C, case):
    p = SystemParams(lam, C)
    b = {x.case: x for x in dominant_balances(p)}[case]
    rs = resonances(b, p).positive_rational()
    q = max(r.denominator for r in rs) if rs else 1
    return [int(r * q) for r in rs], q


def test_criterion_7_oracle_suite(criterion):
    bad = []
    for sol in _families():
        name = f"{sol.branch} at ({sol.params.lam}, {sol.params.C})"
        if not check_system(sol).passed:
            bad.append(f"residual {name}")
        if not check_system(sol.negate_x()).passed:
            bad.append(f"x -> -x {name}")
        H = energy_series(sol)
        if any(not c.is_zero() for _, c in residual_fourth_order(sol, H).terms()):
            bad.append(f"fourth order {name}")
    for lam, C, case in ((F(1), F(-1), "Case1"), (F(2, 3), F(-6), "Case1"), (F(2, 3), F(-6), "Case2"),
                         (F(1, 16), F(-16), "Case1"), (F(1, 16), F(-16), "Case2"),
                         (LAM, F(-16, 5), "Case2"), (F(1), F(-9, 8), "Case1")):
        steps, q = _predicted_steps(lam, C, case)
        zeros = determinant_zeros(SystemParams(lam, C), case, 200 * q)
        if zeros != sorted(steps):
            bad.append(f"determinant zeros {zeros} vs resonances {steps} at ({lam}, {C}) {case}")
    f4 = derive_fourth_order()
    lam, C = sympy.symbols("lam C")
    printed = {(1, 0, 1, 0): 2 * C - 8, (0, 0, 1, 0): -(4 * lam + 1), (0, 2, 0, 0): 2 * (C + 1),
               (0, 0, 0, 1): sympy.Integer(-4)}
    for mono, expr in printed.items():
        if sympy.simplify(f4.coefficient(*mono) - expr) != 0:
            bad.append(f"fourth-order term {mono}: {f4.coefficient(*mono)}")
    criterion(7, not bad, "; ".join(bad) or "residuals, x -> -x, energy, fourth order, zeros through 200")
    assert not bad


# -- 8 ------------------------------------------------------------------------------

def test_criterion_8_numeric_cross_check(criterion):
    fam = generate_case2_series(LAM, "real-plus", N=20)
    m = match_parameters(fam, closed_form_series("8.1", 20))
    sol = fam.substitute(m.bindings)
    with mpmath.workprec(256):
        taus = [mpmath.mpf(1) / 2 * mpmath.expjpi(2 * (k + mpmath.mpf(1) / 2) / 20) for k in range(20)]
    rows = compare_closed_form(sol, "8.1", taus, prec=256)
    ok = len(rows) == 20 and all(r.passed for r in rows)
    worst_x = max(r.dx for r in rows)
    worst_y = max(r.dy for r in rows)
    criterion(8, ok, f"max |dx| = {mpmath.nstr(worst_x, 3)} <= tail {mpmath.nstr(min(r.tail_x for r in rows), 3)}, "
                     f"max |dy| = {mpmath.nstr(worst_y, 3)} <= tail {mpmath.nstr(min(r.tail_y for r in rows), 3)}")
    assert ok


def test_closed_form_values_are_consistent_with_the_system():
    # y'' + y + x^2 - C y^2 = 0 by a central difference at 256 bits
    with mpmath.workprec(256):
        tau = mpmath.mpc("0.3", "0.2")
        h = mpmath.mpf(10) ** -20
        y_at = lambda t: closed_form_values("8.1", t, 256)[1]  # noqa: E731
        x2, y = closed_form_values("8.1", tau, 256)
        ytt = (y_at(tau + h) - 2 * y + y_at(tau - h)) / h**2
        assert abs(ytt + y + x2 + mpmath.mpf(16) / 5 * y**2) < mpmath.mpf(10) ** -30


@pytest.mark.parametrize("which", ["8.1", "8.2"])
def test_closed_form_series_solves_the_system(which):
    assert check_system(closed_form_series(which, 12)).passed
