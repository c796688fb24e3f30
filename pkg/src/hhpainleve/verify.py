"""Independent checks of series solutions.

Everything here re-derives its claim from the equations of motion rather
than from the recursion: residuals of the second-order system, the y-only
fourth-order equation, the Hamiltonian, first-order reductions, expansions
of the trigonometric closed forms, parameter matching and a rigorous
coefficient-bound certificate for convergence.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import mpmath
import sympy

from .painleve import ParameterError, SystemParams
from .recursion import (C_CASE2, C_PUISEUX, SeriesSolution, generate_case2_series,
                        generate_puiseux_series)
from .scalar import QQ, QQI, AlgScalar, FieldError, NumberField, ParamPoly, Surd, alg_root, rat_str
from .series import PSeries, common_field

Number = Union[int, Fraction, AlgScalar]


class VerificationError(AssertionError):
    """A check failed; ``location`` names the first offending exponent or index."""

    def __init__(self, message: str, location=None):
        super().__init__(message)
        self.location = location


@dataclass
class Check:
    name: str
    passed: bool
    location: Optional[str] = None
    detail: Dict[str, object] = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"check": self.name, "passed": self.passed}
        if self.location is not None:
            out["first_failure"] = self.location
        if self.detail:
            out["detail"] = self.detail
        return out


# --------------------------------------------------------------------------
# small series helpers
# --------------------------------------------------------------------------

def _const_series(value, like: PSeries, order=None) -> PSeries:
    order = like.order if order is None else order
    if isinstance(value, ParamPoly):
        value = value.with_names(like.names)
    return PSeries(0, like.q, [value], order, like.names, like.field)


def _first_nonzero(s: PSeries, order=None) -> Optional[Fraction]:
    limit = s.order if order is None else Fraction(order)
    for e, c in s.terms():
        if e < limit and not c.is_zero():
            return e
    return None


# --------------------------------------------------------------------------
# residuals of the second-order system
# --------------------------------------------------------------------------

def residual_system(sol: SeriesSolution) -> Tuple[PSeries, PSeries]:
    """``x'' + lam*x + 2*x*y`` and ``y'' + y + x**2 - C*y**2`` as series."""
    x, y = sol.x, sol.y
    lam, C = sol.params.lam, sol.params.C
    r1 = x.diff(2) + x.scale(lam) + (x * y).scale(2)
    r2 = y.diff(2) + y + x * x - (y * y).scale(C)
    return r1, r2


def check_system(sol: SeriesSolution) -> Check:
    r1, r2 = residual_system(sol)
    for label, r in (("x-equation", r1), ("y-equation", r2)):
        if r.order <= r.base and not r.coeffs:
            continue
        e = _first_nonzero(r)
        if e is not None:
            return Check("residual_system", False, f"{label} at t^{rat_str(e)}",
                         {"coefficient": repr(r.coeff(e))})
    return Check("residual_system", True, detail={"order_x": rat_str(r1.order), "order_y": rat_str(r2.order)})


# --------------------------------------------------------------------------
# the y-only fourth-order equation
# --------------------------------------------------------------------------

@dataclass
class FourthOrder:
    """``y'''' = sum coeff * y**i * y_t**j * y_tt**k * H**h`` with coefficients in ``lam, C``."""

    terms: Dict[Tuple[int, int, int, int], sympy.Expr]

    def coefficient(self, i: int = 0, j: int = 0, k: int = 0, h: int = 0) -> sympy.Expr:
        return self.terms.get((i, j, k, h), sympy.Integer(0))

    def at(self, lam, C) -> Dict[Tuple[int, int, int, int], Fraction]:
        ls, cs = sympy.symbols("lam C")
        out = {}
        for mono, expr in self.terms.items():
            v = sympy.Rational(expr.subs({ls: sympy.Rational(str(lam)), cs: sympy.Rational(str(C))}))
            if v != 0:
                out[mono] = Fraction(int(v.p), int(v.q))
        return out

    def to_json(self) -> dict:
        names = ("y", "y_t", "y_tt", "H")
        out = {}
        for mono, expr in sorted(self.terms.items()):
            label = "*".join(f"{n}^{e}" if e > 1 else n for n, e in zip(names, mono) if e) or "1"
            out[label] = str(expr)
        return out


def derive_fourth_order() -> FourthOrder:
    """Eliminate ``x`` from the system using ``x**2 = C*y**2 - y - y_tt`` and the energy."""
    y, yt, ytt, H, lam, C = sympy.symbols("y y_t y_tt H lam C")
    w = C * y**2 - y - ytt                       # x**2
    xt2 = 2 * H - yt**2 - lam * w - y**2 - 2 * w * y + sympy.Rational(2, 3) * C * y**3
    x_xtt = -lam * w - 2 * w * y                 # x * x''
    # y'''' = (y'')'' = (-y - x**2 + C*y**2)''
    rhs = -ytt - 2 * (xt2 + x_xtt) + 2 * C * (yt**2 + y * ytt)
    poly = sympy.Poly(sympy.expand(rhs), y, yt, ytt, H)
    return FourthOrder({m: sympy.factor(c) for m, c in poly.terms()})


def residual_fourth_order(sol: SeriesSolution, H) -> PSeries:
    """``y'''' - F(y, y_t, y_tt, H)`` with ``F`` from :func:`derive_fourth_order`."""
    coeffs = derive_fourth_order().at(sol.params.lam, sol.params.C)
    y = sol.y
    h = H.value if isinstance(H, EnergyValue) else H
    derivs = {0: y, 1: y.diff(1), 2: y.diff(2)}
    total = y.diff(4)
    for (i, j, k, hp), c in coeffs.items():
        term = None
        for s, e in ((derivs[0], i), (derivs[1], j), (derivs[2], k)):
            for _ in range(e):
                term = s if term is None else term * s
        if hp:
            hs = _const_series(h, y, total.order)
            term = hs if term is None else term * hs
        if term is None:
            term = _const_series(1, y, total.order)
        total = total - term.scale(c)
    return total


# --------------------------------------------------------------------------
# energy
# --------------------------------------------------------------------------

@dataclass
class EnergyValue:
    value: ParamPoly
    order: Fraction

    def to_json(self) -> dict:
        return {"H": repr(self.value), "valid_below": rat_str(self.order)}


def hamiltonian_series(sol: SeriesSolution) -> PSeries:
    x, y = sol.x, sol.y
    lam, C = sol.params.lam, sol.params.C
    xt, yt = x.diff(1), y.diff(1)
    kin = xt * xt + yt * yt + (x * x).scale(lam) + y * y
    return kin.scale(Fraction(1, 2)) + x * x * y - (y * y * y).scale(C / 3)


def energy_series(sol: SeriesSolution) -> EnergyValue:
    """Constant term of the Hamiltonian after checking every other term cancels."""
    h = hamiltonian_series(sol)
    if h.order <= 0:
        raise VerificationError(f"series too short: the Hamiltonian is only valid below t^{rat_str(h.order)}")
    for e, c in h.terms():
        if e != 0 and not c.is_zero():
            raise VerificationError(f"Hamiltonian is not constant: t^{rat_str(e)} has {c!r}", rat_str(e))
    return EnergyValue(h.coeff(0), h.order)


# --------------------------------------------------------------------------
# first-order reductions
# --------------------------------------------------------------------------

Coef = Union[Fraction, AlgScalar, Surd, ParamPoly, None]


@dataclass
class FirstOrderCoeffs:
    A: Coef
    B: Coef
    C: Coef
    D: Coef
    G: Coef = None
    E: Coef = None
    variant: str = ""

    def to_json(self) -> dict:
        def show(v):
            if v is None:
                return None
            return rat_str(v) if isinstance(v, (int, Fraction)) else repr(v)
        return {"variant": self.variant, "A": show(self.A), "B": show(self.B), "C": show(self.C),
                "D": show(self.D), "G": show(self.G), "E": show(self.E)}


_FACTOR_C_LOW = "3*C**3 + 10*C**2 + 11*C + 4"
_FACTOR_C_HIGH = "3*C**5 + 22*C**4 + 60*C**3 + 78*C**2 + 49*C + 12"


def _vanishing_factor(poly_text: str, C: Fraction) -> Optional[str]:
    c = sympy.Symbol("C")
    _, factors = sympy.factor_list(sympy.sympify(poly_text, locals={"C": c}))
    for f, _ in factors:
        if f.subs(c, sympy.Rational(C.numerator, C.denominator)) == 0:
            return str(f)
    return None


def reduction_denominators() -> Dict[str, str]:
    c = sympy.Symbol("C")
    return {p: str(sympy.factor(sympy.sympify(p, locals={"C": c})))
            for p in ("C + 1", _FACTOR_C_LOW, _FACTOR_C_HIGH)}


def first_order_coeffs(p: SystemParams, H, variant: str) -> FirstOrderCoeffs:
    """Coefficients of ``y_t**2 = A y**3 + B y**2 + C y + D`` for the three printed variants."""
    lam, C = p.lam, p.C
    if variant == "4a":
        return FirstOrderCoeffs(Fraction(2, 3) * C, Fraction(-1), Fraction(0), H * 2, variant=variant)
    if variant == "4b'":
        return FirstOrderCoeffs(Fraction(-4, 3), Fraction(-1), Fraction(0), H * Fraction(16, 15),
                                variant=variant)
    if variant != "4b":
        raise ParameterError(f"unknown reduction variant {variant!r}")
    for text in ("C + 1", _FACTOR_C_LOW, _FACTOR_C_HIGH):
        bad = _vanishing_factor(text, C)
        if bad is not None:
            raise ParameterError(f"denominator factor {bad} vanishes at C = {rat_str(C)}")
    den_low = 3 * C**3 + 10 * C**2 + 11 * C + 4
    den_high = 4 * (3 * C**5 + 22 * C**4 + 60 * C**3 + 78 * C**2 + 49 * C + 12)
    A = Fraction(-4, 3)
    B = (1 - (C + 2) * lam) / (C + 1)
    Cc = -(3 * C**2 * lam**2 - 3 * C**2 * lam + 8 * C * lam**2 - 7 * C * lam - C + 4 * lam**2
           - 2 * lam - 2) / den_low
    rational = (-9 * C**3 * lam**3 + 6 * C**3 * lam**2 + 3 * C**3 * lam
                - 30 * C**2 * lam**3 + 13 * C**2 * lam**2 + 16 * C**2 * lam + C**2
                - 28 * C * lam**3 + 24 * C * lam + 4 * C
                - 8 * lam**3 - 4 * lam**2 + 8 * lam + 4)
    h_coeff = 24 * C**4 + 104 * C**3 + 168 * C**2 + 120 * C + 32
    D = H * (h_coeff / den_high) + rational / den_high
    return FirstOrderCoeffs(A, B, Cc, D, variant=variant)


def weierstrass_half_power_coeffs(sign: int = 1) -> FirstOrderCoeffs:
    """``y_t**2 + 32/15 y**3 + 4/9 y**2 +- (8i/sqrt(135)) y**(5/2) = 0`` written as a reduction."""
    g = Surd(QQI(Fraction(-8 * sign, 135)) * QQI.i(), 135)
    return FirstOrderCoeffs(Fraction(-32, 15), Fraction(-4, 9), Fraction(0), Fraction(0), G=g,
                            E=Fraction(0), variant="half-power" + ("+" if sign > 0 else "-"))


@dataclass
class FirstOrderResult:
    residual: PSeries
    fitted_D: Optional[ParamPoly]
    passed: bool
    location: Optional[str] = None

    def to_json(self) -> dict:
        out = {"passed": self.passed}
        if self.fitted_D is not None:
            out["fitted_D"] = repr(self.fitted_D)
        if self.location is not None:
            out["first_failure"] = self.location
        return out


def _is_zero_coef(c) -> bool:
    if c is None:
        return True
    if isinstance(c, Surd):
        return c.is_zero()
    if isinstance(c, ParamPoly):
        return c.is_zero()
    return c == 0


def _half_power_term(y: PSeries, coef, power: int, sign: int) -> PSeries:
    """``coef * y**(power + 1/2)`` with ``sqrt(y) = sign * sqrt(lead) * tau**(beta/2) * ...``."""
    lead = y._lead_scalar()
    beta = y.base
    if not lead.is_rational():
        root = y.sqrt("+" if sign > 0 else "-")
        k = coef.to_field(root.field) if isinstance(coef, Surd) else coef
        out = root
        for _ in range(power):
            out = out * y
        return out.scale(k)
    l = lead.to_fraction()
    u = y.scale(1 / l).shift(-beta)
    s = u.sqrt(root=u.field.one())
    surd = coef if isinstance(coef, Surd) else Surd(coef, 1)
    k = (surd * Surd(sign, l)).to_field(y.field)
    out = s.shift(beta / 2)
    for _ in range(power):
        out = out * y
    return out.scale(k)


def residual_first_order(y: PSeries, c: FirstOrderCoeffs, branch: int = 1) -> FirstOrderResult:
    """``y_t**2 - (A y**3 + B y**2 + C y + D + G y**(5/2) + E y**(3/2))``.

    With ``c.D is None`` the residual may be any constant, which is returned
    as the fitted ``D``.  ``branch`` (+1/-1) picks the sign of ``sqrt(y)``.
    """
    yt = y.diff(1)
    r = yt * yt
    if not _is_zero_coef(c.A):
        r = r - (y * y * y).scale(c.A)
    if not _is_zero_coef(c.B):
        r = r - (y * y).scale(c.B)
    if not _is_zero_coef(c.C):
        r = r - y.scale(c.C)
    if not _is_zero_coef(c.G):
        r = r - _half_power_term(y, c.G, 2, branch)
    if not _is_zero_coef(c.E):
        r = r - _half_power_term(y, c.E, 1, branch)
    fitted = None
    if c.D is None:
        fitted = r.coeff(0)
        r = r - _const_series(fitted, r)
    elif not _is_zero_coef(c.D):
        r = r - _const_series(c.D, r)
    e = _first_nonzero(r)
    loc = None if e is None else f"t^{rat_str(e)}"
    return FirstOrderResult(r, fitted, e is None, loc)


# --------------------------------------------------------------------------
# sampled consistency of the reductions with the system
# --------------------------------------------------------------------------

def _reduction_identities(lam: Fraction, C: Fraction, H: Fraction, c: FirstOrderCoeffs
                          ) -> Dict[str, sympy.Poly]:
    """Polynomials in ``y`` that vanish when the reduction is consistent with the system."""
    y = sympy.Symbol("y")
    R = sympy.Rational
    q = lambda v: R(v.numerator, v.denominator)  # noqa: E731
    Q = q(c.A) * y**3 + q(c.B) * y**2 + q(c.C) * y + q(c.D)     # y_t**2
    Qp = sympy.diff(Q, y)
    ytt = Qp / 2
    w = q(C) * y**2 - y - ytt                                    # x**2
    wp, wpp = sympy.diff(w, y), sympy.diff(w, y, 2)
    lam_, C_, H_ = q(lam), q(C), q(H)
    # x'' = -lam x - 2 x y  <=>  2 w w_tt = w_t**2 - 4 lam w**2 - 8 y w**2
    motion = 2 * w * (wpp * Q + wp * Qp / 2) - wp**2 * Q + 4 * lam_ * w**2 + 8 * y * w**2
    # energy multiplied by 4 w
    energy = (wp**2 * Q + 4 * w * Q + 4 * lam_ * w**2 + 4 * w * y**2 + 8 * w**2 * y
              - R(8, 3) * C_ * w * y**3 - 8 * w * H_)
    return {"x-equation": sympy.Poly(sympy.expand(motion), y),
            "energy": sympy.Poly(sympy.expand(energy), y),
            "x-squared": sympy.Poly(sympy.expand(w), y)}


def _sample_rational(rng: random.Random, lo: int = -6, hi: int = 6, den: int = 4) -> Fraction:
    return Fraction(rng.randint(lo * den, hi * den), rng.randint(1, den))


def reduction_locus(lam: Fraction, C: Fraction) -> bool:
    """True where the cubic reduction with free ``H`` is consistent with the system.

    With the printed coefficients every identity holds except the ``y**0``
    terms, which carry the factor ``(C + 2)*(lam - 1)*(C*lam + C + 2)``.
    """
    return (C + 2) * (lam - 1) * (C * lam + C + 2) == 0


def _admissible(C: Fraction) -> bool:
    return C != 0 and not any(_vanishing_factor(t, C) for t in ("C + 1", _FACTOR_C_LOW, _FACTOR_C_HIGH))


def consistency_sample(variant: str = "4b", samples: int = 8, seed: int = 0,
                       points: Optional[Sequence[Tuple[Fraction, Fraction, Fraction]]] = None) -> List[Check]:
    """Check the reduction against the system at rational ``(lam, C, H)``.

    Random points for the cubic reduction are drawn on the locus
    ``lam = 1`` or ``C*(lam + 1) = -2`` where ``H`` stays free; the primed
    variant only exists at ``lam = 1, C = -9/8`` so only ``H`` is drawn.
    Explicit ``points`` are checked as given.
    """
    rng = random.Random(seed)
    todo = [tuple(Fraction(v) for v in pt) for pt in (points or [])]
    while len(todo) < samples:
        lam, C, H = _sample_rational(rng), _sample_rational(rng), _sample_rational(rng)
        if variant == "4b'":
            lam, C = Fraction(1), Fraction(-9, 8)
        if variant == "4b":
            if rng.random() < 0.5:
                lam = Fraction(1)
            elif lam != -1:
                C = Fraction(-2) / (lam + 1)
            else:
                continue
        if not _admissible(C):
            continue
        todo.append((lam, C, H))
    out = []
    for lam, C, H in todo:
        c = first_order_coeffs(SystemParams(lam, C), H, variant)
        ids = _reduction_identities(lam, C, H, c)
        names = ("x-squared", "energy") if variant == "4a" else ("x-equation", "energy")
        detail = {"lambda": rat_str(lam), "C": rat_str(C), "H": rat_str(H)}
        if variant == "4b":
            detail["on_free_energy_locus"] = reduction_locus(lam, C)
        failure = None
        for name in names:
            poly = ids[name]
            if not poly.is_zero:
                deg, coeff = max(poly.terms())
                failure = f"{name}: y^{deg[0]} coefficient {coeff}"
                break
        out.append(Check(f"consistency[{variant}]", failure is None, failure, detail))
    return out


# --------------------------------------------------------------------------
# closed-form trigonometric solutions
# --------------------------------------------------------------------------

CLOSED_FORMS = ("8.1", "8.2")


def _sqrt2() -> AlgScalar:
    root, _ = alg_root(Fraction(2), 2)
    return root


def _trig_series(N: int, field: NumberField) -> Tuple[PSeries, PSeries]:
    """``cos(tau/3)`` and ``sin(tau/3)`` valid below ``tau**N``."""
    cos_c, sin_c = [], []
    for k in range(N):
        v = Fraction(1, 3**k * math.factorial(k))
        if k % 2 == 0:
            cos_c.append(v * (-1) ** (k // 2))
            sin_c.append(0)
        else:
            cos_c.append(0)
            sin_c.append(v * (-1) ** (k // 2))
    return (PSeries(0, 1, [field(c) for c in cos_c], N, (), field),
            PSeries(0, 1, [field(c) for c in sin_c], N, (), field))


def closed_form_sin(which: str) -> Tuple[Fraction, Fraction]:
    """``(sin u_s, sign)`` where ``u_s`` is the expansion point; ``cos u_s = -2*sqrt(2)/3``."""
    if which == "8.1":
        return Fraction(1, 3), 1
    if which == "8.2":
        return Fraction(-1, 3), -1
    raise ParameterError(f"unknown closed form {which!r}; choose from {CLOSED_FORMS}")


def closed_form_series(which: str = "8.1", N: int = 8) -> SeriesSolution:
    """Laurent expansion of a closed form about its pole, through ``y`` at ``tau**N``.

    ``u = (t - t0)/3 = u_s + tau/3`` with ``sin u_s = +-1/3`` and
    ``cos u_s = -2*sqrt(2)/3``; the sine addition formula keeps everything in
    ``Q(sqrt 2)``.  ``x`` is the square root of ``x**2`` with the principal
    leading coefficient.
    """
    s0, sign = closed_form_sin(which)
    r2 = _sqrt2()
    K = r2.field
    c0 = r2 * Fraction(-2, 3)
    M = N + 4
    cos_s, sin_s = _trig_series(M, K)
    sin_u = cos_s.scale(K(s0)) + sin_s.scale(c0)            # sin(u_s + tau/3)
    one = PSeries(0, 1, [K.one()], M, (), K)
    den = one + sin_u.scale(-3 * sign)                      # 1 -+ 3 sin u, a simple zero at tau = 0
    num = one + sin_u.scale(-sign)                          # 1 -+ sin u
    den_inv = den.inv()
    y = (den_inv * den_inv).scale(Fraction(-5, 3)).truncate(N + 1)
    x2 = (num * den_inv * den_inv * den_inv).scale(Fraction(25, 9)).truncate(N)
    x = x2.sqrt("+")
    params = SystemParams(Fraction(1, 9), C_CASE2)
    meta = {"family": "closed-form", "closed_form": which, "order_index": N,
            "expansion_point": {"sin_u": rat_str(s0), "cos_u": "-2*sqrt(2)/3",
                                "t_s": f"t0 + 3*{'(pi - asin(1/3))' if sign > 0 else '(pi + asin(1/3))'}"},
            "alpha": "-3/2", "grid": 1}
    return SeriesSolution(x, y, params, (), {}, f"closed-form-{which}", meta)


def closed_form_values(which: str, tau, prec: int = 256) -> Tuple[mpmath.mpc, mpmath.mpc]:
    """``(x**2, y)`` of the closed form at ``tau`` measured from its pole."""
    s0, sign = closed_form_sin(which)
    with mpmath.workprec(prec + 20):
        tau = mpmath.mpc(tau)
        c0 = -2 * mpmath.sqrt(2) / 3
        su = mpmath.mpf(s0.numerator) / s0.denominator * mpmath.cos(tau / 3) + c0 * mpmath.sin(tau / 3)
        den = 1 - 3 * sign * su
        y = -mpmath.mpf(5) / (3 * den**2)
        x2 = 25 * (1 - sign * su) / (9 * den**3)
    with mpmath.workprec(prec):
        return +x2, +y


def closed_form_pole(which: str, t0=0, prec: int = 256) -> mpmath.mpf:
    """Real pole ``t_s`` with ``(t_s - t0)/3 = u_s``."""
    _, sign = closed_form_sin(which)
    with mpmath.workprec(prec):
        u = mpmath.pi - mpmath.asin(mpmath.mpf(1) / 3) if sign > 0 else mpmath.pi + mpmath.asin(mpmath.mpf(1) / 3)
        return mpmath.mpf(t0) + 3 * u


@dataclass
class NumericComparison:
    tau: mpmath.mpc
    dx: mpmath.mpf
    dy: mpmath.mpf
    tail_x: mpmath.mpf
    tail_y: mpmath.mpf

    @property
    def passed(self) -> bool:
        return self.dx <= self.tail_x and self.dy <= self.tail_y


def compare_closed_form(sol: SeriesSolution, which: str, taus: Sequence, prec: int = 256,
                        bindings: Optional[Mapping] = None) -> List[NumericComparison]:
    """Series values against direct closed-form evaluation at each ``tau``."""
    out = []
    for tau in taus:
        xs, tx = sol.x.eval(tau, bindings, prec)
        ys, ty = sol.y.eval(tau, bindings, prec)
        x2, yc = closed_form_values(which, tau, prec)
        with mpmath.workprec(prec):
            xc = mpmath.sqrt(x2)
            if abs(xs - xc) > abs(xs + xc):
                xc = -xc
            out.append(NumericComparison(mpmath.mpc(tau), abs(xs - xc), abs(ys - yc), tx, ty))
    return out


# --------------------------------------------------------------------------
# parameter matching
# --------------------------------------------------------------------------

@dataclass
class MatchResult:
    bindings: Dict[str, AlgScalar]
    passed: bool
    order: Fraction
    location: Optional[str] = None

    def to_json(self) -> dict:
        out = {"passed": self.passed, "bindings": {k: str(v) for k, v in sorted(self.bindings.items())},
               "checked_below": rat_str(self.order)}
        if self.location is not None:
            out["first_failure"] = self.location
        return out


def _exponent_of(sol: SeriesSolution, step: int, comp: str) -> Fraction:
    alpha = Fraction(sol.meta.get("alpha", rat_str(sol.x.base)))
    q = int(sol.meta.get("grid", sol.x.q))
    return (alpha if comp == "x" else Fraction(-2)) + Fraction(step, q)


def match_parameters(family: SeriesSolution, target: SeriesSolution) -> MatchResult:
    """Values of the family's free parameters that reproduce ``target``.

    Each parameter enters linearly at its resonance position, so they are
    solved one at a time in step order; all other coefficients must then
    agree exactly.
    """
    registry = family.meta.get("registry", {})
    pending = sorted(((v["step"], name, v["component"]) for name, v in registry.items()
                      if name not in family.bindings), key=lambda t: t[0])
    try:
        f = common_field(family.field, target.field)
    except FieldError as exc:
        raise VerificationError(f"coefficients live in unrelated fields: {exc}") from exc
    fx, fy = family.x.lift(f), family.y.lift(f)
    tx, ty = target.x.lift(f), target.y.lift(f)
    if fx.base != tx.base or fy.base != ty.base:
        raise VerificationError("leading behaviours differ", f"x: {fx.base} vs {tx.base}")
    found: Dict[str, AlgScalar] = {}
    for step, name, comp in pending:
        e = _exponent_of(family, step, comp)
        src, tgt = (fx, tx) if comp == "x" else (fy, ty)
        if e >= min(src.order, tgt.order):
            raise VerificationError(f"{name} lies beyond the common truncation order", rat_str(e))
        coef, rest = src.coeff(e).substitute(found).linear_part(name)
        if not coef.is_constant() or coef.is_zero():
            raise VerificationError(f"{name} does not enter its resonance position linearly", rat_str(e))
        want = tgt.coeff(e)
        diff = want.with_names(rest.names) - rest
        if not diff.is_constant():
            raise VerificationError(f"cannot solve for {name}: other parameters remain", rat_str(e))
        found[name] = f.coerce(diff.constant()) / f.coerce(coef.constant())
    sx = fx.substitute(found, drop_bound=True)
    sy = fy.substitute(found, drop_bound=True)
    order = min(sy.order, ty.order)
    for label, a, b in (("x", sx, tx), ("y", sy, ty)):
        d = a.first_difference(b)
        if d is not None:
            return MatchResult(found, False, order, f"{label} at t^{rat_str(d)}")
    return MatchResult(found, True, order)


# --------------------------------------------------------------------------
# convergence certificate
# --------------------------------------------------------------------------

_GRAIN = 2 ** 64


def _round_up(v: Fraction) -> Fraction:
    return Fraction(-((-v.numerator * _GRAIN) // v.denominator), _GRAIN)


def _abs_up(v, prec: int = 128) -> Fraction:
    if isinstance(v, ParamPoly):
        v = v.constant()
    if isinstance(v, AlgScalar):
        return v.abs_upper(prec)
    return abs(Fraction(v))


@dataclass
class ConvergenceCert:
    granted: bool
    threshold_N: Optional[int]
    lam_abs: Fraction
    c1_abs_upper: Fraction
    parameter_bounds: Dict[str, Fraction]
    verified_range: Tuple[int, int]
    exact_range: Tuple[int, int]
    max_magnitude: Dict[str, Fraction]
    exceptions: List[Dict[str, str]]
    tail_proven: bool
    ring: Dict[str, str]
    index_label: str
    reason: Optional[str] = None
    reference_bound_check: Optional[Dict[str, object]] = None

    def to_json(self) -> dict:
        return {
            "granted": self.granted,
            "threshold_N": self.threshold_N,
            "bound_constants": {"abs_lambda": rat_str(self.lam_abs),
                                "abs_c1_upper": f"{float(self.c1_abs_upper):.17g}"},
            "parameter_bounds": {k: rat_str(v) for k, v in sorted(self.parameter_bounds.items())},
            "verified_index_range": list(self.verified_range),
            "exact_index_range": list(self.exact_range),
            "index": self.index_label,
            "max_magnitude": {k: f"{float(v):.17g}" for k, v in self.max_magnitude.items()},
            "exceptions": self.exceptions,
            "tail_proven": self.tail_proven,
            "ring": self.ring,
            "reason": self.reason,
            "reference_bound_check": self.reference_bound_check,
        }


def index_threshold(lam: Fraction, c1_abs: Fraction) -> int:
    """``max(8, ceil(1 + sqrt(|lam| + 2|c1| + 7)))`` from a rational upper bound on ``|c1|``."""
    v = abs(lam) + 2 * c1_abs + 7
    r = math.isqrt(v.numerator // v.denominator)
    while Fraction((r + 1) ** 2) <= v:
        r += 1
    root_ceil = r if Fraction(r * r) >= v else r + 1
    return max(8, 1 + root_ceil)


def case2_index_bounds(lam: Fraction, c1_abs: Fraction, k: int) -> Tuple[Fraction, Fraction]:
    """Bounds on ``|a_k|, |b_k|`` given all earlier coefficients are at most 1 in magnitude.

    From the k-th step of the C = -16/5 recursion: ``(k**2 - 4) a_k`` collects
    ``lam a_{k-2}`` plus ``k + 1`` products and ``2 c1 b_k``; ``(k**2 - k - 12) b_k``
    collects ``b_{k-2}``, the ``x**2`` sum and ``k + 1`` products times ``|C|``.
    """
    C = abs(C_CASE2)
    b = (1 + 2 * c1_abs + k + C * (k + 1)) / (k * k - k - 12)
    a = (abs(lam) + 2 * (k + 1) + 2 * c1_abs * max(b, 1)) / abs(k * k - 4)
    return a, b


def printed_case2_bounds(lam: Fraction, c1_abs: Fraction, k: int) -> Tuple[Fraction, Fraction]:
    return (Fraction(2 * k + 2) + abs(lam) + 2 * c1_abs) / abs(k * k - 4), Fraction(21 * (k + 2), 5 * (k * k - k - 12))


def _poly_nonneg_from(coeffs: List[Fraction], start: int) -> bool:
    """True if ``sum c_i s**i >= 0`` for all integers ``s >= start`` (shifted coefficient test)."""
    u = sympy.Symbol("u")
    expr = sum(sympy.Rational(c.numerator, c.denominator) * (u + start) ** i for i, c in enumerate(coeffs))
    poly = sympy.Poly(sympy.expand(expr), u)
    return all(c >= 0 for c in poly.all_coeffs())


def _padd(a, b):
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]


def _pmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _pscale(a, c):
    return [x * c for x in a]


def convergence_certificate(sol: SeriesSolution, bounds: Optional[Mapping[str, Fraction]] = None,
                            horizon: int = 200, epsilon: Fraction = Fraction(1, 100),
                            allow_exceptions: bool = False, prec: int = 128) -> ConvergenceCert:
    """Certify ``|coefficient| <= 1`` beyond a finite set, hence convergence for ``0 < |tau| <= 1 - eps``.

    Three ranges of grid steps ``s``:

    * exact: every stored coefficient is bounded over the parameter polydisc;
    * inductive: ``s`` up to the horizon, magnitudes propagated through the
      recursion with Cramer's rule and outward rounding;
    * tail: for all larger ``s`` an inequality between polynomials in ``s``
      shows a bound of 1 reproduces itself.
    """
    meta = sol.meta
    bounds = {k: Fraction(v) for k, v in (bounds or {}).items()}
    for n in sol.free_parameters:
        bounds.setdefault(n, Fraction(1))
    lam, C = sol.params.lam, sol.params.C
    alpha = Fraction(meta.get("alpha", rat_str(sol.x.base)))
    q = int(meta.get("grid", sol.x.q))
    style = meta.get("family", "")
    offset = {"case2": 2, "puiseux": 4}.get(style, 0)
    index_label = {"case2": "k = s - 2", "puiseux": "n = s - 4"}.get(style, "s")
    S = int(meta.get("steps", 0))
    a_lead = sol.x.coeff(alpha)
    b_lead = sol.y.coeff(-2)
    if not a_lead.is_constant() or not b_lead.is_constant():
        raise ParameterError("leading coefficients must be parameter-free")
    a_abs = _abs_up(a_lead, prec)
    b = b_lead.constant()
    b = b.to_fraction() if isinstance(b, AlgScalar) else Fraction(b)
    shift = int(q * (2 * alpha + 4))
    c1_abs = a_abs if style == "case2" else Fraction(0)
    N = index_threshold(lam, c1_abs) if style == "case2" else None
    if style == "case2":
        K_steps = max(horizon, N) + offset
    else:
        K_steps = horizon + offset
    # -- exact range ---------------------------------------------------------------
    MA = [a_abs]
    MB = [abs(b)]
    exceptions: List[Dict[str, str]] = []
    for s in range(1, S + 1):
        ax = sol.x.coeff(alpha + Fraction(s, q)).sup_bound(bounds, prec)
        by = sol.y.coeff(Fraction(-2) + Fraction(s, q)).sup_bound(bounds, prec)
        MA.append(_round_up(ax) if ax else ax)
        MB.append(_round_up(by) if by else by)
        for comp, v in (("x", ax), ("y", by)):
            if v > 1:
                exceptions.append({"component": comp, "index": str(s - offset),
                                   "exponent": rat_str((alpha if comp == "x" else -2) + Fraction(s, q)),
                                   "bound": f"{float(v):.17g}"})
    reason = None
    regs = [v["step"] for v in meta.get("registry", {}).values()]
    if regs and max(regs) > S:
        raise ParameterError("the stored series stops before its last resonance")
    # -- inductive range -------------------------------------------------------------
    a2 = Fraction(0)
    if alpha == -2:
        # the off-diagonal product enters the determinant; it is rational for this balance
        sq = a_lead.constant() * a_lead.constant()
        a2 = sq.to_fraction() if isinstance(sq, AlgScalar) else Fraction(sq)
    m12 = 2 * a_abs
    m21 = 2 * a_abs if alpha == -2 else Fraction(0)

    def entries(s):
        r = Fraction(s, q)
        m11 = (alpha + r) * (alpha + r - 1) + 2 * b
        m22 = (r - 2) * (r - 3) - 2 * C * b
        det = m11 * m22 - (4 * a2 if alpha == -2 else 0)
        return m11, m22, det

    def rhs_bounds(s):
        r1 = (abs(lam) * MA[s - 2 * q] if s - 2 * q >= 0 else 0) + 2 * sum(MA[i] * MB[s - i] for i in range(1, s))
        r2 = MB[s - 2 * q] if s - 2 * q >= 0 else Fraction(0)
        m = s - shift
        if m >= 0:
            if shift == 0:
                r2 += sum(MA[i] * MA[m - i] for i in range(1, m))
            else:
                r2 += sum(MA[i] * MA[m - i] for i in range(0, m + 1))
        r2 += abs(C) * sum(MB[i] * MB[s - i] for i in range(1, s))
        return r1, r2

    middle_max = Fraction(0)
    bad_step = None
    for s in range(S + 1, K_steps + 1):
        m11, m22, det = entries(s)
        if det == 0:
            raise ParameterError(f"unexpected resonance at step {s}")
        r1, r2 = rhs_bounds(s)
        xa = (abs(m22) * r1 + m12 * r2) / abs(det)
        yb = (m21 * r1 + abs(m11) * r2) / abs(det)
        xa, yb = _round_up(xa), _round_up(yb)
        MA.append(xa)
        MB.append(yb)
        middle_max = max(middle_max, xa, yb)
        if bad_step is None and (xa > 1 or yb > 1):
            bad_step = s
    if bad_step is not None:
        reason = f"inductive bound exceeds 1 at index {bad_step - offset}"
    # -- tail --------------------------------------------------------------------------
    tail_ok = False
    if bad_step is None:
        low = [i for i in range(1, K_steps + 1) if MA[i] > 1 or MB[i] > 1]
        if low and max(low) * 2 >= K_steps:
            reason = "horizon too short relative to the exceptional indices"
        else:
            EA = sum((MA[i] - 1 for i in range(1, K_steps + 1) if MA[i] > 1), Fraction(0))
            EB = sum((MB[i] - 1 for i in range(1, K_steps + 1) if MB[i] > 1), Fraction(0))
            # upper bounds of R1, R2 as polynomials in s, valid for s > K_steps
            R1 = [abs(lam) + 2 * (-1 + EA + EB), Fraction(2)]
            if shift == 0:
                X = [Fraction(-1) + 2 * EA, Fraction(1)]
            else:
                X = [2 * a_abs + Fraction(-1 - shift) + 2 * EA, Fraction(1)]
            R2 = _padd([Fraction(1)], _padd(X, [abs(C) * (-1 + 2 * EB), abs(C)]))
            s = sympy.Symbol("s")
            r = s / q
            m11 = sympy.expand((sympy.Rational(alpha.numerator, alpha.denominator) + r)
                               * (sympy.Rational(alpha.numerator, alpha.denominator) + r - 1)
                               + 2 * sympy.Rational(b.numerator, b.denominator))
            m22 = sympy.expand((r - 2) * (r - 3) - 2 * sympy.Rational(C.numerator, C.denominator)
                               * sympy.Rational(b.numerator, b.denominator))
            det = sympy.expand(m11 * m22 - (4 * sympy.Rational(a2.numerator, a2.denominator) if alpha == -2 else 0))

            def coeffs(expr):
                p = sympy.Poly(expr, s)
                return [Fraction(int(c.p), int(c.q)) for c in reversed(p.all_coeffs())]

            P11, P22, PD = coeffs(m11), coeffs(m22), coeffs(det)
            start = K_steps + 1
            positive = all(_poly_nonneg_from(P, start) and _poly_nonneg_from(_padd(P, [-Fraction(1, _GRAIN)]), start)
                           for P in (P11, P22, PD))
            m12_up = _round_up(m12)
            m21_up = _round_up(m21) if m21 else Fraction(0)
            ineq_x = _padd(PD, _pscale(_padd(_pmul(P22, R1), _pscale(R2, m12_up)), -1))
            ineq_y = _padd(PD, _pscale(_padd(_pscale(R1, m21_up), _pmul(P11, R2)), -1))
            tail_ok = positive and _poly_nonneg_from(ineq_x, start) and _poly_nonneg_from(ineq_y, start)
            if not tail_ok:
                reason = "tail inequality not established at the horizon"
    granted = tail_ok and bad_step is None and (allow_exceptions or not exceptions)
    if not granted and reason is None and exceptions:
        first = exceptions[0]
        reason = f"coefficient bound exceeds 1 at index {first['index']} ({first['component']})"
    maxima = {"exact": max([max(MA[1:S + 1] or [0]), max(MB[1:S + 1] or [0])]),
              "inductive": middle_max}
    with mpmath.workprec(64):
        one_minus = 1 - mpmath.mpf(epsilon.numerator) / epsilon.denominator
        comp = 1 / (1 - mpmath.root(one_minus, q))
    ring = {"inner": "0", "outer": f"1 - {rat_str(epsilon)}", "epsilon": rat_str(epsilon),
            "comparison_constant": (rat_str(1 / epsilon) if q == 1 else
                                    f"1/(1 - (1 - {rat_str(epsilon)})^(1/{q})) ~ {mpmath.nstr(comp, 12)}")}
    reference = None
    if style == "case2":
        rows = []
        ok = True
        for k in range(N + 1, max(horizon, N) + 1):
            pa, pb = printed_case2_bounds(lam, c1_abs, k)
            da, db = case2_index_bounds(lam, c1_abs, k)
            if max(pa, pb, da, db) > 1:
                ok = False
                rows.append(k)
        reference = {"indices": [N + 1, max(horizon, N)], "printed_and_derived_at_most_one": ok,
                     "violations": rows[:10]}
    return ConvergenceCert(granted, N, abs(lam), c1_abs, bounds, (1 - offset, K_steps - offset),
                           (1 - offset, S - offset), maxima, exceptions, tail_ok, ring, index_label,
                           None if granted else reason, reference)


def extend_solution(sol: SeriesSolution, N: int) -> SeriesSolution:
    """Regenerate a known family to coefficient index ``N`` with the same branch and bindings."""
    fam = sol.meta.get("family")
    if fam == "case2":
        return generate_case2_series(sol.params.lam, sol.branch, sol.bindings or None, N=N)
    if fam == "puiseux":
        sign = -1 if sol.branch.endswith("minus") else 1
        return generate_puiseux_series(sol.params.lam, sign, sol.bindings or None, N=N)
    raise ParameterError(f"cannot extend a solution of family {fam!r}")


# --------------------------------------------------------------------------
# bundled checks
# --------------------------------------------------------------------------

def verify_solution(sol: SeriesSolution, against: Optional[str] = None) -> List[Check]:
    """Residual, energy, fourth-order, sign-symmetry and optional closed-form checks."""
    checks = [check_system(sol)]
    neg = check_system(sol.negate_x())
    checks.append(Check("x_to_minus_x", neg.passed, neg.location))
    try:
        H = energy_series(sol)
        checks.append(Check("energy_constant", True, detail={"H": repr(H.value)}))
        r4 = residual_fourth_order(sol, H)
        e = _first_nonzero(r4)
        checks.append(Check("fourth_order", e is None, None if e is None else f"t^{rat_str(e)}"))
    except VerificationError as exc:
        checks.append(Check("energy_constant", False, str(exc.location), {"message": str(exc)}))
    if against:
        which = against.replace("closed-form-", "")
        N = int(sol.meta.get("order_index", 4))
        target = closed_form_series(which, N)
        m = match_parameters(sol, target)
        checks.append(Check(f"match[{against}]", m.passed, m.location, m.to_json()))
    return checks
