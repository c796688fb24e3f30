"""Truncated generalized power series in ``tau = t - t0``.

A :class:`PSeries` stores coefficients for the exponents
``base, base + 1/q, base + 2/q, ...`` strictly below ``order``.  Coefficients
are :class:`~hhpainleve.scalar.ParamPoly` values over one number field, so
series may carry free parameters symbolically.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import mpmath

from .scalar import (QQ, AlgScalar, FieldError, NumberField, ParamPoly, alg_root, embed,
                     number_field, parse_rat, rat_str)

Scalar = Union[int, Fraction, AlgScalar]


class SeriesError(ValueError):
    """Raised when a series operation is undefined (e.g. root of a parametric lead)."""


def common_field(*fields: NumberField) -> NumberField:
    """Smallest of the given fields that contains all the others."""
    best = fields[0]
    for f in fields[1:]:
        if best.contains(f):
            continue
        if f.contains(best):
            best = f
            continue
        raise FieldError(f"no common field for {best!r} and {f!r}")
    return best


def _field_of(value) -> NumberField:
    if isinstance(value, AlgScalar):
        return value.field
    if isinstance(value, ParamPoly):
        fields = [c.field for c in value.terms.values() if isinstance(c, AlgScalar)]
        return common_field(*fields) if fields else QQ
    return QQ


def _to_field(p: ParamPoly, field: NumberField) -> ParamPoly:
    out = ParamPoly(p.names)
    out.terms = {m: field.coerce(c) for m, c in p.terms.items()}
    return out


class PSeries:
    """Truncated series ``sum_k c_k tau**(base + k/q)`` valid for exponents < ``order``."""

    __slots__ = ("base", "q", "coeffs", "order", "t0", "names", "field")

    def __init__(self, base, q: int, coeffs: Sequence, order, names: Sequence[str] = (),
                 field: Optional[NumberField] = None, t0=0):
        if q not in (1, 2):
            raise ValueError("grid denominator must be 1 or 2")
        base = Fraction(base)
        order = Fraction(order)
        if (base * 2).denominator != 1:
            raise ValueError("base exponent must be a multiple of 1/2")
        names = tuple(names)
        polys = [c if isinstance(c, ParamPoly) else ParamPoly.const(c, names) for c in coeffs]
        polys = [p.with_names(names) if p.names != names else p for p in polys]
        if field is None:
            fields = [_field_of(p) for p in polys] or [QQ]
            field = common_field(*fields)
        polys = [_to_field(p, field) for p in polys]
        # drop coefficients at or beyond the truncation order
        keep = 0
        while keep < len(polys) and base + Fraction(keep, q) < order:
            keep += 1
        polys = polys[:keep]
        # strip leading zeros so that the first coefficient is nonzero
        lead = 0
        while lead < len(polys) and polys[lead].is_zero():
            lead += 1
        if lead == len(polys):
            polys = []
            if base >= order:
                base = order - 1
        else:
            polys = polys[lead:]
            base = base + Fraction(lead, q)
        # trailing zeros carry no information
        while polys and polys[-1].is_zero():
            polys.pop()
        self.base = base
        self.q = q
        self.coeffs: List[ParamPoly] = polys
        self.order = order
        self.t0 = t0
        self.names = names
        self.field = field

    # -- basic views -----------------------------------------------------------
    @classmethod
    def zero(cls, order, q: int = 1, names: Sequence[str] = (), field: Optional[NumberField] = None,
             base=None) -> "PSeries":
        base = Fraction(order) - 1 if base is None else base
        return cls(base, q, [], order, names, field)

    @classmethod
    def monomial(cls, coeff, exponent, order, names: Sequence[str] = (), q: int = 1,
                 field: Optional[NumberField] = None) -> "PSeries":
        exponent = Fraction(exponent)
        if (exponent * q).denominator != 1 and q == 1:
            q = 2
        return cls(exponent, q, [coeff], order, names, field)

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def valuation(self) -> Fraction:
        """Exponent of the leading stored coefficient (``order`` for the zero series)."""
        return self.base if self.coeffs else self.order

    def exponent(self, k: int) -> Fraction:
        return self.base + Fraction(k, self.q)

    def terms(self) -> List[Tuple[Fraction, ParamPoly]]:
        return [(self.exponent(k), c) for k, c in enumerate(self.coeffs) if not c.is_zero()]

    def coeff(self, exponent) -> ParamPoly:
        """Coefficient at ``exponent`` (zero off the stored range)."""
        exponent = Fraction(exponent)
        if exponent >= self.order:
            raise SeriesError(f"exponent {exponent} is beyond the truncation order {self.order}")
        k = (exponent - self.base) * self.q
        if k.denominator != 1 or k < 0 or k >= len(self.coeffs):
            return ParamPoly(self.names)
        return self.coeffs[int(k)]

    def lead(self) -> ParamPoly:
        if not self.coeffs:
            raise SeriesError("zero series has no leading coefficient")
        return self.coeffs[0]

    def __repr__(self):
        shown = ", ".join(f"[{rat_str(e)}]: {c!r}" for e, c in self.terms()[:4])
        more = " ..." if len(self.coeffs) > 4 else ""
        return f"PSeries({shown}{more}; O(τ^{rat_str(self.order)}))"

    # -- alignment -------------------------------------------------------------
    def refine(self, q: int) -> "PSeries":
        if q == self.q:
            return self
        if q % self.q:
            raise ValueError("can only refine to a multiple of the grid denominator")
        step = q // self.q
        coeffs = []
        for k, c in enumerate(self.coeffs):
            coeffs.append(c)
            if k + 1 < len(self.coeffs):
                coeffs.extend(ParamPoly(self.names) for _ in range(step - 1))
        return PSeries(self.base, q, coeffs, self.order, self.names, self.field, self.t0)

    def lift(self, field: NumberField) -> "PSeries":
        if field is self.field:
            return self
        return PSeries(self.base, self.q, [_to_field(c, field) for c in self.coeffs], self.order,
                       self.names, field, self.t0)

    def with_names(self, names: Sequence[str]) -> "PSeries":
        names = tuple(names)
        if names == self.names:
            return self
        return PSeries(self.base, self.q, [c.with_names(names) for c in self.coeffs], self.order,
                       names, self.field, self.t0)

    def truncate(self, order) -> "PSeries":
        order = min(Fraction(order), self.order)
        return PSeries(self.base, self.q, self.coeffs, order, self.names, self.field, self.t0)

    def _grid_with(self, other: "PSeries") -> int:
        q = max(self.q, other.q)
        if ((self.base - other.base) * q).denominator != 1:
            q = 2
        return q

    def _common(self, other: "PSeries") -> Tuple["PSeries", "PSeries"]:
        names = self.names if self.names else other.names
        if other.names and self.names and other.names != self.names:
            raise ValueError(f"parameter lists differ: {self.names} vs {other.names}")
        field = common_field(self.field, other.field)
        a = self.with_names(names).lift(field)
        b = other.with_names(names).lift(field)
        q = a._grid_with(b)
        return a.refine(q), b.refine(q)

    # -- ring operations -------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, PSeries):
            other = PSeries(0, self.q, [other], self.order, self.names, None)
            if other.is_zero():
                return self
        a, b = self._common(other)
        order = min(a.order, b.order)
        if a.is_zero() and b.is_zero():
            return PSeries.zero(order, a.q, a.names, a.field)
        base = min(x.base for x in (a, b) if not x.is_zero())
        n = 0
        while base + Fraction(n, a.q) < order:
            n += 1
        out = [ParamPoly(a.names) for _ in range(n)]
        for s in (a, b):
            off = (s.base - base) * a.q
            for k, c in enumerate(s.coeffs):
                idx = int(off) + k
                if idx < n:
                    out[idx] = out[idx] + c
        return PSeries(base, a.q, out, order, a.names, a.field, self.t0)

    __radd__ = __add__

    def __neg__(self):
        return PSeries(self.base, self.q, [-c for c in self.coeffs], self.order, self.names,
                       self.field, self.t0)

    def __sub__(self, other):
        return self + (-other if isinstance(other, PSeries) else -other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, value) -> "PSeries":
        """Multiply by a scalar or a parameter polynomial."""
        if isinstance(value, ParamPoly):
            value = value.with_names(self.names) if value.names != self.names else value
            field = common_field(self.field, _field_of(value))
        else:
            field = common_field(self.field, _field_of(value)) if isinstance(value, AlgScalar) else self.field
        return PSeries(self.base, self.q, [c * value for c in self.coeffs], self.order, self.names,
                       field, self.t0)

    def __mul__(self, other):
        if not isinstance(other, PSeries):
            return self.scale(other)
        a, b = self._common(other)
        if a.is_zero() or b.is_zero():
            order = min(a.order + b.valuation, b.order + a.valuation)
            return PSeries.zero(order, a.q, a.names, a.field)
        order = min(a.order + b.base, b.order + a.base)
        base = a.base + b.base
        n = 0
        while base + Fraction(n, a.q) < order:
            n += 1
        out = []
        for k in range(n):
            acc = ParamPoly(a.names)
            lo = max(0, k - len(b.coeffs) + 1)
            hi = min(k, len(a.coeffs) - 1)
            for i in range(lo, hi + 1):
                ci = a.coeffs[i]
                cj = b.coeffs[k - i]
                if ci.terms and cj.terms:
                    acc = acc + ci * cj
            out.append(acc)
        return PSeries(base, a.q, out, order, a.names, a.field, self.t0)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "PSeries":
        if n < 0:
            return self.inv() ** (-n)
        if n == 0:
            return PSeries(0, self.q, [1], self.order - self.valuation, self.names, self.field)
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    def shift(self, delta) -> "PSeries":
        """Multiply by ``tau**delta``."""
        delta = Fraction(delta)
        q = self.q if (delta * self.q).denominator == 1 else 2
        s = self.refine(q)
        return PSeries(s.base + delta, q, s.coeffs, s.order + delta, s.names, s.field, s.t0)

    # -- calculus --------------------------------------------------------------
    def diff(self, n: int = 1) -> "PSeries":
        """n-th derivative with respect to ``tau``."""
        if n not in (1, 2, 3, 4):
            raise ValueError("derivative order must be 1, 2, 3 or 4")
        out = []
        for k, c in enumerate(self.coeffs):
            e = self.exponent(k)
            f = Fraction(1)
            for j in range(n):
                f *= e - j
            out.append(c * f)
        return PSeries(self.base - n, self.q, out, self.order - n, self.names, self.field, self.t0)

    # -- inversion and roots ---------------------------------------------------
    def _lead_scalar(self) -> AlgScalar:
        if self.is_zero():
            raise SeriesError("zero series")
        lead = self.coeffs[0]
        if not lead.is_constant():
            raise SeriesError("leading coefficient depends on free parameters")
        return self.field.coerce(lead.constant())

    def inv(self) -> "PSeries":
        """Multiplicative inverse; requires a parameter-free leading coefficient."""
        c0 = self._lead_scalar()
        inv0 = c0.inverse()
        rel = self.order - self.base  # number of valid exponent steps relative to the lead
        n = int(rel * self.q) + (0 if (rel * self.q).denominator == 1 else 1)
        out: List[ParamPoly] = []
        for k in range(n):
            if k == 0:
                out.append(ParamPoly.const(inv0, self.names))
                continue
            acc = ParamPoly(self.names)
            for j in range(1, min(k, len(self.coeffs) - 1) + 1):
                cj = self.coeffs[j]
                if cj.terms and out[k - j].terms:
                    acc = acc + cj * out[k - j]
            out.append(acc * (-inv0))
        return PSeries(-self.base, self.q, out, self.order - 2 * self.base, self.names, self.field,
                       self.t0)

    def __truediv__(self, other):
        if isinstance(other, PSeries):
            return self * other.inv()
        if isinstance(other, AlgScalar):
            return self.scale(other.inverse())
        return self.scale(1 / Fraction(other))

    def sqrt(self, branch=None, root: Optional[AlgScalar] = None) -> "PSeries":
        """Square root with leading coefficient chosen by ``branch`` (or given ``root``).

        ``branch`` is an approximate complex value for the leading root, or the
        strings ``"+"``/``"-"`` for the principal root and its negative.
        """
        c0 = self._lead_scalar()
        half = self.base / 2
        q = self.q
        if (half * 2).denominator != 1:
            raise SeriesError(f"leading exponent {self.base} has no half on the half-integer grid")
        if root is None:
            sign = 1
            approx = branch
            if branch in ("+", "-", None):
                sign = -1 if branch == "-" else 1
                approx = None
            root, _ = alg_root(c0, 2, branch=approx)
            root = root * sign
        elif root * root != c0:
            raise SeriesError("supplied root does not square to the leading coefficient")
        field = common_field(root.field, self.field)
        a = self.lift(field).refine(q)
        root = field.coerce(root)
        # u = a / (c0 tau^base) has leading coefficient 1; solve s^2 = u term by term
        rel = a.order - a.base
        n = int(rel * q) + (0 if (rel * q).denominator == 1 else 1)
        inv0 = field.coerce(c0).inverse()
        u = [c * inv0 for c in a.coeffs]
        s: List[ParamPoly] = [ParamPoly.const(field.one(), a.names)]
        for k in range(1, n):
            acc = u[k] if k < len(u) else ParamPoly(a.names)
            for j in range(1, k):
                if s[j].terms and s[k - j].terms:
                    acc = acc - s[j] * s[k - j]
            s.append(acc * Fraction(1, 2))
        out = [c * root for c in s]
        # the root is valid to the same relative number of steps
        return PSeries(half, q, out, half + rel, a.names, field, self.t0)

    def compose_halfpower(self, exponent, branch=None) -> "PSeries":
        """``self ** exponent`` for a half-odd exponent, via the square root."""
        exponent = Fraction(exponent)
        twice = exponent * 2
        if twice.denominator != 1:
            raise ValueError("exponent must be a multiple of 1/2")
        r = self.sqrt(branch)
        return r ** int(twice) if twice >= 0 else r.inv() ** int(-twice)

    # -- substitution ------------------------------------------------------------
    def substitute(self, bindings: Mapping[str, object], drop_bound: bool = False) -> "PSeries":
        coeffs = [c.substitute(bindings) for c in self.coeffs]
        fields = [self.field] + [_field_of(v) for v in bindings.values()]
        field = common_field(*fields)
        names = self.names
        if drop_bound:
            names = tuple(n for n in self.names if n not in bindings)
            coeffs = [c.with_names(names) for c in coeffs]
        return PSeries(self.base, self.q, coeffs, self.order, names, field, self.t0)

    # -- evaluation --------------------------------------------------------------
    def eval(self, t, bindings: Optional[Mapping[str, object]] = None, prec: int = 256
             ) -> Tuple[mpmath.mpc, mpmath.mpf]:
        """Value at ``t`` and a tail estimate from the last stored terms.

        ``tau = t - t0``; fractional powers use the principal branch of
        ``tau**(1/2)``.
        """
        bindings = dict(bindings or {})
        with mpmath.workprec(prec + 20):
            t0 = embed(self.t0, prec + 20) if not isinstance(self.t0, str) else mpmath.mpc(0)
            tau = (embed(t, prec + 20) if isinstance(t, (AlgScalar, Fraction, int)) else mpmath.mpc(t)) - t0
            if tau == 0:
                raise SeriesError("evaluation at the singular point")
            if self.is_zero():
                return mpmath.mpc(0), mpmath.mpf(0)
            vals = {k: (embed(v, prec + 20) if isinstance(v, (AlgScalar, Fraction, int)) else mpmath.mpc(v))
                    for k, v in bindings.items()}
            step = mpmath.power(tau, mpmath.mpf(1) / self.q)
            term_pow = mpmath.power(tau, mpmath.mpf(self.base.numerator) / self.base.denominator)
            total = mpmath.mpc(0)
            mags = []
            for c in self.coeffs:
                if c.terms:
                    v = c.evaluate(vals, prec + 20) * term_pow
                    total += v
                    mags.append(abs(v))
                else:
                    mags.append(mpmath.mpf(0))
                term_pow *= step
            nonzero = [m for m in mags if m != 0]
            tail = sum(nonzero[-2:], mpmath.mpf(0)) if len(nonzero) > 1 else mpmath.mpf(0)
        with mpmath.workprec(prec):
            return +total, +tail

    # -- equality and serialization ------------------------------------------------
    def equals_through(self, other: "PSeries", order=None) -> bool:
        return self.first_difference(other, order) is None

    def first_difference(self, other: "PSeries", order=None) -> Optional[Fraction]:
        """Smallest exponent below ``order`` where the two series differ, else None."""
        a, b = self._common(other)
        order = min(a.order, b.order) if order is None else Fraction(order)
        diff = a - b
        for e, c in diff.terms():
            if e < order and not c.is_zero():
                return e
        return None

    def __eq__(self, other):
        if not isinstance(other, PSeries):
            return NotImplemented
        return self.order == other.order and self.first_difference(other) is None

    __hash__ = None

    def to_json(self) -> dict:
        return {
            "order": rat_str(self.order),
            "grid": self.q,
            "names": list(self.names),
            "t0": self.t0 if isinstance(self.t0, str) else rat_str(self.t0) if isinstance(self.t0, (int, Fraction)) else "t0",
            "terms": [{"exponent": rat_str(e), "coeff": c.to_json()} for e, c in self.terms()],
        }

    @staticmethod
    def from_json(data: Mapping, field: NumberField) -> "PSeries":
        names = tuple(data.get("names", []))
        order = parse_rat(data["order"])
        q = int(data["grid"])
        terms = data["terms"]
        t0 = data.get("t0", 0)
        t0 = parse_rat(t0) if t0 not in ("t0",) else t0
        if not terms:
            return PSeries.zero(order, q, names, field)
        exps = [parse_rat(t["exponent"]) for t in terms]
        base = exps[0]
        n = int((exps[-1] - base) * q) + 1
        coeffs = [ParamPoly(names) for _ in range(n)]
        for e, t in zip(exps, terms):
            coeffs[int((e - base) * q)] = ParamPoly.from_json(t["coeff"], names, field)
        return PSeries(base, q, coeffs, order, names, field, t0)


def series_from_function(coeffs: Sequence[Scalar], base, order, q: int = 1,
                         field: Optional[NumberField] = None) -> PSeries:
    """Convenience constructor for parameter-free series."""
    return PSeries(base, q, list(coeffs), order, (), field)
