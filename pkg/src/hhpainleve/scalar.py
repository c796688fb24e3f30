"""Exact arithmetic over Q(i)(theta) and polynomials in free parameters.

Every series coefficient handled by the package lives in a single simple
extension ``Q(i)(theta)`` where ``theta`` is a root of a monic polynomial with
rational coefficients.  Elements are stored as two integer coordinate vectors
(real and imaginary parts on the power basis ``1, theta, theta**2, ...``)
over a shared positive denominator, which keeps the hot loops in plain
integer arithmetic.

Numerical evaluation goes through :mod:`mpmath`; rigorous magnitude bounds
use :mod:`mpmath.iv` interval arithmetic with outward rounding.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import mpmath
from mpmath import iv

Rat = Fraction
CBig = mpmath.mpc

Number = Union[int, Fraction, "AlgScalar"]


class FieldError(ValueError):
    """Raised for invalid field descriptors or incompatible operands."""


class ReducibleError(FieldError):
    """The proposed minimal polynomial factors over the base field."""

    def __init__(self, message: str, factor: str):
        super().__init__(message)
        self.factor = factor


# --------------------------------------------------------------------------
# rationals
# --------------------------------------------------------------------------

def parse_rat(text: Union[str, int, Fraction]) -> Fraction:
    """Parse ``"p/q"``, an integer, or a decimal string exactly."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise TypeError("binary floats are not accepted; pass an exact string")
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not an exact rational: {text!r}") from exc


def rat_str(q: Union[int, Fraction]) -> str:
    return str(Fraction(q))


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _rational_root(q: Fraction, n: int) -> Optional[Fraction]:
    """Exact n-th root of a non-negative rational, or None."""
    if q < 0:
        return None
    num = _int_root(q.numerator, n)
    den = _int_root(q.denominator, n)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def _int_root(m: int, n: int) -> Optional[int]:
    if m < 0:
        return None
    r = int(round(m ** (1.0 / n))) if m < 2 ** 1000 else _iroot(m, n)
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** n == m:
            return cand
    r = _iroot(m, n)
    return r if r ** n == m else None


def _iroot(m: int, n: int) -> int:
    lo, hi = 0, 1
    while hi ** n <= m:
        hi *= 2
    while lo < hi - 1:
        mid = (lo + hi) // 2
        if mid ** n <= m:
            lo = mid
        else:
            hi = mid
    return lo


def _power_free_part(q: Fraction, n: int) -> Tuple[Fraction, int]:
    """Write ``q = s**n * m`` with integer ``m`` free of n-th powers."""
    sign = -1 if q < 0 else 1
    num, den = abs(q.numerator), q.denominator
    # clear the denominator: q = num * den**(n-1) / den**n
    m = num * den ** (n - 1)
    s = Fraction(1, den)
    p = 2
    while p * p <= m and p < 10 ** 6:
        pn = p ** n
        while m % pn == 0:
            m //= pn
            s *= p
        p += 1 if p == 2 else 2
    return s, sign * m


# --------------------------------------------------------------------------
# polynomial helpers over Q (coefficient lists, low degree first)
# --------------------------------------------------------------------------

def _ptrim(p: List[Fraction]) -> List[Fraction]:
    while p and p[-1] == 0:
        p.pop()
    return p


def _pdivmod(a: List[Fraction], b: List[Fraction]) -> Tuple[List[Fraction], List[Fraction]]:
    a = _ptrim(list(a))
    b = _ptrim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    while len(a) >= len(b) and a:
        shift = len(a) - len(b)
        c = a[-1] / b[-1]
        q[shift] = c
        for i, bi in enumerate(b):
            a[i + shift] -= c * bi
        _ptrim(a)
    return _ptrim(q), a


def _psub(a, b):
    n = max(len(a), len(b))
    out = [Fraction(0)] * n
    for i, v in enumerate(a):
        out[i] += v
    for i, v in enumerate(b):
        out[i] -= v
    return _ptrim(out)


def _pmul_frac(a, b):
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _ptrim(out)


def _pgcd(a, b):
    a, b = _ptrim(list(a)), _ptrim(list(b))
    while b:
        _, r = _pdivmod(a, b)
        a, b = b, r
    return [c / a[-1] for c in a] if a else a


def _pinvmod(a: List[Fraction], m: List[Fraction]) -> List[Fraction]:
    """Inverse of ``a`` modulo ``m`` via the extended Euclidean algorithm."""
    r0, r1 = _ptrim(list(m)), _ptrim(list(a))
    s0, s1 = [], [Fraction(1)]
    while r1:
        q, r = _pdivmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _psub(s0, _pmul_frac(q, s1))
    if len(r0) != 1:
        raise ZeroDivisionError("element is not invertible (zero divisor)")
    inv = [c / r0[0] for c in s0]
    return _pdivmod(inv, m)[1]


def _pderiv(p):
    return [i * c for i, c in enumerate(p)][1:]


# --------------------------------------------------------------------------
# number fields
# --------------------------------------------------------------------------

_FIELD_CACHE: Dict[tuple, "NumberField"] = {}

_ROOT_PREC = 320


class NumberField:
    """The field ``Q(theta)`` (optionally with ``i`` adjoined) with a fixed embedding.

    Instances are interned: build them with :func:`number_field` or
    :func:`field_adjoin` so that equal descriptors give the same object.
    """

    def __init__(self, minpoly: Sequence[Fraction], adjoin_i: bool, root: mpmath.mpc,
                 name: str = "θ"):
        self.minpoly: Tuple[Fraction, ...] = tuple(Fraction(c) for c in minpoly)
        self.adjoin_i = bool(adjoin_i)
        self.degree = len(self.minpoly) - 1
        self.name = name
        self._root = root
        self._root_prec = _ROOT_PREC
        self._lifts: Dict[int, Tuple["NumberField", "AlgScalar"]] = {}
        den = reduce(_lcm, (c.denominator for c in self.minpoly), 1)
        self._integral = den == 1
        self._red = [int(c) for c in self.minpoly[:-1]] if self._integral else None
        self.is_real = abs(mpmath.im(root)) == 0 and not self.adjoin_i

    # -- construction helpers ------------------------------------------------
    def __repr__(self):
        if self.degree == 1:
            return "QQ(i)" if self.adjoin_i else "QQ"
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.minpoly[k]
            if c:
                terms.append(f"{rat_str(c)}*x^{k}" if k else rat_str(c))
        gen = mpmath.nstr(self._root, 8)
        return f"NumberField({' + '.join(terms)}, i={self.adjoin_i}, θ≈{gen})"

    @property
    def is_trivial(self) -> bool:
        return self.degree == 1

    def zero(self) -> "AlgScalar":
        return AlgScalar._make(self, (0,) * self.degree, None, 1)

    def one(self) -> "AlgScalar":
        return self(1)

    def gen(self) -> "AlgScalar":
        if self.is_trivial:
            return self(-self.minpoly[0])
        coords = [0] * self.degree
        coords[1] = 1
        return AlgScalar._make(self, tuple(coords), None, 1)

    def i(self) -> "AlgScalar":
        if not self.adjoin_i:
            raise FieldError(f"i is not adjoined in {self!r}")
        im = [0] * self.degree
        im[0] = 1
        return AlgScalar._make(self, (0,) * self.degree, tuple(im), 1)

    def __call__(self, value) -> "AlgScalar":
        return self.coerce(value)

    def coerce(self, value) -> "AlgScalar":
        if isinstance(value, AlgScalar):
            if value.field is self:
                return value
            return self.lift(value)
        if isinstance(value, bool):
            raise TypeError("cannot coerce bool")
        if isinstance(value, (int, Fraction)):
            q = Fraction(value)
            coords = [0] * self.degree
            coords[0] = q.numerator
            return AlgScalar._make(self, tuple(coords), None, q.denominator)
        if isinstance(value, complex):
            raise TypeError("binary complex values are not exact")
        raise TypeError(f"cannot coerce {type(value).__name__} into {self!r}")

    def from_coords(self, re: Sequence, im: Optional[Sequence] = None) -> "AlgScalar":
        """Build an element from rational coordinates on the power basis."""
        re = [Fraction(c) for c in re] + [Fraction(0)] * (self.degree - len(re))
        im = [Fraction(c) for c in (im or [])]
        if any(im) and not self.adjoin_i:
            raise FieldError("imaginary coordinates need i adjoined")
        im = im + [Fraction(0)] * (self.degree - len(im))
        if len(re) > self.degree or len(im) > self.degree:
            return self._reduce_frac(re, im)
        den = reduce(_lcm, (c.denominator for c in re + im), 1)
        nre = tuple(int(c * den) for c in re)
        nim = tuple(int(c * den) for c in im) if any(im) else None
        return AlgScalar._make(self, nre, nim, den)

    def _reduce_frac(self, re, im):
        m = list(self.minpoly)
        rre = _pdivmod(re, m)[1] if len(re) > self.degree else re
        rim = _pdivmod(im, m)[1] if len(im) > self.degree else im
        return self.from_coords(rre, rim)

    # -- embedding -------------------------------------------------------------
    def root(self, prec: int = 53) -> mpmath.mpc:
        """Designated complex root of the minimal polynomial to ``prec`` bits."""
        if prec + 40 > self._root_prec:
            self._refine(prec + 64)
        return self._root

    def _refine(self, prec: int):
        coeffs = [c for c in self.minpoly]
        with mpmath.workprec(prec + 32):
            z = mpmath.mpc(self._root)
            for _ in range(200):
                p = mpmath.polyval([mpmath.mpf(c.numerator) / c.denominator for c in reversed(coeffs)], z)
                dp = mpmath.polyval(
                    [mpmath.mpf(c.numerator) / c.denominator for c in reversed(_pderiv(coeffs))], z)
                step = p / dp
                z -= step
                if abs(step) <= abs(z) * mpmath.mpf(2) ** (-(prec + 16)) or step == 0:
                    break
            self._root = z
        self._root_prec = prec

    def root_box(self, prec: int = 128) -> Tuple[iv.mpf, iv.mpf]:
        """Rigorous rectangular enclosure (re, im) of the designated root."""
        z = self.root(prec)
        old = iv.prec
        iv.prec = prec + 16
        try:
            if self.degree == 1:
                r = -self.minpoly[0]
                v = iv.mpf(r.numerator) / r.denominator
                return v, iv.mpf(0)
            re = iv.mpf(mpmath.re(z))
            im = iv.mpf(mpmath.im(z))
            pr, pi_ = _iv_polyval(self.minpoly, re, im)
            dr, di = _iv_polyval(_pderiv(list(self.minpoly)), re, im)
            num = _iv_mag(pr) + _iv_mag(pi_)
            den = max(_iv_mig(dr), _iv_mig(di))
            if den == 0:
                raise ArithmeticError("derivative vanishes near the embedded root")
            # a root lies within degree*|p(z)/p'(z)| of z
            rad = (self.degree * iv.mpf(num) / iv.mpf(den)).b * 2
            return re + iv.mpf([-rad, rad]), im + iv.mpf([-rad, rad])
        finally:
            iv.prec = old

    # -- subfield maps -----------------------------------------------------------
    def register_lift(self, sub: "NumberField", image_of_gen: "AlgScalar"):
        if image_of_gen.field is not self:
            raise FieldError("lift image must live in the target field")
        self._lifts[id(sub)] = (sub, image_of_gen)

    def contains(self, other: "NumberField") -> bool:
        if other is self:
            return True
        if other.is_trivial:
            return self.adjoin_i or not other.adjoin_i
        if other.adjoin_i and not self.adjoin_i:
            return False
        return self._generator_image(other) is not None

    def _generator_image(self, src: "NumberField", depth: int = 3) -> Optional["AlgScalar"]:
        """Image of ``src``'s generator in this field, following registered lifts."""
        if src is self:
            return self.gen()
        hit = self._lifts.get(id(src))
        if hit is not None:
            return hit[1]
        if depth <= 0:
            return None
        img = None
        if src.minpoly == self.minpoly and self.adjoin_i and not src.adjoin_i and _same_root(src, self):
            img = self.gen()
        else:
            for sub, sub_img in list(self._lifts.values()):
                inner = sub._generator_image(src, depth - 1)
                if inner is not None:
                    img = _map_generator(inner, sub_img, self)
                    break
            if img is None and self.adjoin_i:
                twin = _real_twin(self)
                if twin is not None:
                    inner = twin._generator_image(src, depth - 1)
                    if inner is not None:
                        img = _map_generator(inner, self.gen(), self)
        if img is not None:
            self._lifts[id(src)] = (src, img)
        return img

    def lift(self, a: "AlgScalar") -> "AlgScalar":
        src = a.field
        if src is self:
            return a
        if src.is_trivial:
            if a.im is not None and not self.adjoin_i:
                raise FieldError(f"cannot place {a} into {self!r}: i not adjoined")
            out = self(Fraction(a.re[0], a.den))
            if a.im is not None:
                out = out + self.i() * Fraction(a.im[0], a.den)
            return out
        img = self._generator_image(src)
        if img is None:
            raise FieldError(f"no embedding of {src!r} into {self!r}")
        return _map_generator(a, img, self)

    # -- serialization -------------------------------------------------------------
    def to_json(self) -> dict:
        z = self.root(64)
        return {
            "minpoly": [rat_str(c) for c in self.minpoly],
            "adjoin_i": self.adjoin_i,
            "embedding": {
                "re": mpmath.nstr(mpmath.re(z), 40, strip_zeros=False),
                "im": mpmath.nstr(mpmath.im(z), 40, strip_zeros=False),
                "radius": "1e-30",
            },
        }

    @staticmethod
    def from_json(data: Mapping) -> "NumberField":
        emb = data.get("embedding", {})
        with mpmath.workprec(256):
            approx = mpmath.mpc(mpmath.mpf(emb.get("re", "0")), mpmath.mpf(emb.get("im", "0")))
            radius = emb.get("radius")
            radius = None if radius is None else mpmath.mpf(radius)
        return number_field([parse_rat(c) for c in data["minpoly"]], bool(data.get("adjoin_i")),
                            approx, radius)


def _iv_polyval(coeffs, re, im):
    """Evaluate a rational polynomial at an interval rectangle."""
    acc_r, acc_i = iv.mpf(0), iv.mpf(0)
    for c in reversed(list(coeffs)):
        cr = iv.mpf(c.numerator) / c.denominator
        acc_r, acc_i = acc_r * re - acc_i * im + cr, acc_r * im + acc_i * re
    return acc_r, acc_i


def _map_generator(a: "AlgScalar", img: "AlgScalar", target: "NumberField") -> "AlgScalar":
    """Evaluate ``a`` (a polynomial in its field's generator) at ``img``."""
    if a.im is not None and not target.adjoin_i:
        raise FieldError("i not adjoined in target field")
    out = target.zero()
    ii = target.i() if a.im is not None else None
    power = target.one()
    for k in range(a.field.degree):
        cr = a.re[k]
        ci = a.im[k] if a.im is not None else 0
        if cr or ci:
            coef = target(Fraction(cr, a.den))
            if ci:
                coef = coef + ii * Fraction(ci, a.den)
            out = out + coef * power
        if k + 1 < a.field.degree:
            power = power * img
    return out


def _real_twin(f: "NumberField") -> Optional["NumberField"]:
    for key, g in _FIELD_CACHE.items():
        if g is not f and not g.adjoin_i and g.minpoly == f.minpoly and _same_root(g, f):
            return g
    return None


def _iv_mag(x) -> mpmath.mpf:
    """Upper bound of |x| over an interval."""
    return max(abs(mpmath.mpf(x.a)), abs(mpmath.mpf(x.b)))


def _iv_mig(x) -> mpmath.mpf:
    """Lower bound of |x| over an interval (0 when it straddles zero)."""
    lo, hi = mpmath.mpf(x.a), mpmath.mpf(x.b)
    if lo <= 0 <= hi:
        return mpmath.mpf(0)
    return min(abs(lo), abs(hi))


def _same_root(f: NumberField, g: NumberField) -> bool:
    return abs(f.root(64) - g.root(64)) < mpmath.mpf(10) ** -15


def _check_squarefree_irreducible(minpoly: List[Fraction], adjoin_i: bool):
    if minpoly[-1] != 1:
        raise FieldError("minimal polynomial must be monic")
    if len(minpoly) <= 2:
        return
    g = _pgcd(minpoly, _pderiv(minpoly))
    if len(g) > 1:
        raise FieldError("minimal polynomial is not squarefree")
    import sympy

    x = sympy.Symbol("x")
    poly = sum(sympy.Rational(c.numerator, c.denominator) * x ** k for k, c in enumerate(minpoly))
    _, factors = sympy.factor_list(poly, gaussian=adjoin_i) if adjoin_i else sympy.factor_list(poly)
    if len(factors) > 1 or factors[0][1] > 1:
        first = factors[0][0]
        raise ReducibleError(f"polynomial {poly} is reducible; factor {first}", str(first))


def number_field(minpoly: Sequence, adjoin_i: bool = False, approx=None,
                 radius=None, name: str = "θ") -> NumberField:
    """Intern a number field from its minimal polynomial (low degree first).

    ``approx`` selects the embedded root: the root nearest to it is taken and,
    when ``radius`` is given, it must be the only root inside that disc.
    """
    minpoly = [parse_rat(c) if not isinstance(c, Fraction) else c for c in minpoly]
    if len(minpoly) < 2:
        raise FieldError("minimal polynomial must have degree >= 1")
    if len(minpoly) == 2:
        if minpoly != [Fraction(0), Fraction(1)]:
            minpoly = [Fraction(0), Fraction(1)]
        key = ((Fraction(0), Fraction(1)), bool(adjoin_i), None)
        if key not in _FIELD_CACHE:
            _FIELD_CACHE[key] = NumberField(minpoly, adjoin_i, mpmath.mpc(0), name)
        return _FIELD_CACHE[key]
    _check_squarefree_irreducible(minpoly, adjoin_i)
    with mpmath.workprec(_ROOT_PREC):
        coeffs = [mpmath.mpf(c.numerator) / c.denominator for c in reversed(minpoly)]
        roots = mpmath.polyroots(coeffs, maxsteps=400, extraprec=400)
        if approx is None:
            approx = mpmath.mpf(0) + max((mpmath.re(r) for r in roots))
            approx = max(roots, key=lambda r: (mpmath.re(r) if abs(mpmath.im(r)) < 1e-30 else -mpmath.inf,
                                               mpmath.im(r)))
        approx = mpmath.mpc(approx)
        dists = sorted(((abs(r - approx), r) for r in roots), key=lambda t: t[0])
        best = dists[0][1]
        if radius is not None:
            inside = [d for d, _ in dists if d <= radius]
            if len(inside) != 1:
                raise FieldError(f"approximation {approx} does not isolate exactly one root "
                                 f"(found {len(inside)} within {radius})")
        elif len(dists) > 1 and dists[1][0] - dists[0][0] < mpmath.mpf(10) ** -20:
            raise FieldError("approximation is equidistant from several roots")
        if abs(mpmath.im(best)) < mpmath.mpf(10) ** -60:
            best = mpmath.mpc(mpmath.re(best), 0)
    key = (tuple(minpoly), bool(adjoin_i), mpmath.nstr(best, 40))
    fld = _FIELD_CACHE.get(key)
    if fld is None:
        fld = NumberField(minpoly, adjoin_i, best, name)
        _FIELD_CACHE[key] = fld
    return fld


QQ = number_field([0, 1])
QQI = number_field([0, 1], adjoin_i=True)


def field_adjoin(base: NumberField, poly: Sequence, approx=None, radius=None) -> NumberField:
    """Adjoin a root of ``poly`` (rational coefficients) to a trivial base.

    Only ``Q`` and ``Q(i)`` are accepted as bases; the result is a single
    extension ``Q(i)(theta)`` so no towers are built.
    """
    if not base.is_trivial:
        raise FieldError("adjoining to a non-trivial field would build a tower")
    return number_field(poly, base.adjoin_i, approx, radius)


# --------------------------------------------------------------------------
# elements
# --------------------------------------------------------------------------

class AlgScalar:
    """Immutable exact element of a :class:`NumberField`."""

    __slots__ = ("field", "re", "im", "den", "_hash")

    def __init__(self, *a, **k):  # pragma: no cover - use field(...)
        raise TypeError("build AlgScalar values through NumberField")

    @classmethod
    def _make(cls, field, re, im, den):
        obj = object.__new__(cls)
        if den < 0:
            re = tuple(-c for c in re)
            im = tuple(-c for c in im) if im is not None else None
            den = -den
        if im is not None and not any(im):
            im = None
        g = den
        for c in re:
            if c:
                g = math.gcd(g, c)
                if g == 1:
                    break
        if g != 1 and im is not None:
            for c in im:
                if c:
                    g = math.gcd(g, c)
                    if g == 1:
                        break
        if g != 1:
            re = tuple(c // g for c in re)
            im = tuple(c // g for c in im) if im is not None else None
            den //= g
        if not any(re) and im is None:
            den = 1
        obj.field = field
        obj.re = re
        obj.im = im
        obj.den = den
        obj._hash = None
        return obj

    # -- coordinate views --------------------------------------------------------
    @property
    def coords(self) -> List[Tuple[Fraction, Fraction]]:
        im = self.im or (0,) * len(self.re)
        return [(Fraction(r, self.den), Fraction(i, self.den)) for r, i in zip(self.re, im)]

    def is_zero(self) -> bool:
        return self.im is None and not any(self.re)

    def __bool__(self):
        return not self.is_zero()

    def is_rational(self) -> bool:
        return self.im is None and not any(self.re[1:])

    def is_gaussian_rational(self) -> bool:
        return not any(self.re[1:]) and (self.im is None or not any(self.im[1:]))

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return Fraction(self.re[0], self.den)

    def real_part(self) -> "AlgScalar":
        return AlgScalar._make(self.field, self.re, None, self.den)

    def imag_part(self) -> "AlgScalar":
        return AlgScalar._make(self.field, self.im or (0,) * len(self.re), None, self.den)

    def conj_i(self) -> "AlgScalar":
        """Image under i -> -i (theta fixed)."""
        if self.im is None:
            return self
        return AlgScalar._make(self.field, self.re, tuple(-c for c in self.im), self.den)

    # -- arithmetic ----------------------------------------------------------------
    def _other(self, other) -> Tuple["AlgScalar", "AlgScalar"]:
        if isinstance(other, AlgScalar):
            if other.field is self.field:
                return self, other
            if self.field.contains(other.field):
                return self, self.field.lift(other)
            if other.field.contains(self.field):
                return other.field.lift(self), other
            raise FieldError(f"no common field for {self.field!r} and {other.field!r}")
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self, self.field.coerce(other)
        return NotImplemented, NotImplemented

    def __add__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            if other == 0:
                return self
            re = list(self.re)
            re[0] += other * self.den
            return AlgScalar._make(self.field, tuple(re), self.im, self.den)
        a, b = self._other(other)
        if a is NotImplemented:
            return NotImplemented
        return a._add(b, 1)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._other(other)
        if a is NotImplemented:
            return NotImplemented
        return a._add(b, -1)

    def __rsub__(self, other):
        a, b = self._other(other)
        if a is NotImplemented:
            return NotImplemented
        return b._add(a, -1)

    def _add(self, b: "AlgScalar", sign: int) -> "AlgScalar":
        d1, d2 = self.den, b.den
        if d1 == d2:
            re = tuple(x + sign * y for x, y in zip(self.re, b.re))
            if self.im is None and b.im is None:
                im = None
            else:
                i1 = self.im or (0,) * len(self.re)
                i2 = b.im or (0,) * len(self.re)
                im = tuple(x + sign * y for x, y in zip(i1, i2))
            return AlgScalar._make(self.field, re, im, d1)
        g = math.gcd(d1, d2)
        m1, m2 = d2 // g, d1 // g
        re = tuple(x * m1 + sign * y * m2 for x, y in zip(self.re, b.re))
        if self.im is None and b.im is None:
            im = None
        else:
            i1 = self.im or (0,) * len(self.re)
            i2 = b.im or (0,) * len(self.re)
            im = tuple(x * m1 + sign * y * m2 for x, y in zip(i1, i2))
        return AlgScalar._make(self.field, re, im, d1 * m1)

    def __neg__(self):
        return AlgScalar._make(self.field, tuple(-c for c in self.re),
                               tuple(-c for c in self.im) if self.im is not None else None, self.den)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            q = Fraction(other)
            n, d = q.numerator, q.denominator
            return AlgScalar._make(self.field, tuple(c * n for c in self.re),
                                   tuple(c * n for c in self.im) if self.im is not None else None,
                                   self.den * d)
        a, b = self._other(other)
        if a is NotImplemented:
            return NotImplemented
        return a._mul(b)

    __rmul__ = __mul__

    def _mul(self, b: "AlgScalar") -> "AlgScalar":
        f = self.field
        if f.degree == 1:
            ar, br = self.re[0], b.re[0]
            ai = self.im[0] if self.im is not None else 0
            bi = b.im[0] if b.im is not None else 0
            re = (ar * br - ai * bi,)
            im = (ar * bi + ai * br,) if (ai or bi) else None
            return AlgScalar._make(f, re, im, self.den * b.den)
        if self.im is None and b.im is None:
            re, den = f_mulred(f, self.re, b.re)
            return AlgScalar._make(f, re, None, self.den * b.den * den)
        a_re, a_im = self.re, self.im or (0,) * f.degree
        b_re, b_im = b.re, b.im or (0,) * f.degree
        # Gauss: (a+ib)(c+id) with three products
        s1 = tuple(x + y for x, y in zip(a_re, a_im))
        k1, d1 = f_mulred(f, b_re, s1)
        k2, d2 = f_mulred(f, a_re, tuple(y - x for x, y in zip(b_re, b_im)))
        k3, d3 = f_mulred(f, a_im, tuple(x + y for x, y in zip(b_re, b_im)))
        # shared denominator d1 = d2 = d3 for a fixed field
        re = tuple(x - z for x, z in zip(k1, k3))
        im = tuple(x + y for x, y in zip(k1, k2))
        return AlgScalar._make(f, re, im, self.den * b.den * d1)

    def inverse(self) -> "AlgScalar":
        if self.is_zero():
            raise ZeroDivisionError("division by zero in number field")
        f = self.field
        if self.im is not None:
            norm = self * self.conj_i()
            return self.conj_i() * norm.inverse()
        if f.degree == 1:
            return f(Fraction(self.den, self.re[0]))
        poly = [Fraction(c, self.den) for c in self.re]
        inv = _pinvmod(poly, list(f.minpoly))
        return f.from_coords(inv)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return self * (1 / Fraction(other))
        a, b = self._other(other)
        if a is NotImplemented:
            return NotImplemented
        return a * b.inverse()

    def __rtruediv__(self, other):
        a, b = self._other(other)
        if a is NotImplemented:
            return NotImplemented
        return b * a.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = self.field.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- comparison ------------------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            q = Fraction(other)
            return (self.im is None and not any(self.re[1:]) and self.den == q.denominator
                    and self.re[0] == q.numerator)
        if isinstance(other, AlgScalar):
            if other.field is not self.field:
                try:
                    a, b = self._other(other)
                except FieldError:
                    return False
                return a == b
            return self.den == other.den and self.re == other.re and self.im == other.im
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            if self.is_rational():
                self._hash = hash(Fraction(self.re[0], self.den))
            else:
                self._hash = hash((id(self.field), self.re, self.im, self.den))
        return self._hash

    # -- numerics --------------------------------------------------------------------
    def embed(self, prec: int = 53) -> mpmath.mpc:
        return embed(self, prec)

    def __complex__(self):
        return complex(embed(self, 64))

    def enclosure(self, prec: int = 128) -> Tuple[iv.mpf, iv.mpf]:
        """Rigorous rectangle containing the embedded value."""
        f = self.field
        old = iv.prec
        iv.prec = prec
        try:
            tr, ti = f.root_box(prec)
            acc_r, acc_i = iv.mpf(0), iv.mpf(0)
            im = self.im or (0,) * len(self.re)
            den = iv.mpf(self.den)
            for k in range(len(self.re) - 1, -1, -1):
                acc_r, acc_i = acc_r * tr - acc_i * ti, acc_r * ti + acc_i * tr
                if self.re[k]:
                    acc_r = acc_r + iv.mpf(self.re[k]) / den
                if im[k]:
                    acc_i = acc_i + iv.mpf(im[k]) / den
            return acc_r, acc_i
        finally:
            iv.prec = old

    def abs_upper(self, prec: int = 128) -> Fraction:
        """Rational upper bound on ``|embed(self)|`` from outward-rounded intervals."""
        if self.is_zero():
            return Fraction(0)
        if self.is_rational():
            return abs(self.to_fraction())
        r, i = self.enclosure(prec)
        old = iv.prec
        iv.prec = prec
        try:
            mr, mi = iv.mpf(_iv_mag(r)), iv.mpf(_iv_mag(i))
            up = iv.sqrt(mr * mr + mi * mi).b
        finally:
            iv.prec = old
        m, e = mpmath.mpf(up).man_exp
        return Fraction(m) * (Fraction(2) ** e) if e >= 0 else Fraction(m, 2 ** (-e))

    # -- display ---------------------------------------------------------------------
    def __repr__(self):
        return f"AlgScalar({self})"

    def __str__(self):
        parts = []
        g = self.field.name
        for k, (r, i) in enumerate(self.coords):
            mono = "" if k == 0 else (g if k == 1 else f"{g}^{k}")
            for val, unit in ((r, ""), (i, "i")):
                if val:
                    tag = "*".join(t for t in (unit, mono) if t)
                    parts.append(f"{val}*{tag}" if tag else f"{val}")
        return " + ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        out = {"re": [rat_str(r) for r, _ in self.coords]}
        if self.im is not None:
            out["im"] = [rat_str(i) for _, i in self.coords]
        return out

    @staticmethod
    def from_json(field: NumberField, data: Mapping) -> "AlgScalar":
        return field.from_coords([parse_rat(c) for c in data["re"]],
                                 [parse_rat(c) for c in data.get("im", [])] or None)


def f_mulred(f: NumberField, a: Sequence[int], b: Sequence[int]) -> Tuple[Tuple[int, ...], int]:
    """Multiply two integer coordinate vectors and reduce modulo the minpoly.

    Returns the reduced numerator vector and the extra denominator introduced
    by a non-integral minimal polynomial (1 when it is integral).
    """
    n = f.degree
    prod = [0] * (2 * n - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    prod[i + j] += x * y
    if f._integral:
        red = f._red
        for k in range(2 * n - 2, n - 1, -1):
            c = prod[k]
            if c:
                base = k - n
                for j in range(n):
                    if red[j]:
                        prod[base + j] -= c * red[j]
        return tuple(prod[:n]), 1
    # rational minpoly: work with Fractions, then clear denominators uniformly
    fr = [Fraction(c) for c in prod]
    m = f.minpoly
    for k in range(2 * n - 2, n - 1, -1):
        c = fr[k]
        if c:
            base = k - n
            for j in range(n):
                fr[base + j] -= c * m[j]
    D = reduce(_lcm, (c.denominator for c in m), 1) ** (n - 1)
    return tuple(int(c * D) for c in fr[:n]), D


def embed(a: Number, prec: int = 53) -> mpmath.mpc:
    """Complex value of ``a`` with relative error at most ``2**(1 - prec)``."""
    if isinstance(a, (int, Fraction)):
        q = Fraction(a)
        with mpmath.workprec(prec):
            return mpmath.mpc(mpmath.mpf(q.numerator) / q.denominator)
    if a.is_zero():
        return mpmath.mpc(0)
    if a.is_gaussian_rational():
        with mpmath.workprec(prec):
            im = a.im[0] if a.im is not None else 0
            return mpmath.mpc(mpmath.mpf(a.re[0]) / a.den, mpmath.mpf(im) / a.den)
    guard = 32
    while True:
        work = prec + guard
        r, i = a.enclosure(work)
        old = iv.prec
        iv.prec = work
        try:
            width = max(r.delta, i.delta)
            mag = max(abs(r.mid), abs(i.mid))
            ok = mag > 0 and width <= mag * mpmath.mpf(2) ** (-prec - 2)
            val = mpmath.mpc(r.mid, i.mid)
        finally:
            iv.prec = old
        if ok:
            with mpmath.workprec(prec):
                return +val
        guard *= 2
        if guard > 1 << 16:  # pragma: no cover
            raise ArithmeticError("could not refine embedding")


# --------------------------------------------------------------------------
# roots
# --------------------------------------------------------------------------

def _roots_of_unity(n: int) -> List[Tuple[Fraction, Fraction]]:
    """n-th roots of unity lying in Q(i), as (re, im) pairs."""
    cands = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    out = []
    for re, im in cands:
        z = complex(re, im) ** n
        if abs(z - 1) < 1e-12:
            out.append((Fraction(re), Fraction(im)))
    return out


def _select_branch(cands: List["AlgScalar"], branch) -> "AlgScalar":
    if branch is None:
        branch = 0
    if isinstance(branch, int) and not isinstance(branch, bool):
        # principal ordering: by argument in (-pi, pi], closest to 0 first
        def key(c):
            z = embed(c, 64)
            return (abs(mpmath.arg(z)), -mpmath.im(z))
        ordered = sorted(cands, key=key)
        return ordered[branch % len(ordered)]
    target = mpmath.mpc(branch)
    return min(cands, key=lambda c: abs(embed(c, 64) - target))


def alg_root(a: Number, n: int, branch=None, field: Optional[NumberField] = None
             ) -> Tuple["AlgScalar", NumberField]:
    """An n-th root of ``a``; adjoins a generator when the root is not in the field.

    ``branch`` is either an approximate complex value (the root nearest to it is
    returned) or an integer index into the roots ordered by ``|arg|``; the
    default picks the principal root.
    """
    if n < 1:
        raise ValueError("root order must be positive")
    if not isinstance(a, AlgScalar):
        a = (field or QQ)(a)
    if a.is_zero():
        raise ValueError("root of zero is not supported")
    if n == 1:
        return a, a.field
    f = a.field
    found = _roots_in_field(a, n)
    if found:
        root = _select_branch(found, branch) if _branch_reachable(found, a, n, branch) else None
        if root is not None:
            return root, root.field
    if a.is_gaussian_rational():
        return _adjoin_radical(a, n, branch, f)
    guess = _root_by_relation(a, n, branch)
    if guess is not None:
        return guess, f
    if a.im is None and _generates(a):
        return _adjoin_generating(a, n, branch)
    if a.im is None and f.minpoly[1:-1] == tuple([Fraction(0)] * (f.degree - 1)) and f.degree > 1:
        return _adjoin_via_power(a, n, branch)
    raise NotImplementedError(f"root of {a} would need a field tower")


def _branch_reachable(found, a, n, branch) -> bool:
    if branch is None or isinstance(branch, int):
        if len(found) == n:
            return True
        # only accept an in-field root if it is the requested principal branch
        with mpmath.workprec(128):
            want = _numeric_roots(a, n)
            want = sorted(want, key=lambda z: (abs(mpmath.arg(z)), -mpmath.im(z)))[(branch or 0) % n]
        return any(abs(embed(c, 64) - want) < 1e-12 * max(1, abs(want)) for c in found)
    target = mpmath.mpc(branch)
    want = min(_numeric_roots(a, n), key=lambda z: abs(z - target))
    return any(abs(embed(c, 64) - want) < 1e-12 * max(1, abs(want)) for c in found)


def _numeric_roots(a: "AlgScalar", n: int) -> List[mpmath.mpc]:
    z = embed(a, 128)
    with mpmath.workprec(128):
        r0 = mpmath.root(z, n)
        return [r0 * mpmath.expjpi(mpmath.mpf(2 * k) / n) for k in range(n)]


def _root_by_relation(a: "AlgScalar", n: int, branch) -> Optional["AlgScalar"]:
    """An in-field root found from an integer relation, accepted only if its n-th power is exactly ``a``."""
    f = a.field
    if f.degree == 1:
        return None
    with mpmath.workprec(_ROOT_PREC):
        theta = f.root(_ROOT_PREC)
        if abs(mpmath.im(theta)) > mpmath.mpf(2) ** (-_ROOT_PREC // 2):
            return None
        theta = mpmath.re(theta)
        r0 = mpmath.root(embed(a, _ROOT_PREC), n)
        roots = [r0 * mpmath.expjpi(mpmath.mpf(2 * k) / n) for k in range(n)]
        if branch is None or isinstance(branch, int):
            target = sorted(roots, key=lambda z: (abs(mpmath.arg(z)), -mpmath.im(z)))[(branch or 0) % n]
        else:
            target = min(roots, key=lambda z: abs(z - mpmath.mpc(branch)))
        basis = [theta ** j for j in range(f.degree)]
        coords = []
        for part in (mpmath.re(target), mpmath.im(target)):
            if abs(part) < mpmath.mpf(2) ** (-_ROOT_PREC // 2):
                coords.append([0] * f.degree)
                continue
            rel = mpmath.pslq([part] + basis, maxcoeff=10 ** 15, maxsteps=20000)
            if rel is None or rel[0] == 0:
                return None
            coords.append([Fraction(-c, rel[0]) for c in rel[1:]])
    if any(coords[1]) and not f.adjoin_i:
        return None
    cand = f.from_coords(coords[0], coords[1] if f.adjoin_i else None)
    return cand if cand ** n == a else None


def _roots_in_field(a: "AlgScalar", n: int) -> List["AlgScalar"]:
    """Roots of ``x**n - a`` that are monomials ``c*theta**j`` with ``c`` in Q(i)."""
    f = a.field
    out = []
    units = _roots_of_unity(n)
    if not f.adjoin_i:
        units = [u for u in units if u[1] == 0]
    pure = f.degree == 1 or all(c == 0 for c in f.minpoly[1:-1])
    if not pure:
        return out
    nz = [k for k in range(f.degree) if a.re[k] or (a.im is not None and a.im[k])]
    if len(nz) != 1:
        return out
    k = nz[0]
    cre = Fraction(a.re[k], a.den)
    cim = Fraction(a.im[k], a.den) if a.im is not None else Fraction(0)
    m = f.degree
    M = -f.minpoly[0] if m > 1 else Fraction(1)
    for j in range(m):
        # (c*theta^j)^n = c^n * M^q * theta^(jn mod m), q = jn // m
        if (j * n) % m != (k % m if m > 1 else 0):
            continue
        q = (j * n) // m if m > 1 else 0
        target_re, target_im = cre / M ** q, cim / M ** q
        for c in _gaussian_nth_roots(target_re, target_im, n, f.adjoin_i):
            re = [Fraction(0)] * m
            im = [Fraction(0)] * m
            re[j], im[j] = c
            cand = f.from_coords(re, im if f.adjoin_i else None)
            if cand ** n == a:
                out.append(cand)
    return out


def _gaussian_nth_roots(re: Fraction, im: Fraction, n: int, allow_i: bool):
    """Exact n-th roots in Q(i) of re + i*im for the easy cases used here."""
    roots = []
    units = _roots_of_unity(n) if allow_i else [u for u in _roots_of_unity(n) if u[1] == 0]
    base = None
    if im == 0:
        r = _rational_root(abs(re), n)
        if r is not None:
            if re > 0:
                base = (r, Fraction(0))
            elif n % 2 == 1:
                base = (-r, Fraction(0))
            elif n == 2 and allow_i:
                base = (Fraction(0), r)
            elif n == 4 and allow_i:
                # (-m)^(1/4) = r * (1+i)/sqrt2 needs sqrt2: representable only if r*sqrt2 rational
                base = None
    elif re == 0 and allow_i:
        # i*q: roots of i are not in Q(i) for n >= 2 except via (1+i)^2 = 2i
        if n == 2:
            r = _rational_root(abs(im) / 2, 2)
            if r is not None:
                base = (r, r) if im > 0 else (r, -r)
    if base is None:
        return roots
    br, bi = base
    for ur, ui in units:
        roots.append((br * ur - bi * ui, br * ui + bi * ur))
    return roots


def _adjoin_radical(a: "AlgScalar", n: int, branch, current: NumberField):
    """Adjoin an n-th root of a Gaussian rational (real or purely imaginary)."""
    if a.im is not None and any(a.re):
        raise NotImplementedError("radicals of general Gaussian rationals are not supported")
    if a.im is not None:
        raise NotImplementedError("radicals of imaginary numbers are not supported")
    q = a.to_fraction()
    s, m = _power_free_part(q, n)
    need_i = q < 0 or current.adjoin_i
    if m == -1 and n == 2:
        fld = QQI
        candidates = [fld.i() * s, -fld.i() * s]
    else:
        poly = [Fraction(-m)] + [Fraction(0)] * (n - 1) + [Fraction(1)]
        with mpmath.workprec(_ROOT_PREC):
            if m > 0:
                principal = mpmath.root(mpmath.mpf(m), n)
            else:
                principal = mpmath.root(mpmath.mpf(-m), n) * mpmath.expjpi(mpmath.mpf(1) / n)
        want = _numeric_roots(a, n)
        # a non-real branch of a positive radicand needs i
        if not need_i and branch is not None:
            target = min(want, key=lambda z: abs(z - mpmath.mpc(branch))) if not isinstance(branch, int) \
                else sorted(want, key=lambda z: (abs(mpmath.arg(z)), -mpmath.im(z)))[branch % n]
            if abs(mpmath.im(target)) > 1e-20:
                need_i = True
        fld = number_field(poly, need_i, principal)
        psi = fld.gen() * s
        candidates = []
        units = _roots_of_unity(n) if fld.adjoin_i else [u for u in _roots_of_unity(n) if u[1] == 0]
        for ur, ui in units:
            unit = fld(ur) + (fld.i() * ui if ui else 0)
            candidates.append(psi * unit)
    if current is not None and not current.is_trivial and current is not fld:
        if not fld.contains(current):
            return _compositum_root(a, n, branch, current)
    root = _select_branch(candidates, branch)
    return root, root.field


def _generates(a: "AlgScalar") -> bool:
    f = a.field
    if f.degree == 1:
        return False
    return len(_charpoly_rational(a)) - 1 == f.degree and _is_squarefree(_charpoly_rational(a))


def _is_squarefree(p):
    return len(_pgcd(p, _pderiv(p))) == 1


def _charpoly_rational(a: "AlgScalar") -> List[Fraction]:
    """Characteristic polynomial over Q of multiplication by a real-coordinate element."""
    import sympy

    f = a.field
    n = f.degree
    cols = []
    basis = f.one()
    g = f.gen()
    for _ in range(n):
        prod = a * basis
        cols.append([sympy.Rational(r.numerator, r.denominator) for r, _ in prod.coords])
        basis = basis * g
    M = sympy.Matrix(n, n, lambda i, j: cols[j][i])
    x = sympy.Symbol("x")
    cp = sympy.Poly(M.charpoly(x).as_expr(), x)
    coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(cp.all_coeffs())]
    return coeffs


def _express_in_powers(target: "AlgScalar", a: "AlgScalar") -> List[Fraction]:
    """Coefficients c_k with target = sum c_k a**k (a generating the field)."""
    import sympy

    f = a.field
    n = f.degree
    cols = []
    p = f.one()
    for _ in range(n):
        cols.append([sympy.Rational(r.numerator, r.denominator) for r, _ in p.coords])
        p = p * a
    M = sympy.Matrix(n, n, lambda i, j: cols[j][i])
    rhs = sympy.Matrix([sympy.Rational(r.numerator, r.denominator) for r, _ in target.coords])
    sol = M.LUsolve(rhs)
    return [Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1])) for v in sol]


def _adjoin_generating(a: "AlgScalar", n: int, branch):
    """Adjoin a**(1/n) when a generates its (real-coordinate) field."""
    f = a.field
    cp = _charpoly_rational(a)
    d = len(cp) - 1
    newpoly = [Fraction(0)] * (d * n + 1)
    for k, c in enumerate(cp):
        newpoly[k * n] = c
    want = _numeric_roots(a, n)
    if branch is None or isinstance(branch, int):
        target = sorted(want, key=lambda z: (abs(mpmath.arg(z)), -mpmath.im(z)))[(branch or 0) % n]
    else:
        target = min(want, key=lambda z: abs(z - mpmath.mpc(branch)))
    pure = all(c == 0 for c in newpoly[1:-1])
    if pure:
        # x^(dn) = c: normalise to an integral power-free generator
        total = d * n
        c = -newpoly[0]
        s, m = _power_free_part(c, total)
        poly = [Fraction(-m)] + [Fraction(0)] * (total - 1) + [Fraction(1)]
        with mpmath.workprec(_ROOT_PREC):
            if m > 0:
                principal = mpmath.root(mpmath.mpf(m), total)
            else:
                principal = mpmath.root(mpmath.mpf(-m), total) * mpmath.expjpi(mpmath.mpf(1) / total)
        need_i = f.adjoin_i or abs(mpmath.im(target / (principal * s))) > 1e-20 or m < 0
        fld = number_field(poly, need_i, principal)
        units = _roots_of_unity(total) if fld.adjoin_i else [u for u in _roots_of_unity(total) if u[1] == 0]
        psi = fld.gen() * s
        cands = [psi * (fld(ur) + (fld.i() * ui if ui else 0)) for ur, ui in units]
        cands = [c for c in cands if abs(embed(c, 64) - target) < 1e-10 * max(1, abs(target))]
        if not cands:
            raise NotImplementedError("requested branch is not reachable with Q(i) units")
        root = cands[0]
    else:
        need_i = f.adjoin_i or abs(mpmath.im(target)) > 1e-30 and not _real_poly_root(newpoly, target)
        fld = number_field(newpoly, f.adjoin_i, target)
        root = fld.gen()
        need_i = need_i  # embedding already fixed by target
    # map old generator: theta_old = P(a), a = root**n
    coeffs = _express_in_powers(f.gen(), a)
    a_new = root ** n
    img = fld.zero()
    pw = fld.one()
    for c in coeffs:
        if c:
            img = img + pw * c
        pw = pw * a_new
    fld.register_lift(f, img)
    return root, fld


def _real_poly_root(poly, z) -> bool:
    return True


def _adjoin_via_power(a, n, branch):  # pragma: no cover - guarded upstream
    raise NotImplementedError("root of a non-generating element in a pure extension")


def _compositum_root(a: "AlgScalar", n: int, branch, current: NumberField):
    """Adjoin a radical of a rational to a non-trivial field via a primitive element."""
    import sympy

    q = a.to_fraction()
    s, m = _power_free_part(q, n)
    x, z = sympy.symbols("x z")
    P = sum(sympy.Rational(c.numerator, c.denominator) * z ** k for k, c in enumerate(current.minpoly))
    want = _numeric_roots(a, n)
    if branch is None or isinstance(branch, int):
        target = sorted(want, key=lambda w: (abs(mpmath.arg(w)), -mpmath.im(w)))[(branch or 0) % n]
    else:
        target = min(want, key=lambda w: abs(w - mpmath.mpc(branch)))
    # radical r with r**n = m, chosen so that s*r = target
    with mpmath.workprec(_ROOT_PREC):
        rnum = target / s
    need_i = current.adjoin_i or q < 0 or abs(mpmath.im(rnum)) > 1e-20
    theta = current.root(_ROOT_PREC)
    for c in range(1, 20):
        R = sympy.resultant(P, (x - z) ** n - sympy.Integer(c) ** n * m, z)
        R = sympy.Poly(R, x)
        coeffs = [Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1]))
                  for v in reversed(R.all_coeffs())]
        lead = coeffs[-1]
        coeffs = [v / lead for v in coeffs]
        try:
            eta_val = theta + c * rnum
            fld = number_field(coeffs, need_i, eta_val)
        except FieldError:
            continue
        break
    else:  # pragma: no cover
        raise NotImplementedError("no primitive element found")
    # express theta and r in the new basis: r = (eta - theta)/c and theta = Q(eta)
    deg_old = current.degree
    # basis theta^i r^j ; eta^k expanded with exact sympy arithmetic
    th, rr = sympy.symbols("th rr")
    rows = []
    eta_expr = th + c * rr
    power = sympy.Integer(1)
    big_n = fld.degree
    Pth = sum(sympy.Rational(cc.numerator, cc.denominator) * th ** k for k, cc in enumerate(current.minpoly))
    for _ in range(big_n):
        red = sympy.Poly(sympy.expand(power), th, rr)
        red = sympy.Poly(sympy.rem(sympy.rem(red.as_expr(), rr ** n - m, rr), Pth, th), th, rr)
        row = []
        for i in range(deg_old):
            for j in range(n):
                row.append(red.coeff_monomial(th ** i * rr ** j))
        rows.append(row)
        power = sympy.expand(power * eta_expr)
    M = sympy.Matrix(rows).T  # columns: eta^k in (theta, r) basis
    e_theta = sympy.zeros(big_n, 1)
    e_theta[1 * n + 0 if deg_old > 1 else 0, 0] = 1
    idx_theta = 1 * n  # monomial th^1 r^0
    e_theta = sympy.zeros(big_n, 1)
    e_theta[idx_theta, 0] = 1
    sol_theta = M.LUsolve(e_theta)
    e_r = sympy.zeros(big_n, 1)
    e_r[1, 0] = 1
    sol_r = M.LUsolve(e_r)
    to_frac = lambda v: Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1]))
    img_theta = fld.from_coords([to_frac(v) for v in sol_theta])
    r_elem = fld.from_coords([to_frac(v) for v in sol_r])
    fld.register_lift(current, img_theta)
    root = r_elem * s
    return root, fld


def _i_of(coeff) -> "AlgScalar":
    f = coeff.field if isinstance(coeff, AlgScalar) else QQI
    if not f.adjoin_i:
        f = QQI if f.is_trivial else number_field(f.minpoly, True, f.root(64))
    return f.i()


# --------------------------------------------------------------------------
# square-root surds used for half-power coefficients
# --------------------------------------------------------------------------

class Surd:
    """Exact value ``coeff * sqrt(radicand)`` with a squarefree integer radicand."""

    __slots__ = ("coeff", "radicand")

    def __init__(self, coeff: Number, radicand: Union[int, Fraction] = 1):
        s, m = _power_free_part(Fraction(radicand), 2)
        self.coeff = coeff * s
        self.radicand = m

    def __mul__(self, other: "Surd") -> "Surd":
        if not isinstance(other, Surd):
            return Surd(self.coeff * other, self.radicand)
        return Surd(self.coeff * other.coeff, self.radicand * other.radicand)

    __rmul__ = __mul__

    def __neg__(self):
        return Surd(-self.coeff, self.radicand)

    def is_zero(self) -> bool:
        return self.coeff == 0

    def to_field(self, field: NumberField) -> "AlgScalar":
        """Exact value inside ``field`` (the positive square root is used)."""
        coeff = self.coeff
        m = self.radicand
        if m < 0:
            # sqrt(m) = i*sqrt(-m); fold the i into the coefficient
            coeff = (coeff if isinstance(coeff, AlgScalar) else QQI(coeff)) * _i_of(coeff)
            m = -m
        base = field.coerce(coeff) if isinstance(coeff, AlgScalar) else field(coeff)
        if m == 1 or base.is_zero():
            return base
        found = [c for c in _roots_in_field(field(m), 2) if c.im is None or not any(c.im)]
        found = [c for c in found if mpmath.re(embed(c, 64)) > 0]
        if not found:
            raise FieldError(f"sqrt({m}) is not in {field!r}")
        return base * found[0]

    def embed(self, prec: int = 53) -> mpmath.mpc:
        with mpmath.workprec(prec + 10):
            return embed(self.coeff, prec + 10) * mpmath.sqrt(mpmath.mpc(self.radicand))

    def __repr__(self):
        return f"Surd({self.coeff}, {self.radicand})"


# --------------------------------------------------------------------------
# polynomials in free parameters
# --------------------------------------------------------------------------

Monomial = Tuple[int, ...]


class ParamPoly:
    """Polynomial in named free parameters with exact scalar coefficients."""

    __slots__ = ("names", "terms")

    def __init__(self, names: Sequence[str] = (), terms: Optional[Mapping[Monomial, Number]] = None):
        self.names = tuple(names)
        clean = {}
        if terms:
            for mono, c in terms.items():
                if len(mono) != len(self.names):
                    raise ValueError("monomial length does not match parameter list")
                if c != 0:
                    clean[tuple(mono)] = c
        self.terms: Dict[Monomial, Number] = clean

    @classmethod
    def const(cls, value: Number, names: Sequence[str] = ()) -> "ParamPoly":
        return cls(names, {(0,) * len(names): value})

    @classmethod
    def var(cls, name: str, names: Sequence[str], coeff: Number = 1) -> "ParamPoly":
        names = tuple(names)
        mono = tuple(1 if n == name else 0 for n in names)
        if name not in names:
            raise ValueError(f"unknown parameter {name}")
        return cls(names, {mono: coeff})

    # -- structure -----------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant(self) -> Number:
        return self.terms.get((0,) * len(self.names), 0)

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def free_names(self) -> Tuple[str, ...]:
        used = set()
        for m in self.terms:
            for n, e in zip(self.names, m):
                if e:
                    used.add(n)
        return tuple(n for n in self.names if n in used)

    def with_names(self, names: Sequence[str]) -> "ParamPoly":
        names = tuple(names)
        if names == self.names:
            return self
        idx = {n: i for i, n in enumerate(names)}
        out = {}
        for mono, c in self.terms.items():
            new = [0] * len(names)
            for n, e in zip(self.names, mono):
                if e:
                    if n not in idx:
                        raise ValueError(f"parameter {n} missing from {names}")
                    new[idx[n]] = e
            out[tuple(new)] = c
        return ParamPoly(names, out)

    def _align(self, other: "ParamPoly") -> Tuple["ParamPoly", "ParamPoly"]:
        if self.names == other.names:
            return self, other
        if not other.names or other.is_constant() and not other.free_names():
            return self, other.with_names(self.names) if other.terms else ParamPoly(self.names)
        if not self.names or self.is_constant() and not self.free_names():
            return (self.with_names(other.names) if self.terms else ParamPoly(other.names)), other
        raise ValueError(f"parameter lists differ: {self.names} vs {other.names}")

    @staticmethod
    def _coerce(value, names) -> "ParamPoly":
        if isinstance(value, ParamPoly):
            return value
        return ParamPoly.const(value, names)

    # -- arithmetic --------------------------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other, self.names)
        a, b = self._align(other)
        out = dict(a.terms)
        for m, c in b.terms.items():
            if m in out:
                s = out[m] + c
                if s == 0:
                    del out[m]
                else:
                    out[m] = s
            else:
                out[m] = c
        res = ParamPoly(a.names)
        res.terms = out
        return res

    __radd__ = __add__

    def __neg__(self):
        res = ParamPoly(self.names)
        res.terms = {m: -c for m, c in self.terms.items()}
        return res

    def __sub__(self, other):
        return self + (-self._coerce(other, self.names))

    def __rsub__(self, other):
        return self._coerce(other, self.names) + (-self)

    def __mul__(self, other):
        if not isinstance(other, ParamPoly):
            if other == 0:
                return ParamPoly(self.names)
            res = ParamPoly(self.names)
            res.terms = {m: c * other for m, c in self.terms.items()}
            return res
        a, b = self._align(other)
        if len(b.terms) == 1 and not any(next(iter(b.terms))):
            return a * next(iter(b.terms.values()))
        if len(a.terms) == 1 and not any(next(iter(a.terms))):
            return b * next(iter(a.terms.values()))
        out: Dict[Monomial, Number] = {}
        for m1, c1 in a.terms.items():
            for m2, c2 in b.terms.items():
                m = tuple(x + y for x, y in zip(m1, m2))
                p = c1 * c2
                if m in out:
                    out[m] = out[m] + p
                else:
                    out[m] = p
        res = ParamPoly(a.names)
        res.terms = {m: c for m, c in out.items() if c != 0}
        return res

    __rmul__ = __mul__

    def scale(self, value: Number) -> "ParamPoly":
        return self * value

    def __truediv__(self, value: Number) -> "ParamPoly":
        if isinstance(value, ParamPoly):
            if not value.is_constant():
                raise ValueError("division by a non-constant parameter polynomial")
            value = value.constant()
        if isinstance(value, (int, Fraction)):
            inv = 1 / Fraction(value)
        else:
            inv = value.inverse()
        return self * inv

    def __pow__(self, n: int) -> "ParamPoly":
        out = ParamPoly.const(1, self.names)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, ParamPoly):
            other = ParamPoly.const(other, self.names)
        try:
            a, b = self._align(other)
        except ValueError:
            return False
        if a.terms.keys() != b.terms.keys():
            return False
        return all(a.terms[m] == b.terms[m] for m in a.terms)

    def __hash__(self):  # pragma: no cover - mutable-looking, keep unhashable semantics explicit
        raise TypeError("ParamPoly is unhashable")

    # -- evaluation --------------------------------------------------------------------
    def substitute(self, bindings: Mapping[str, Union[Number, "ParamPoly"]]) -> "ParamPoly":
        """Replace bound parameters by exact values; the parameter list is kept."""
        if not bindings:
            return self
        out = ParamPoly(self.names)
        for mono, c in self.terms.items():
            term = ParamPoly(self.names, {tuple(0 if n in bindings else e for n, e in zip(self.names, mono)): c})
            for n, e in zip(self.names, mono):
                if e and n in bindings:
                    v = bindings[n]
                    term = term * (v.with_names(self.names) if isinstance(v, ParamPoly) else v) ** e \
                        if isinstance(v, ParamPoly) else term * _pow(v, e)
            out = out + term
        return out

    def evaluate(self, values: Mapping[str, mpmath.mpc], prec: int = 53) -> mpmath.mpc:
        with mpmath.workprec(prec + 20):
            total = mpmath.mpc(0)
            for mono, c in self.terms.items():
                term = embed(c, prec + 20) if not isinstance(c, (int, Fraction)) else \
                    mpmath.mpf(Fraction(c).numerator) / Fraction(c).denominator
                for n, e in zip(self.names, mono):
                    if e:
                        if n not in values:
                            raise KeyError(f"parameter {n} is not bound")
                        v = values[n]
                        v = embed(v, prec + 20) if isinstance(v, (AlgScalar, Fraction, int)) else mpmath.mpc(v)
                        term = term * v ** e
                total += term
        with mpmath.workprec(prec):
            return +total

    def sup_bound(self, bounds: Mapping[str, Fraction], prec: int = 128) -> Fraction:
        """Rigorous upper bound of ``|p|`` over the polydisc ``|name| <= bounds[name]``."""
        total = Fraction(0)
        for mono, c in self.terms.items():
            mag = abs(Fraction(c)) if isinstance(c, (int, Fraction)) else c.abs_upper(prec)
            for n, e in zip(self.names, mono):
                if e:
                    if n not in bounds:
                        raise KeyError(f"no magnitude bound for parameter {n}")
                    mag *= Fraction(bounds[n]) ** e
            total += mag
        return total

    def linear_part(self, name: str) -> Tuple["ParamPoly", "ParamPoly"]:
        """Split ``p = coef*name + rest`` when ``p`` has degree <= 1 in ``name``."""
        k = self.names.index(name)
        coef, rest = {}, {}
        for mono, c in self.terms.items():
            if mono[k] > 1:
                raise ValueError(f"{name} enters non-linearly")
            if mono[k] == 1:
                m = list(mono)
                m[k] = 0
                coef[tuple(m)] = c
            else:
                rest[mono] = c
        return ParamPoly(self.names, coef), ParamPoly(self.names, rest)

    # -- display / json --------------------------------------------------------------------
    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for mono in sorted(self.terms):
            c = self.terms[mono]
            vars_ = "*".join(n if e == 1 else f"{n}^{e}" for n, e in zip(self.names, mono) if e)
            cs = str(c)
            parts.append(f"({cs})*{vars_}" if vars_ else f"({cs})")
        return " + ".join(parts)

    def to_json(self) -> list:
        out = []
        for mono in sorted(self.terms):
            c = self.terms[mono]
            val = c.to_json() if isinstance(c, AlgScalar) else {"re": [rat_str(c)]}
            out.append({"monomial": list(mono), "value": val})
        return out

    @staticmethod
    def from_json(data: list, names: Sequence[str], field: NumberField) -> "ParamPoly":
        terms = {}
        for item in data:
            terms[tuple(item["monomial"])] = AlgScalar.from_json(field, item["value"])
        return ParamPoly(names, terms)


def _pow(v, e):
    out = v
    for _ in range(e - 1):
        out = out * v
    return out


def as_scalar(value: Number, field: NumberField) -> "AlgScalar":
    return field.coerce(value)
