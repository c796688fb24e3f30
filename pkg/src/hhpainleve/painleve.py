"""Dominant balances, resonances and integrability classification.

The system is ``x'' = -lam*x - 2*x*y``, ``y'' = -y - x**2 + C*y**2``.  Near a
movable singularity ``x ~ a*tau**alpha``, ``y ~ b*tau**(-2)``; two balances
exist:

* Case 1: ``alpha = -2``, ``a = +-3*sqrt(2 + C)``, ``b = -3``, resonances
  ``-1, 6`` and the roots of ``r**2 - 5*r + 6*(2 + C) = 0``.
* Case 2: ``alpha = (1 - sqrt(1 - 48/C))/2`` with ``a`` arbitrary and
  ``b = 6/C``; resonances ``-1, 0, 6, 1 - 2*alpha``.  It exists only when
  ``-2 < alpha < 0``, i.e. for ``C < -2``.

Linearizing the Case 2 balance gives ``r*(r + 2*alpha - 1)`` for the x-row and
``(r - 6)*(r + 1)`` for the y-row, so the non-trivial resonance pairs with
the alpha branch as ``r = 1 - 2*alpha``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .scalar import AlgScalar, QQ, _rational_root, alg_root, rat_str


class ParameterError(ValueError):
    """Invalid system parameters for the requested operation."""


@dataclass(frozen=True)
class SystemParams:
    lam: Fraction
    C: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lam", Fraction(self.lam))
        object.__setattr__(self, "C", Fraction(self.C))
        if self.C == 0:
            raise ParameterError("C must be nonzero")

    def to_json(self) -> dict:
        return {"lambda": rat_str(self.lam), "C": rat_str(self.C)}


@dataclass(frozen=True)
class QuadNumber:
    """Exact value ``p + s*sqrt(d)`` with rational ``p, s, d``."""

    p: Fraction
    s: Fraction = Fraction(0)
    d: Fraction = Fraction(0)

    @classmethod
    def make(cls, p, s=0, d=0) -> "QuadNumber":
        p, s, d = Fraction(p), Fraction(s), Fraction(d)
        if s == 0 or d == 0:
            return cls(p)
        root = _rational_root(d, 2) if d > 0 else None
        if root is not None:
            return cls(p + s * root)
        return cls(p, s, d)

    @property
    def is_rational(self) -> bool:
        return self.s == 0

    @property
    def is_real(self) -> bool:
        return self.s == 0 or self.d > 0

    def value(self) -> Fraction:
        if not self.is_rational:
            raise ValueError(f"{self} is not rational")
        return self.p

    def approx(self) -> complex:
        import cmath

        return complex(self.p) + float(self.s) * cmath.sqrt(float(self.d))

    def __str__(self):
        if self.is_rational:
            return rat_str(self.p)
        sign = "+" if self.s > 0 else "-"
        return f"{rat_str(self.p)} {sign} {rat_str(abs(self.s))}*sqrt({rat_str(self.d)})"

    def to_json(self):
        if self.is_rational:
            return {"value": rat_str(self.p), "rational": True}
        return {"p": rat_str(self.p), "s": rat_str(self.s), "d": rat_str(self.d), "rational": False,
                "approx": repr(self.approx())}


@dataclass
class Balance:
    case: str                       # "Case1" or "Case2"
    alpha: QuadNumber
    beta: Fraction
    leading_x: List[AlgScalar]      # empty list means "arbitrary" (Case 2)
    leading_y: Fraction
    logarithmic: bool = False
    notes: List[str] = field(default_factory=list)

    @property
    def arbitrary_x(self) -> bool:
        return self.case == "Case2"

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "alpha": self.alpha.to_json(),
            "beta": rat_str(self.beta),
            "leading_x": "arbitrary" if self.arbitrary_x else [str(a) for a in self.leading_x],
            "leading_y": rat_str(self.leading_y),
            "logarithmic": self.logarithmic,
            "notes": list(self.notes),
        }


@dataclass
class ResonanceReport:
    case: str
    values: List[QuadNumber]
    multiplicities: Dict[str, int]
    notes: Dict[str, str]

    @property
    def all_rational(self) -> bool:
        return all(r.is_rational for r in self.values)

    def rational_values(self) -> List[Fraction]:
        return sorted(r.value() for r in self.values if r.is_rational)

    def positive_rational(self) -> List[Fraction]:
        return [r for r in self.rational_values() if r > 0]

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "resonances": [r.to_json() for r in self.values],
            "all_rational": self.all_rational,
            "multiplicities": dict(sorted(self.multiplicities.items())),
            "notes": dict(sorted(self.notes.items())),
        }


def case2_discriminant(p: SystemParams) -> Fraction:
    return 1 - Fraction(48) / p.C


def dominant_balances(p: SystemParams) -> List[Balance]:
    """Both dominant behaviours admissible for ``p`` (Case 2 only when ``C < -2``)."""
    out: List[Balance] = []
    two_c = 2 + p.C
    if two_c == 0:
        out.append(Balance("Case1", QuadNumber.make(-2), Fraction(-2), [QQ(0)], Fraction(-3),
                           logarithmic=True,
                           notes=["leading x coefficient vanishes; the dominant term needs a logarithm"]))
    else:
        root, _ = alg_root(two_c, 2)
        out.append(Balance("Case1", QuadNumber.make(-2), Fraction(-2), [root * 3, root * -3],
                           Fraction(-3)))
    D = case2_discriminant(p)
    # alpha = (1 - sqrt(D))/2 must satisfy -2 < alpha < 0; the + root is never negative
    alpha = QuadNumber.make(Fraction(1, 2), Fraction(-1, 2), D)
    if D > 1 and D < 25:
        out.append(Balance("Case2", alpha, Fraction(-2), [], Fraction(6) / p.C,
                           notes=["alpha = (1 + sqrt(1 - 48/C))/2 has nonnegative real part and is excluded"]))
    return out


def resonances(b: Balance, p: SystemParams) -> ResonanceReport:
    if b.logarithmic:
        raise ParameterError("resonances are undefined for a logarithmic balance")
    notes = {"-1": "position of the singularity t0"}
    if b.case == "Case1":
        disc = 1 - 24 * (1 + p.C)
        vals = [QuadNumber.make(-1), QuadNumber.make(6),
                QuadNumber.make(Fraction(5, 2), Fraction(1, 2), disc),
                QuadNumber.make(Fraction(5, 2), Fraction(-1, 2), disc)]
    else:
        D = case2_discriminant(p)
        notes["0"] = "arbitrary leading x coefficient c1"
        vals = [QuadNumber.make(-1), QuadNumber.make(0), QuadNumber.make(6),
                QuadNumber.make(0, 1, D)]  # 1 - 2*alpha = +sqrt(D) for the admissible alpha
    mult: Dict[str, int] = {}
    for v in vals:
        mult[str(v)] = mult.get(str(v), 0) + 1
    return ResonanceReport(b.case, vals, mult, notes)


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------

KNOWN_INTEGRABLE = {
    "i": (Fraction(1), Fraction(-1)),
    "ii": (None, Fraction(-6)),
    "iii": (Fraction(1, 16), Fraction(-16)),
}


@dataclass
class Classification:
    label: str
    detail: Dict[str, object]

    def to_json(self) -> dict:
        return {"label": self.label, "detail": self.detail}


def _known_label(p: SystemParams) -> Optional[str]:
    for name, (lam, C) in KNOWN_INTEGRABLE.items():
        if p.C == C and (lam is None or p.lam == lam):
            return name
    return None


def classify(p: SystemParams) -> Classification:
    """Integrability verdict from rationality of alpha/resonances and resonance compatibility."""
    from .recursion import compatibility_check

    balances = dominant_balances(p)
    detail: Dict[str, object] = {"params": p.to_json(), "balances": {}}
    if any(b.logarithmic for b in balances):
        detail["reason"] = "Case 1 leading coefficient vanishes at C = -2"
        return Classification("LogarithmicBranch", detail)
    rational: Dict[str, bool] = {}
    half_integer = False
    for b in balances:
        rep = resonances(b, p)
        ok = rep.all_rational and b.alpha.is_rational
        rational[b.case] = ok
        if ok:
            half_integer |= any(r.denominator != 1 for r in rep.rational_values())
        detail["balances"][b.case] = {"alpha": str(b.alpha), "resonances": [str(r) for r in rep.values],
                                      "rational": ok}
    detail["puiseux_eligible"] = half_integer
    cases = [b.case for b in balances]
    if all(rational.values()):
        failures = {}
        for b in balances:
            res = compatibility_check(p, b)
            detail["balances"][b.case]["compatibility"] = res.to_json()
            if not res.compatible:
                failures[b.case] = res
        if not failures:
            name = _known_label(p)
            return Classification(f"IntegrableCandidate({name or '?'})", detail)
        if any(f.kind == "logarithm" for f in failures.values()):
            detail["reason"] = "a resonance step is inconsistent; logarithmic terms are needed"
            return Classification("LogarithmicBranch", detail)
        failing = sorted(failures)[0]
        detail["reason"] = f"{failing} resonance conditions restrict the free parameters"
        return Classification(f"NonintegrableRational{failing}", detail)
    if rational.get("Case1"):
        return Classification("NonintegrableRationalCase1", detail)
    if rational.get("Case2"):
        return Classification("NonintegrableRationalCase2", detail)
    return Classification("NonintegrableIrrational", detail)
