"""Series solutions by coefficient recursion.

With ``x = sum_s A_s tau**(alpha + s/q)`` and ``y = sum_s B_s tau**(-2 + s/q)``
the system turns into one 2x2 linear system per grid step ``s >= 1``::

    [(alpha+r)(alpha+r-1) + 2b      2a           ] [A_s]   [R1]
    [2a if alpha == -2 else 0       (r-2)(r-3) - 2Cb] [B_s] = [R2],   r = s/q

where ``a, b`` are the leading coefficients and ``R1, R2`` collect every
contribution of already known coefficients.  Steps with a vanishing
determinant are resonances; they are resolved by exact rank analysis.

Family index conventions:

* ``case2`` (C = -16/5): coefficient index ``k = s - 2``; ``b_k`` multiplies
  ``t**k`` in ``y`` and ``a_k`` multiplies ``t**(k + 1/2)`` in ``x``.
* ``puiseux`` (C = -9/8): ``n = s - 4``; both series use ``t**(n/2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .painleve import (Balance, ParameterError, SystemParams, dominant_balances, resonances)
from .scalar import (QQ, AlgScalar, NumberField, ParamPoly, alg_root, rat_str)
from .series import PSeries, common_field

Value = Union[int, Fraction, AlgScalar]

C_CASE2 = Fraction(-16, 5)
C_PUISEUX = Fraction(-9, 8)


class ObstructionError(RuntimeError):
    """A resonance step has no power-series solution (or the family is unsupported)."""

    def __init__(self, report: "ObstructionReport"):
        super().__init__(report.message)
        self.report = report


@dataclass
class ObstructionReport:
    kind: str                 # "logarithm", "conditional", "irrational"
    step: Optional[int]
    message: str
    condition: Optional[ParamPoly] = None
    resonance: Optional[str] = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "message": self.message}
        if self.step is not None:
            out["step"] = self.step
        if self.resonance is not None:
            out["resonance"] = self.resonance
        if self.condition is not None:
            out["condition"] = repr(self.condition)
        return out


@dataclass
class StepRecord:
    step: int
    det: str
    kind: str                 # "regular", "resonance"
    new_params: List[str]
    condition: Optional[ParamPoly] = None

    @property
    def status(self) -> str:
        if self.condition is None or self.condition.is_zero():
            return "consistent"
        return "inconsistent" if self.condition.is_constant() else "conditional"

    def to_json(self) -> dict:
        out = {"step": self.step, "det": self.det, "kind": self.kind, "new_params": self.new_params}
        if self.kind == "resonance":
            out["status"] = self.status
            if self.condition is not None and not self.condition.is_zero():
                out["condition"] = repr(self.condition)
        return out


@dataclass
class Family:
    """Fixed data of one balance: grid, leading terms, parameter names."""

    params: SystemParams
    case: str
    alpha: Fraction
    q: int
    lead_x: ParamPoly
    lead_y: Fraction
    field: NumberField
    names: Tuple[str, ...]
    style: str                # "case2", "puiseux", "index", "D"
    branch: str = ""
    layout: List[Tuple[int, Tuple[str, ...]]] = field(default_factory=list)

    @property
    def shift(self) -> int:
        """Grid offset of the x**2 term in the y-equation."""
        return int(self.q * (2 * self.alpha + 4))

    def x_exponent(self, s: int) -> Fraction:
        return self.alpha + Fraction(s, self.q)

    def y_exponent(self, s: int) -> Fraction:
        return -2 + Fraction(s, self.q)

    def label(self, s: int) -> str:
        if self.style == "case2":
            return f"k={s - 2}"
        if self.style in ("puiseux", "D"):
            return f"n={s - 4}"
        return f"s={s}"


@dataclass
class RecursionState:
    family: Family
    A: List[ParamPoly]
    B: List[ParamPoly]
    registry: Dict[str, Tuple[int, str]]
    records: List[StepRecord]
    bindings: Dict[str, Value]
    obstructions: List[ObstructionReport] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.A)

    @property
    def params(self) -> SystemParams:
        return self.family.params


@dataclass
class SeriesSolution:
    x: PSeries
    y: PSeries
    params: SystemParams
    names: Tuple[str, ...]
    bindings: Dict[str, Value]
    branch: str
    meta: Dict[str, object]

    @property
    def field(self) -> NumberField:
        return common_field(self.x.field, self.y.field)

    @property
    def free_parameters(self) -> Tuple[str, ...]:
        used = set()
        for s in (self.x, self.y):
            for c in s.coeffs:
                used.update(c.free_names())
        return tuple(n for n in self.names if n in used or n not in self.bindings and n in
                     self.meta.get("registry", {}))

    def substitute(self, bindings: Mapping[str, Value]) -> "SeriesSolution":
        merged = dict(self.bindings)
        merged.update(bindings)
        return SeriesSolution(self.x.substitute(bindings), self.y.substitute(bindings), self.params,
                              self.names, merged, self.branch, dict(self.meta))

    def negate_x(self) -> "SeriesSolution":
        return SeriesSolution(-self.x, self.y, self.params, self.names, dict(self.bindings),
                              self.branch + "~neg-x", dict(self.meta))

    def to_json(self) -> dict:
        f = self.field
        return {
            "params": self.params.to_json(),
            "branch": self.branch,
            "field": f.to_json(),
            "names": list(self.names),
            "bindings": {k: _value_json(v) for k, v in sorted(self.bindings.items())},
            "x": self.x.lift(f).to_json(),
            "y": self.y.lift(f).to_json(),
            "meta": self.meta,
        }

    @staticmethod
    def from_json(data: Mapping) -> "SeriesSolution":
        from .scalar import NumberField as NF, parse_rat

        f = NF.from_json(data["field"])
        params = SystemParams(parse_rat(data["params"]["lambda"]), parse_rat(data["params"]["C"]))
        bindings = {k: _value_from_json(v, f) for k, v in data.get("bindings", {}).items()}
        return SeriesSolution(PSeries.from_json(data["x"], f), PSeries.from_json(data["y"], f), params,
                              tuple(data["names"]), bindings, data.get("branch", ""),
                              dict(data.get("meta", {})))


def _value_json(v: Value):
    if isinstance(v, AlgScalar):
        if v.is_rational():
            return {"rational": rat_str(v.to_fraction())}
        return {"field": v.field.to_json(), "value": v.to_json()}
    return {"rational": rat_str(v)}


def _value_from_json(d, default_field: NumberField) -> Value:
    from .scalar import NumberField as NF, parse_rat

    if "rational" in d:
        return parse_rat(d["rational"])
    f = NF.from_json(d["field"]) if "field" in d else default_field
    return AlgScalar.from_json(f, d["value"])


# --------------------------------------------------------------------------
# the recursion kernel
# --------------------------------------------------------------------------

def _const(value, names) -> ParamPoly:
    return value if isinstance(value, ParamPoly) else ParamPoly.const(value, names)


def recursion_matrix(s: int, st: Union[RecursionState, Family]) -> List[List[ParamPoly]]:
    """The 2x2 matrix multiplying ``(A_s, B_s)`` at grid step ``s``."""
    fam = st.family if isinstance(st, RecursionState) else st
    names = fam.names
    r = Fraction(s, fam.q)
    a = fam.lead_x
    b = fam.lead_y
    C = fam.params.C
    m11 = (fam.alpha + r) * (fam.alpha + r - 1) + 2 * b
    m22 = (r - 2) * (r - 3) - 2 * C * b
    m12 = a * 2
    m21 = a * 2 if fam.alpha == -2 else ParamPoly(names)
    return [[_const(m11, names), m12], [m21, _const(m22, names)]]


def determinant(s: int, fam: Family) -> ParamPoly:
    m = recursion_matrix(s, fam)
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def rhs_convolution(s: int, st: RecursionState) -> Tuple[ParamPoly, ParamPoly]:
    """Right-hand sides at step ``s`` from coefficients with index < ``s``."""
    fam = st.family
    A, B = st.A, st.B
    names = fam.names
    if len(A) < s:
        raise ValueError(f"coefficients below step {s} are not final")
    lam, C, q = fam.params.lam, fam.params.C, fam.q
    zero = ParamPoly(names)
    # x-equation: lam*x + 2*x*y at exponent alpha - 2 + s/q
    f1 = zero
    if s - 2 * q >= 0 and lam:
        f1 = f1 + A[s - 2 * q] * lam
    f1 = f1 + _pair_sum(A, B, s, 1, s - 1) * 2
    # y-equation: y + x**2 - C*y**2 at exponent -4 + s/q
    f2 = zero
    if s - 2 * q >= 0:
        f2 = f2 + B[s - 2 * q]
    shift = fam.shift
    m = s - shift
    if m >= 0:
        if shift == 0:
            f2 = f2 + _self_sum(A, m, 1, m - 1)
        else:
            f2 = f2 + _self_sum(A, m, 0, m)
    if C:
        f2 = f2 - _self_sum(B, s, 1, s - 1) * C
    return -f1, -f2


def _pair_sum(A, B, s, lo, hi) -> ParamPoly:
    acc = ParamPoly(A[0].names)
    for i in range(lo, hi + 1):
        ai, bj = A[i], B[s - i]
        if ai.terms and bj.terms:
            acc = acc + ai * bj
    return acc


def _self_sum(A, s, lo, hi) -> ParamPoly:
    """sum_{i=lo..hi} A_i A_{s-i} using symmetry."""
    acc = ParamPoly(A[0].names)
    i, j = lo, hi
    while i < j:
        if A[i].terms and A[j].terms:
            acc = acc + A[i] * A[j] * 2
        i += 1
        j -= 1
    if i == j and A[i].terms:
        acc = acc + A[i] * A[i]
    return acc


def _is_unit(p: ParamPoly) -> bool:
    return p.is_constant() and not p.is_zero()


def _param_value(name: str, st: RecursionState) -> ParamPoly:
    names = st.family.names
    if name in st.bindings:
        return ParamPoly.const(st.family.field.coerce(st.bindings[name]), names)
    return ParamPoly.var(name, names, st.family.field.one())


def resonance_layout(fam: Family, s: int) -> Optional[Tuple[str, ...]]:
    """Components that become free at a zero-determinant step (None if regular)."""
    m = recursion_matrix(s, fam)
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if not det.is_zero():
        return None
    if all(e.is_zero() for row in m for e in row):
        return ("x", "y")
    pivot = _pivot(m)
    if pivot is None:
        raise ObstructionError(ObstructionReport(
            "unsupported", s, f"no constant pivot at step {fam.label(s)}"))
    return ("y",) if pivot[1] == 0 else ("x",)


def _pivot(m) -> Optional[Tuple[int, int]]:
    for col in (0, 1):
        for row in (0, 1):
            if _is_unit(m[row][col]):
                return row, col
    return None


def solve_step(s: int, st: RecursionState) -> StepRecord:
    """Solve grid step ``s`` and append ``A_s, B_s`` to the state."""
    fam = st.family
    m = recursion_matrix(s, st)
    r1, r2 = rhs_convolution(s, st)
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if not det.is_zero():
        if not det.is_constant():
            raise ObstructionError(ObstructionReport(
                "unsupported", s, f"determinant depends on free parameters at {fam.label(s)}"))
        d = det.constant()
        x = (m[1][1] * r1 - m[0][1] * r2) / d
        y = (m[0][0] * r2 - m[1][0] * r1) / d
        st.A.append(x)
        st.B.append(y)
        rec = StepRecord(s, str(d), "regular", [])
        st.records.append(rec)
        return rec
    new = []
    if all(e.is_zero() for row in m for e in row):
        names = [_name_for(fam, s, "x", st), _name_for(fam, s, "y", st)]
        x, y = _param_value(names[0], st), _param_value(names[1], st)
        condition = r1 if not r1.is_zero() else r2
        for n, comp in zip(names, ("x", "y")):
            st.registry[n] = (s, comp)
            new.append(n)
        st.A.append(x)
        st.B.append(y)
        rec = StepRecord(s, "0", "resonance", new, condition)
    else:
        pr, pc = _pivot(m)
        other = 1 - pr
        rp = (r1, r2)[pr]
        ro = (r1, r2)[other]
        piv = m[pr][pc].constant()
        mu = m[other][pc] / piv
        condition = ro - mu * rp
        if pc == 0:
            name = _name_for(fam, s, "y", st)
            y = _param_value(name, st)
            x = (rp - m[pr][1] * y) / piv
            st.registry[name] = (s, "y")
        else:
            name = _name_for(fam, s, "x", st)
            x = _param_value(name, st)
            y = (rp - m[pr][0] * x) / piv
            st.registry[name] = (s, "x")
        new.append(name)
        st.A.append(x)
        st.B.append(y)
        rec = StepRecord(s, "0", "resonance", new, condition)
    st.records.append(rec)
    if rec.status != "consistent":
        kind = "logarithm" if rec.status == "inconsistent" else "conditional"
        st.obstructions.append(ObstructionReport(
            kind, s, f"resonance step {fam.label(s)} is {rec.status}", rec.condition,
            rat_str(Fraction(s, fam.q))))
    return rec


def _name_for(fam: Family, s: int, comp: str, st: Optional[RecursionState] = None) -> str:
    if fam.style in ("case2", "index"):
        return f"{'a' if comp == 'x' else 'b'}{s - 2}"
    # sequential D-names, in order of appearance
    pos = _resonance_steps(fam)
    idx = 0
    for t, comps in pos:
        for c in comps:
            if t == s and c == comp:
                return f"D{idx}"
            idx += 1
    raise ValueError(f"step {s} is not a resonance")


def _resonance_steps(fam: Family) -> List[Tuple[int, Tuple[str, ...]]]:
    return fam.layout


def compute_layout(fam: Family, s_max: int) -> List[Tuple[int, Tuple[str, ...]]]:
    out = []
    for s in range(1, s_max + 1):
        lay = resonance_layout(fam, s)
        if lay is not None:
            out.append((s, lay))
    return out


def family_names(fam_like: Family, extra: Sequence[str] = ()) -> Tuple[str, ...]:
    out = list(extra)
    for s, comps in _resonance_steps(fam_like):
        for c in comps:
            out.append(_name_for(fam_like, s, c))
    return tuple(out)


def start_state(fam: Family, bindings: Optional[Mapping[str, Value]] = None) -> RecursionState:
    names = fam.names
    a0 = fam.lead_x
    b0 = ParamPoly.const(fam.field.coerce(fam.lead_y), names)
    return RecursionState(fam, [a0], [b0], {}, [], dict(bindings or {}))


def run_recursion(st: RecursionState, s_max: int, stop_on_obstruction: bool = True) -> RecursionState:
    while st.k <= s_max:
        solve_step(st.k, st)
        if stop_on_obstruction and st.obstructions:
            raise ObstructionError(st.obstructions[0])
    return st


def to_solution(st: RecursionState, s_max: int, branch: str, meta: Optional[dict] = None
                ) -> SeriesSolution:
    fam = st.family
    order_x = fam.x_exponent(s_max + 1)
    order_y = fam.y_exponent(s_max + 1)
    x = PSeries(fam.alpha, fam.q, st.A[:s_max + 1], order_x, fam.names, fam.field)
    y = PSeries(-2, fam.q, st.B[:s_max + 1], order_y, fam.names, fam.field)
    info = {
        "case": fam.case,
        "alpha": rat_str(fam.alpha),
        "grid": fam.q,
        "index_convention": {"case2": "k = s - 2: y at t^k, x at t^(k+1/2)",
                             "D": "n = s - 4: x and y at t^(n/2)"}.get(
                                 fam.style, "s: x at t^(alpha+s/q), y at t^(-2+s/q)"),
        "registry": {n: {"step": s, "component": c, "label": fam.label(s)}
                     for n, (s, c) in sorted(st.registry.items())},
        "resonance_steps": [r.to_json() for r in st.records if r.kind == "resonance"],
        "steps": s_max,
    }
    if meta:
        info.update(meta)
    bindings = {k: v for k, v in st.bindings.items()}
    return SeriesSolution(x, y, fam.params, fam.names, bindings, branch, info)


# --------------------------------------------------------------------------
# families
# --------------------------------------------------------------------------

def _rational_resonances(b: Balance, p: SystemParams) -> List[Fraction]:
    rep = resonances(b, p)
    bad = [r for r in rep.values if not r.is_rational]
    if bad:
        raise ObstructionError(ObstructionReport(
            "irrational", None, f"irrational resonance {bad[0]} on {b.case}", resonance=str(bad[0])))
    return rep.rational_values()


def _grid_for(b: Balance, p: SystemParams) -> int:
    rs = _rational_resonances(b, p)
    q = 1
    for r in rs:
        q = q * r.denominator // math.gcd(q, r.denominator)
    if q not in (1, 2):
        raise ObstructionError(ObstructionReport(
            "unsupported", None, f"resonance grid 1/{q} is not supported"))
    return q


def make_family(p: SystemParams, balance: Balance, lead_x: Optional[Value] = None,
                style: Optional[str] = None, branch: str = "", extra_names: Sequence[str] = ()
                ) -> Family:
    """Family for ``balance``; ``lead_x`` None keeps the Case 2 coefficient symbolic as ``c1``."""
    if balance.logarithmic:
        raise ObstructionError(ObstructionReport("logarithm", 0, "logarithmic leading balance"))
    if not balance.alpha.is_rational:
        raise ObstructionError(ObstructionReport(
            "irrational", None, f"irrational exponent alpha = {balance.alpha}"))
    q = _grid_for(balance, p)
    alpha = balance.alpha.value()
    if style is None:
        style = "index" if q == 1 else "D"
    fields = [QQ]
    if lead_x is None:
        if balance.case != "Case2":
            lead_x = balance.leading_x[0]
        else:
            extra_names = ("c1",) + tuple(extra_names)
    if isinstance(lead_x, AlgScalar):
        fields.append(lead_x.field)
    fld = common_field(*fields)
    tmp = Family(p, balance.case, alpha, q, ParamPoly(()), balance.leading_y, fld, (), style, branch)
    # the matrix structure does not depend on the value of the leading x coefficient
    probe = ParamPoly.const(fld.one(), ()) if lead_x is None else ParamPoly.const(fld.coerce(lead_x), ())
    tmp.lead_x = probe
    s_top = int(max(_rational_resonances(balance, p)) * q)
    tmp.layout = compute_layout(tmp, s_top)
    names = family_names(tmp, extra_names)
    if lead_x is None:
        lx = ParamPoly.var("c1", names, fld.one())
    else:
        lx = ParamPoly.const(fld.coerce(lead_x), names)
    return Family(p, balance.case, alpha, q, lx, balance.leading_y, fld, names, style, branch,
                  tmp.layout)


def _balance(p: SystemParams, case: str) -> Balance:
    for b in dominant_balances(p):
        if b.case == case:
            return b
    raise ParameterError(f"{case} balance does not exist for C = {p.C}")


def determinant_zeros(p: SystemParams, case: str, s_max: int) -> List[int]:
    """Grid steps ``1..s_max`` where the recursion determinant vanishes."""
    b = _balance(p, case)
    fam = make_family(p, b)
    return [s for s in range(1, s_max + 1) if determinant(s, fam).is_zero()]


# -- compatibility (Painleve test proper) --------------------------------------

@dataclass
class CompatibilityResult:
    case: str
    compatible: bool
    kind: str
    steps: List[StepRecord]
    first_failure: Optional[ObstructionReport]

    def to_json(self) -> dict:
        out = {"case": self.case, "compatible": self.compatible, "kind": self.kind,
               "resonance_steps": [r.to_json() for r in self.steps if r.kind == "resonance"]}
        if self.first_failure is not None:
            out["first_failure"] = self.first_failure.to_json()
        return out


def compatibility_check(p: SystemParams, balance: Balance) -> CompatibilityResult:
    """Run the recursion through the last positive resonance with every free datum symbolic."""
    fam = make_family(p, balance)
    res = _rational_resonances(balance, p)
    s_max = int(max(res) * fam.q)
    st = run_recursion(start_state(fam), s_max, stop_on_obstruction=False)
    if not st.obstructions:
        return CompatibilityResult(balance.case, True, "ok", st.records, None)
    first = st.obstructions[0]
    return CompatibilityResult(balance.case, False, first.kind, st.records, first)


def generate_generic(p: SystemParams, balance: Optional[Balance] = None, branch: str = "+",
                     N: int = 8, bindings: Optional[Mapping[str, Value]] = None
                     ) -> Union[SeriesSolution, ObstructionReport]:
    """Series for an arbitrary rational balance, or the first obstruction met."""
    if balance is None:
        balance = dominant_balances(p)[0]
    try:
        lead = None
        if balance.case == "Case1":
            lead = balance.leading_x[0] if branch in ("+", "", None) else balance.leading_x[1]
        fam = make_family(p, balance, lead, branch=branch)
        st = run_recursion(start_state(fam, bindings), N)
    except ObstructionError as exc:
        return exc.report
    return to_solution(st, N, branch)


# -- the C = -16/5 Case 2 family ---------------------------------------------------

@dataclass
class ResonanceRoot:
    c1_fourth: AlgScalar
    b2: AlgScalar
    equations: Tuple[ParamPoly, ParamPoly]

    def to_json(self) -> dict:
        return {"c1^4": str(self.c1_fourth), "b2": str(self.b2)}


def resonance_equations(lam: Fraction) -> Tuple[ParamPoly, ParamPoly]:
    """The two conditions at ``k = 2`` as polynomials in ``(c1, b2)``.

    The first is the compatibility of the x-row, the second defines ``b2``.
    """
    p = SystemParams(Fraction(lam), C_CASE2)
    fam = make_family(p, _balance(p, "Case2"), None, style="case2")
    st = start_state(fam)
    run_recursion(st, 3)
    r1, r2 = rhs_convolution(4, st)
    m = recursion_matrix(4, st)
    names = ("c1", "b2")
    c1 = ParamPoly.var("c1", names)
    b2 = ParamPoly.var("b2", names)

    def only_c1(poly: ParamPoly) -> ParamPoly:
        k = poly.names.index("c1")
        out = {}
        for mono, v in poly.terms.items():
            if any(e for i, e in enumerate(mono) if i != k):
                raise ValueError("unexpected parameter in resonance equations")
            out[(mono[k], 0)] = v
        return ParamPoly(names, out)

    r1c, r2c = only_c1(r1), only_c1(r2)
    m12 = only_c1(m[0][1])
    m22 = m[1][1].constant()
    eq_compat = m12 * b2 - r1c            # M11 = 0 at this step
    eq_b2 = b2 * m22 - r2c
    return eq_compat, eq_b2


def resonance_solve(lam) -> List[ResonanceRoot]:
    """Nonzero solutions ``(c1**4, b2)`` of the ``k = 2`` resonance conditions."""
    lam = Fraction(lam)
    eq1, eq2 = resonance_equations(lam)
    # eq2: m22*b2 = P(c1^4); eq1: c1*(2*b2 - Q(c1^4)) after factoring c1
    b2_terms: Dict[int, AlgScalar] = {}
    m22 = None
    for (e_c, e_b), v in eq2.terms.items():
        if e_b == 1:
            m22 = v
        else:
            if e_c % 4:
                raise ValueError("b2 is not a polynomial in c1**4")
            b2_terms[e_c // 4] = -v
    b2_poly = {k: v / m22 for k, v in b2_terms.items()}   # b2 = sum b2_poly[k] * u**k
    coef_b2 = None
    rest: Dict[int, AlgScalar] = {}
    for (e_c, e_b), v in eq1.terms.items():
        if e_b == 1:
            if e_c != 1:
                raise ValueError("unexpected b2 coupling")
            coef_b2 = v
        else:
            if e_c % 4 != 1:
                raise ValueError("compatibility is not c1 times a polynomial in c1**4")
            rest[(e_c - 1) // 4] = rest.get((e_c - 1) // 4, 0) + v
    # after dividing by c1: coef_b2 * b2(u) + rest(u) = 0
    poly: Dict[int, object] = dict(rest)
    for k, v in b2_poly.items():
        poly[k] = poly.get(k, 0) + coef_b2 * v
    deg = max(k for k, v in poly.items() if v != 0)
    coeffs = [QQ.coerce(poly.get(k, 0)).to_fraction() for k in range(deg + 1)]
    roots = _solve_rational_poly(coeffs)
    out = []
    for u in roots:
        b2v = sum((u ** k * v for k, v in b2_poly.items()), u.field.zero())
        out.append(ResonanceRoot(u, b2v, (eq1, eq2)))
    for root in out:
        if not verify_resonance_root(root, eq1, eq2):
            raise ArithmeticError("resonance root failed exact re-verification")
    if not out:
        raise ObstructionError(ObstructionReport("conditional", 4, "no nonzero c1 solves the k=2 system"))
    return out


def _solve_rational_poly(coeffs: List[Fraction]) -> List[AlgScalar]:
    """Roots of a rational polynomial of degree <= 2, ordered with the +sqrt root first."""
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) == 2:
        return [QQ(-coeffs[0] / coeffs[1])]
    if len(coeffs) != 3:
        raise ValueError("expected a quadratic in c1**4")
    c, b, a = coeffs
    disc = b * b - 4 * a * c
    if disc == 0:
        return [QQ(-b / (2 * a))]
    sq, fld = alg_root(disc, 2)
    plus = (sq - b) / (2 * a)
    minus = (-sq - b) / (2 * a)
    return [plus, minus]


def verify_resonance_root(root: ResonanceRoot, eq1: ParamPoly, eq2: ParamPoly) -> bool:
    """Exact substitution of ``c1**4 = u`` and ``b2`` into both conditions (eq1 divided by c1)."""
    u, b2 = root.c1_fourth, root.b2
    f = common_field(u.field, b2.field)
    u, b2 = f.coerce(u), f.coerce(b2)
    total1 = f.zero()
    for (e_c, e_b), v in eq1.terms.items():
        total1 = total1 + f.coerce(v) * u ** ((e_c - 1) // 4) * b2 ** e_b
    total2 = f.zero()
    for (e_c, e_b), v in eq2.terms.items():
        total2 = total2 + f.coerce(v) * u ** (e_c // 4) * b2 ** e_b
    return total1.is_zero() and total2.is_zero()


CASE2_BRANCHES = {
    # name: (root index of c1^4, multiply the principal fourth root by i)
    "real-plus": (0, False),
    "real-i": (0, True),
    "c2-plus": (1, False),
    "c2-i": (1, True),
}


def case2_leading(lam, branch: str) -> Tuple[AlgScalar, ResonanceRoot]:
    """The leading coefficient ``c1`` selected by a branch name or ``(root, approx)`` pair."""
    roots = resonance_solve(lam)
    if branch in CASE2_BRANCHES:
        idx, times_i = CASE2_BRANCHES[branch]
        if idx >= len(roots):
            raise ParameterError(f"branch {branch} needs a second resonance root")
        root = roots[idx]
        principal, _ = alg_root(root.c1_fourth, 4)
        if times_i:
            import mpmath

            z = principal.embed(64) * 1j
            c1, _ = alg_root(root.c1_fourth, 4, branch=z)
        else:
            c1 = principal
        return c1, root
    raise ParameterError(f"unknown Case 2 branch {branch!r}; choose from {sorted(CASE2_BRANCHES)}")


def generate_case2_series(lam, branch: str = "real-plus", bindings: Optional[Mapping[str, Value]] = None,
                          N: int = 4) -> SeriesSolution:
    """Series of the C = -16/5 Case 2 family through coefficient index ``k = N``."""
    lam = Fraction(lam)
    p = SystemParams(lam, C_CASE2)
    c1, root = case2_leading(lam, branch)
    fam = make_family(p, _balance(p, "Case2"), c1, style="case2", branch=branch)
    s_max = N + 2
    st = start_state(fam, bindings)
    run_recursion(st, s_max)
    b2 = st.B[4] if len(st.B) > 4 else None
    meta = {"c1": str(c1), "c1^4": str(root.c1_fourth), "family": "case2",
            "order_index": N}
    if b2 is not None and not (b2 - ParamPoly.const(fam.field.coerce(root.b2), fam.names)).is_zero():
        raise ArithmeticError("b2 from the recursion disagrees with the resonance solution")
    return to_solution(st, s_max, branch, meta)


# -- the C = -9/8 Puiseux family ----------------------------------------------------

PUISEUX_BRANCHES = {"puiseux-plus": 0, "puiseux-minus": 1}


def puiseux_family(lam, sign: int = 1) -> Family:
    p = SystemParams(Fraction(lam), C_PUISEUX)
    b = _balance(p, "Case1")
    lead = b.leading_x[0] if sign > 0 else b.leading_x[1]
    return make_family(p, b, lead, style="D", branch="puiseux-plus" if sign > 0 else "puiseux-minus")


def puiseux_discovery(lam, sign: int = 1, n_max: int = 12) -> RecursionState:
    """Run with every resonance parameter symbolic and record all compatibility conditions."""
    fam = puiseux_family(lam, sign)
    st = start_state(fam)
    return run_recursion(st, n_max + 4, stop_on_obstruction=False)


def generate_puiseux_series(lam, sign: int = 1, bindings: Optional[Mapping[str, Value]] = None,
                            N: int = 12) -> SeriesSolution:
    """Puiseux series for C = -9/8 through ``t**(N/2)``.

    The resonance at ``t**(-1/2)`` introduces a parameter ``D0``; when later
    resonance steps are only conditionally compatible in ``D0`` it is bound
    to zero (the caller may override through ``bindings``).
    """
    fam = puiseux_family(lam, sign)
    probe = puiseux_discovery(lam, sign, max(N, 8))
    conditions = [o for o in probe.obstructions]
    bind = dict(bindings or {})
    note = "D0 free at every resonance step"
    if conditions:
        involved = set()
        for o in conditions:
            if o.kind == "logarithm":
                raise ObstructionError(o)
            if o.condition is not None:
                involved.update(o.condition.free_names())
        if "D0" in involved and "D0" not in bind:
            bind["D0"] = 0
            note = "later resonance steps are compatible only for D0 = 0; D0 bound to 0"
    st = start_state(fam, bind)
    run_recursion(st, N + 4)
    meta = {"family": "puiseux", "order_index": N,
            "discovery": {"conditions": [o.to_json() for o in conditions], "resolution": note}}
    return to_solution(st, N + 4, fam.branch, meta)
