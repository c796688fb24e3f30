"""Command-line driver.

Exit codes:
    0  success
    2  configuration error (bad flags, unparsable numbers, unknown branch)
    3  obstruction (logarithmic branch, irrational resonance, inconsistent step)
    4  verification failure (a check or certificate did not pass)
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import mpmath

from .painleve import ParameterError, SystemParams, classify, dominant_balances, resonances
from .recursion import (C_CASE2, C_PUISEUX, CASE2_BRANCHES, PUISEUX_BRANCHES, ObstructionError,
                        ObstructionReport, SeriesSolution, generate_case2_series, generate_generic,
                        generate_puiseux_series, resonance_solve)
from .scalar import AlgScalar, FieldError, parse_rat, rat_str
from .series import SeriesError
from .verify import (CLOSED_FORMS, VerificationError, closed_form_series, convergence_certificate,
                     extend_solution, match_parameters, verify_solution)

SCHEMA_VERSION = 1
PRECISION_ENV = "HHPAINLEVE_PRECISION"

EXIT_OK, EXIT_CONFIG, EXIT_OBSTRUCTION, EXIT_VERIFY = 0, 2, 3, 4

BRANCHES = {
    **{name: "C = -16/5 Case 2 family" for name in CASE2_BRANCHES},
    **{name: "C = -9/8 Puiseux family" for name in PUISEUX_BRANCHES},
    "+": "generic balance, first leading root",
    "-": "generic balance, second leading root",
}


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(v):
    if isinstance(v, Fraction):
        return rat_str(v)
    if isinstance(v, AlgScalar):
        return str(v)
    if isinstance(v, (mpmath.mpf, mpmath.mpc)):
        return mpmath.nstr(v, 30)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def write_atomic(path: str, text: str):
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(payload: dict, out: Optional[str]):
    payload = dict(payload)
    payload["schema_version"] = SCHEMA_VERSION
    text = dumps(payload)
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def load_solution(path: str) -> SeriesSolution:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read solution {path}: {exc}") from exc
    if "solution" in data:
        data = data["solution"]
    return SeriesSolution.from_json(data)


def solution_payload(sol: SeriesSolution) -> dict:
    return {"kind": "series_solution", "solution": sol.to_json()}


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _rat(text: str) -> Fraction:
    try:
        return parse_rat(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _precision(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"precision must be an integer, got {text!r}") from exc
    if v < 64:
        raise argparse.ArgumentTypeError("precision must be at least 64 bits")
    return v


def _default_precision() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return 256
    try:
        return _precision(raw)
    except argparse.ArgumentTypeError as exc:
        raise ConfigError(f"{PRECISION_ENV}: {exc}") from exc


def _binding(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    name, value = text.split("=", 1)
    return name.strip(), _rat(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hhpainleve",
        description="Painleve test, series solutions and their verification for the generalized "
                    "Henon-Heiles system x'' = -lam x - 2xy, y'' = -y - x^2 + C y^2.",
        epilog="Exit codes: 0 ok, 2 configuration error, 3 obstruction, 4 verification failure. "
               f"Default precision comes from ${PRECISION_ENV} (256 bits if unset).")
    parser.add_argument("--precision", type=_precision, default=None, help="working precision in bits (>= 64)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="dominant balances, resonances and classification")
    p.add_argument("--lambda", dest="lam", type=_rat, required=True)
    p.add_argument("--C", dest="C", type=_rat, required=True)
    p.add_argument("--out")

    p = sub.add_parser("series", help="generate a series solution",
                       description="Branches: " + ", ".join(f"{k} ({v})" for k, v in sorted(BRANCHES.items())))
    p.add_argument("--lambda", dest="lam", type=_rat, required=True)
    p.add_argument("--C", dest="C", type=_rat, required=True)
    p.add_argument("--branch", default=None)
    p.add_argument("--case", choices=("Case1", "Case2"), default=None, help="balance for generic runs")
    p.add_argument("--order", type=int, default=None, help="coefficient index of the last coefficient")
    for name in ("a2", "b4", "D1", "D2"):
        p.add_argument(f"--{name}", type=_rat, default=None, help=f"bind {name} to an exact value")
    p.add_argument("--bind", type=_binding, action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--out")

    p = sub.add_parser("closed-form", help="expand a trigonometric closed form about its pole")
    p.add_argument("--which", choices=CLOSED_FORMS, default="8.1")
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--out")

    p = sub.add_parser("verify", help="residual, energy and fourth-order checks")
    p.add_argument("--solution", required=True)
    p.add_argument("--against", choices=[f"closed-form-{w}" for w in CLOSED_FORMS], default=None)
    p.add_argument("--out")

    p = sub.add_parser("converge", help="convergence certificate from coefficient bounds")
    p.add_argument("--solution", required=True)
    p.add_argument("--horizon", type=int, default=200)
    p.add_argument("--epsilon", type=_rat, default=Fraction(1, 100))
    p.add_argument("--bound", type=_binding, action="append", default=[], metavar="NAME=VALUE",
                   help="magnitude bound for a free parameter (default 1)")
    p.add_argument("--allow-exceptions", action="store_true",
                   help="grant the certificate when finitely many low coefficients exceed 1")
    p.add_argument("--out")

    p = sub.add_parser("match", help="fit free parameters of a family to a target series")
    p.add_argument("--family", required=True)
    p.add_argument("--target", required=True, help="solution file or closed-form-8.1 / closed-form-8.2")
    p.add_argument("--out")
    p.add_argument("--out-solution", help="write the family with the fitted values substituted")

    p = sub.add_parser("eval", help="evaluate a solution on a grid of tau values")
    p.add_argument("--solution", required=True)
    p.add_argument("--tau", action="append", default=[], help="tau as 're' or 're,im' (exact decimals)")
    p.add_argument("--circle", type=_rat, default=None, help="radius of an equispaced circle of points")
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--bind", type=_binding, action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")

    p = sub.add_parser("batch", help="run several command lines from a JSON list")
    p.add_argument("--config", required=True, help="JSON file holding a list of argument lists")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    return parser


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_test(args) -> int:
    p = SystemParams(args.lam, args.C)
    balances = dominant_balances(p)
    rows = []
    for b in balances:
        row = b.to_json()
        if not b.logarithmic:
            row["resonances"] = resonances(b, p).to_json()
        rows.append(row)
    cls = classify(p)
    payload = {"kind": "painleve_test", "params": p.to_json(), "balances": rows,
               "classification": cls.to_json()}
    if p.C == C_CASE2:
        payload["resonance_system"] = [r.to_json() for r in resonance_solve(p.lam)]
    emit(payload, args.out)
    return EXIT_OK


def _bindings(args) -> Dict[str, Fraction]:
    out = {}
    for name in ("a2", "b4", "D1", "D2"):
        v = getattr(args, name, None)
        if v is not None:
            out[name] = v
    out.update(dict(args.bind))
    return out


def cmd_series(args) -> int:
    p = SystemParams(args.lam, args.C)
    bind = _bindings(args)
    branch = args.branch
    if branch in CASE2_BRANCHES:
        if p.C != C_CASE2:
            raise ConfigError(f"branch {branch} needs C = -16/5")
        sol = generate_case2_series(p.lam, branch, bind or None, N=4 if args.order is None else args.order)
    elif branch in PUISEUX_BRANCHES:
        if p.C != C_PUISEUX:
            raise ConfigError(f"branch {branch} needs C = -9/8")
        sol = generate_puiseux_series(p.lam, 1 if branch == "puiseux-plus" else -1, bind or None,
                                      N=12 if args.order is None else args.order)
    elif branch in (None, "+", "-"):
        balance = None
        if args.case is not None:
            found = [b for b in dominant_balances(p) if b.case == args.case]
            if not found:
                raise ConfigError(f"{args.case} does not exist for C = {rat_str(p.C)}")
            balance = found[0]
        res = generate_generic(p, balance, branch or "+", 8 if args.order is None else args.order, bind or None)
        if isinstance(res, ObstructionReport):
            raise ObstructionError(res)
        sol = res
    else:
        raise ConfigError(f"unknown branch {branch!r}; choose from {sorted(BRANCHES)}")
    emit(solution_payload(sol), args.out)
    return EXIT_OK


def cmd_closed_form(args) -> int:
    emit(solution_payload(closed_form_series(args.which, args.order)), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    sol = load_solution(args.solution)
    checks = verify_solution(sol, args.against)
    ok = all(c.passed for c in checks)
    emit({"kind": "verification", "passed": ok, "checks": [c.to_json() for c in checks]}, args.out)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_converge(args) -> int:
    sol = load_solution(args.solution)
    need = {"case2": 8, "puiseux": args.horizon}.get(sol.meta.get("family"))
    if need is not None and int(sol.meta.get("order_index", 0)) < need:
        sol = extend_solution(sol, need)
    allow = args.allow_exceptions or sol.meta.get("family") == "puiseux"
    cert = convergence_certificate(sol, dict(args.bound), args.horizon, args.epsilon,
                                   allow_exceptions=allow, prec=args.precision)
    emit({"kind": "convergence_certificate", "certificate": cert.to_json()}, args.out)
    return EXIT_OK if cert.granted else EXIT_VERIFY


def _target(spec: str, family: SeriesSolution) -> SeriesSolution:
    if spec.startswith("closed-form-"):
        which = spec[len("closed-form-"):]
        return closed_form_series(which, int(family.meta.get("order_index", 4)))
    return load_solution(spec)


def cmd_match(args) -> int:
    fam = load_solution(args.family)
    target = _target(args.target, fam)
    res = match_parameters(fam, target)
    emit({"kind": "parameter_match", "match": res.to_json()}, args.out)
    if args.out_solution and res.passed:
        emit(solution_payload(fam.substitute(res.bindings)), args.out_solution)
    return EXIT_OK if res.passed else EXIT_VERIFY


def _parse_tau(text: str) -> mpmath.mpc:
    parts = text.split(",")
    if len(parts) > 2:
        raise ConfigError(f"bad tau {text!r}")
    re_ = parse_rat(parts[0])
    im_ = parse_rat(parts[1]) if len(parts) == 2 else Fraction(0)
    return mpmath.mpc(mpmath.mpf(re_.numerator) / re_.denominator, mpmath.mpf(im_.numerator) / im_.denominator)


def eval_rows(sol: SeriesSolution, taus: Sequence, bindings: Dict, prec: int) -> List[dict]:
    """One row per tau: values of x and y, a tail estimate, or an error marker."""
    digits = max(10, int(prec * 0.30103) - 2)

    def one(tau):
        with mpmath.workprec(prec):
            row = {"t_re": mpmath.nstr(mpmath.re(tau), digits), "t_im": mpmath.nstr(mpmath.im(tau), digits)}
            try:
                x, tx = sol.x.eval(tau, bindings, prec)
                y, ty = sol.y.eval(tau, bindings, prec)
            except SeriesError as exc:
                row.update({k: "" for k in ("x_re", "x_im", "y_re", "y_im", "tail_estimate")})
                row["error"] = str(exc)
                return row
            row.update({"x_re": mpmath.nstr(mpmath.re(x), digits), "x_im": mpmath.nstr(mpmath.im(x), digits),
                        "y_re": mpmath.nstr(mpmath.re(y), digits), "y_im": mpmath.nstr(mpmath.im(y), digits),
                        "tail_estimate": mpmath.nstr(max(tx, ty), 6), "error": ""})
            return row

    return [one(t) for t in taus]


def _eval_chunk(path: str, taus: List[tuple], bindings: Dict, prec: int) -> List[dict]:
    # runs in a worker process: mpmath precision is process-global state
    sol = load_solution(path)
    with mpmath.workprec(prec + 20):
        points = [mpmath.mpc(mpmath.mpf(re_), mpmath.mpf(im_)) for re_, im_ in taus]
    return eval_rows(sol, points, bindings, prec)


def eval_parallel(path: str, taus: Sequence, bindings: Dict, prec: int, jobs: int) -> List[dict]:
    digits = int(prec * 0.30103) + 10
    plain = [(mpmath.nstr(mpmath.re(t), digits), mpmath.nstr(mpmath.im(t), digits)) for t in taus]
    chunks = [plain[i::jobs] for i in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_eval_chunk, [path] * jobs, chunks, [bindings] * jobs, [prec] * jobs))
    rows: List[dict] = [None] * len(plain)  # type: ignore[list-item]
    for i, part in enumerate(parts):
        for j, row in enumerate(part):
            rows[i + j * jobs] = row
    return rows


CSV_COLUMNS = ("t_re", "t_im", "x_re", "x_im", "y_re", "y_im", "tail_estimate", "error")


def rows_to_csv(rows: List[dict]) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in CSV_COLUMNS})
    return buf.getvalue()


def cmd_eval(args) -> int:
    sol = load_solution(args.solution)
    taus = [_parse_tau(t) for t in args.tau]
    if args.circle is not None:
        with mpmath.workprec(args.precision + 20):
            r = mpmath.mpf(args.circle.numerator) / args.circle.denominator
            taus += [r * mpmath.expj(2 * mpmath.pi * (k + mpmath.mpf(1) / 2) / args.points)
                     for k in range(args.points)]
    if not taus:
        raise ConfigError("no evaluation points: pass --tau or --circle")
    bindings = dict(sol.bindings)
    bindings.update(dict(args.bind))
    missing = [n for n in sol.free_parameters if n not in bindings]
    if missing:
        raise ConfigError(f"unbound parameters: {', '.join(missing)}")
    if args.jobs > 1:
        rows = eval_parallel(args.solution, taus, bindings, args.precision, args.jobs)
    else:
        rows = eval_rows(sol, taus, bindings, args.precision)
    if args.format == "csv":
        text = rows_to_csv(rows)
        if args.out:
            write_atomic(args.out, text)
        else:
            sys.stdout.write(text)
    else:
        emit({"kind": "evaluation", "precision": args.precision, "rows": rows}, args.out)
    return EXIT_OK


def _run_captured(argv) -> dict:
    import contextlib
    import io

    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main([str(a) for a in argv])
    return {"argv": list(argv), "exit": code}


def cmd_batch(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            jobs = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read batch config: {exc}") from exc
    if not isinstance(jobs, list) or not all(isinstance(j, list) for j in jobs):
        raise ConfigError("batch config must be a list of argument lists")

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_captured, jobs))
    else:
        results = [_run_captured(j) for j in jobs]
    worst = max((r["exit"] for r in results), default=0)
    emit({"kind": "batch", "results": results}, args.out)
    return worst


COMMANDS = {"test": cmd_test, "series": cmd_series, "closed-form": cmd_closed_form, "verify": cmd_verify,
            "converge": cmd_converge, "match": cmd_match, "eval": cmd_eval, "batch": cmd_batch}


def _join_negative_values(argv: Sequence[str]) -> List[str]:
    """Glue ``--C -16/5`` into ``--C=-16/5``; argparse would read ``-16/5`` as a flag."""
    out: List[str] = []
    for tok in argv:
        if (out and len(tok) > 1 and tok[0] == "-" and (tok[1].isdigit() or tok[1] == ".")
                and out[-1].startswith("--") and "=" not in out[-1]):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        if args.precision is None:
            args.precision = _default_precision()
        return COMMANDS[args.command](args)
    except (ConfigError, ParameterError, FieldError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except ObstructionError as exc:
        emit({"kind": "obstruction", "report": exc.report.to_json()}, getattr(args, "out", None))
        return EXIT_OBSTRUCTION
    except VerificationError as exc:
        sys.stderr.write(f"verification failed: {exc}\n")
        emit({"kind": "verification", "passed": False, "first_failure": str(exc.location), "message": str(exc)},
             getattr(args, "out", None))
        return EXIT_VERIFY


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
