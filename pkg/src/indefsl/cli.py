"""Command-line interface.

Exit codes: 0 success or theorem holds, 2 theorem violated, 3 inconclusive,
1 usage or numerical error. JSON goes to stdout; CSV traces go to files
given with ``--csv`` (or stdout where noted).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .coefficients import IndefiniteProblem, load_problem
from .counting import BMINUS, BPLUS, NEG_BMINUS, CountReport, count_in_interval, locate_eigenvalues
from .errors import IndefSLError
from .matching import eigenvalues_A, eigenvalues_JA, eigenvalues_JB, scan
from .weyl import half_line_shot

SCHEMA_VERSION = "1"
HALF_PI = 0.5 * math.pi


@dataclass
class RunManifest:
    subcommand: str
    problem: str
    flags: dict
    versions: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    schema: str = SCHEMA_VERSION

    @classmethod
    def create(cls, args, problem: IndefiniteProblem | None) -> "RunManifest":
        flags = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
        import numba
        import scipy

        versions = {"indefsl": __version__, "python": platform.python_version(), "numpy": np.__version__,
                    "scipy": scipy.__version__, "numba": numba.__version__}
        return cls(args.command, problem.digest if problem else "", flags, versions)


# ---------------------------------------------------------------- JSON


def _num(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = obj.to_json() if hasattr(obj, "to_json") else dataclasses.asdict(obj)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [dumps(v, indent, _level + 1) for v in obj]
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(items) + "]"
        return "[\n" + ",\n".join(inner + s for s in items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _emit(payload: dict, manifest: RunManifest, t0: float) -> None:
    manifest.timing = {"wall_seconds": time.perf_counter() - t0}
    sys.stdout.write(dumps({**payload, "manifest": dataclasses.asdict(manifest)}) + "\n")


# ------------------------------------------------------------- helpers


def parse_interval(text: str) -> tuple[float, float]:
    try:
        a, b = (float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"interval must be 'a,b', got {text!r}") from None
    if not a < b:
        raise argparse.ArgumentTypeError(f"interval needs a < b, got {text!r}")
    return a, b


def _load(path: str) -> IndefiniteProblem:
    problem = load_problem(path)
    env = os.environ.get("INDEFSL_MAX_X")
    if env:
        policy = dataclasses.replace(problem.truncation, max_X=float(env))
        problem = dataclasses.replace(problem, truncation=policy)
    return problem


def _ja_report(problem, a, b, tol) -> CountReport:
    """JA on (-b,-a) and (a,b) for a >= 0; on (a,b) split at zero otherwise."""
    if a >= 0.0:
        return eigenvalues_JA(problem, a, b, tol)
    ivs = [(a, min(b, 0.0))] + ([(0.0, b)] if b > 0.0 else [])
    zeros, X = [], 0.0
    for lo, hi in ivs:
        s = scan(problem, "M", lo, hi, tol=tol)
        zeros += s.zeros
        X = max(X, s.X)
    return CountReport("JA", ivs, len(zeros), zeros, X, True, None, "matching")


def operator_report(problem, operator: str, a: float, b: float, tol: float) -> CountReport:
    if operator == "A":
        return eigenvalues_A(problem, a, b, tol)
    if operator == "JA":
        return _ja_report(problem, a, b, tol)
    if operator == "Bplus":
        return locate_eigenvalues(problem, BPLUS, a, b, tol)
    if operator == "Bminus":
        return locate_eigenvalues(problem, BMINUS, a, b, tol)
    if operator == "Bminusneg":
        return locate_eigenvalues(problem, NEG_BMINUS, a, b, tol)
    if operator == "B":
        rp = count_in_interval(problem, BPLUS, a, b)
        rm = count_in_interval(problem, BMINUS, a, b)
        ok = rp.converged and rm.converged
        return CountReport("B", [(a, b)], rp.count + rm.count if ok else None, [], max(rp.X or 0, rm.X or 0),
                           ok, None, rp.method, {"n_B_plus": rp.count, "n_B_minus": rm.count})
    if operator == "JB":
        if a < 0.0:
            raise ValueError("JB interval must be given by its positive half a,b with a >= 0")
        return eigenvalues_JB(problem, a, b, tol)
    raise ValueError(f"unknown operator {operator!r}")


# ---------------------------------------------------------- subcommands


def cmd_count(args, problem, t0, manifest) -> int:
    a, b = args.interval
    rep = operator_report(problem, args.operator, a, b, args.tol)
    _emit({"report": rep.to_json()}, manifest, t0)
    return 0 if rep.converged else 3


def cmd_trace(args, problem, t0, manifest) -> int:
    a, b = args.interval
    X = args.cutoff or problem.truncation.X0
    fields = ["lambda", "theta_plus", "m_plus", "theta_minus_reflected", "M", "D", "delta"]
    rows = []
    for lam in np.linspace(a, b, args.points):
        tp = half_line_shot(problem, "plus", lam, X).phi
        tmr = half_line_shot(problem, "minus", -lam, X).phi
        tm = half_line_shot(problem, "minus", lam, X).phi
        mp = math.inf if tp == HALF_PI else math.tan(tp)
        from .matching import _combine

        M, _ = _combine(tp, tmr)
        D, _ = _combine(tp, tm)
        delta = (tp - tmr + HALF_PI) % math.pi - HALF_PI
        rows.append([lam, tp, mp, tmr, M, D, delta])
    out = open(args.csv, "w", newline="") if args.csv else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(fields)
        for r in rows:
            w.writerow([format(float(v), ".17g") for v in r])
    finally:
        if args.csv:
            out.close()
    if args.solution is not None:
        from .ode import integrate

        _, tr = integrate(problem, args.side, args.solution, (0.0, 1.0), X, direction="inward", trace=True)
        tr.to_csv(args.solution_csv)
    if args.csv:
        _emit({"csv": args.csv, "columns": fields, "X": X, "points": args.points}, manifest, t0)
    return 0


def cmd_verify(args, problem, t0, manifest) -> int:
    from .theorems import THEOREMS, max_discrepancy, run_suite, verify

    if args.all:
        rows = run_suite(args.cases, args.seed, args.workers)
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(rows[0].CSV_FIELDS)
        for r in rows:
            w.writerow(["" if v is None else v for v in r.csv_row()])
        verdicts = [r.thm41 for r in rows] + [r.lemma22iv for r in rows]
        code = 2 if "violated" in verdicts else 3 if "inconclusive" in verdicts else 0
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                fh.write(buf.getvalue())
            _emit({"cases": len(rows), "violations": verdicts.count("violated"),
                   "inconclusive": verdicts.count("inconclusive"), "max_discrepancy": max_discrepancy(rows),
                   "csv": args.csv}, manifest, t0)
        else:
            sys.stdout.write(buf.getvalue())
        return code
    if problem is None or args.theorem is None:
        raise ValueError(f"verify needs --problem and --theorem {{{'|'.join(THEOREMS)}}}, or --all")
    kw = {"N": args.N} if args.theorem == "accumulate" else {}
    rep = verify(problem, args.theorem, args.interval, **kw)
    _emit({"report": rep.to_json()}, manifest, t0)
    return rep.exit_code


def cmd_bands(args, problem, t0, manifest) -> int:
    from .periodic import band_edges, gap_function

    bs = band_edges(problem, args.lambda_max)
    lam_max = args.lambda_max or bs.lam_max
    payload = {"bands": bs.to_json()}
    if args.csv:
        lo = bs.lambda1 - 0.05 * (lam_max - bs.lambda1)
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "Delta"])
            for lam in np.linspace(lo, lam_max, args.points):
                w.writerow([format(float(lam), ".17g"), format(gap_function(problem, lam)[1], ".17g")])
        payload["csv"] = args.csv
    _emit(payload, manifest, t0)
    return 0


ORACLE_OPERATORS = {"A": "A", "JA": "JA", "Bplus": "B+", "Bminus": "B-", "Bminusneg": "-B-"}


def cmd_oracle(args, problem, t0, manifest) -> int:
    from .oracle import oracle_counts, periodic_edges

    if args.periodic:
        lam_max = args.interval[1] if args.interval else 100.0
        edges = periodic_edges(problem, args.grid, lam_max, not args.no_extrapolate)
        _emit({"periodic": edges["periodic"].tolist(), "antiperiodic": edges["antiperiodic"].tolist(),
               "grid": args.grid}, manifest, t0)
        return 0
    if args.interval is None:
        raise ValueError("oracle needs --interval a,b")
    rep = oracle_counts(problem, ORACLE_OPERATORS[args.operator], args.interval, args.cutoff or 30.0, args.grid)
    _emit({"report": rep.to_json()}, manifest, t0)
    return 0


# -------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="indefsl", description="Eigenvalue counting for indefinite Sturm-Liouville problems.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, problem_required=True):
        p.add_argument("--problem", required=problem_required, help="problem JSON file")
        return p

    ops = ["A", "JA", "Bplus", "Bminus", "Bminusneg", "B", "JB"]
    for name, choices in (("count", ops), ("eigenvalues", ["A", "JA"])):
        p = common(sub.add_parser(name, help=f"{name} of an operator in an interval"))
        p.add_argument("--operator", required=True, choices=choices)
        p.add_argument("--interval", required=True, type=parse_interval)
        p.add_argument("--tol", type=float, default=1e-10)
        p.set_defaults(func=cmd_count)

    p = common(sub.add_parser("trace", help="CSV of boundary angles and matching functions"))
    p.add_argument("--interval", required=True, type=parse_interval)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--cutoff", type=float, default=None, help="truncation X (default: problem X0)")
    p.add_argument("--csv", default=None, help="output file (default stdout)")
    p.add_argument("--solution", type=float, default=None, help="also trace the solution at this lambda")
    p.add_argument("--side", choices=["plus", "minus"], default="plus")
    p.add_argument("--solution-csv", default="solution.csv")
    p.set_defaults(func=cmd_trace)

    p = common(sub.add_parser("verify", help="check a theorem or run the seeded suite"), problem_required=False)
    p.add_argument("--theorem", choices=["thm41", "lemma22iv", "thm44", "interlace", "accumulate", "gap"])
    p.add_argument("--interval", type=parse_interval, default=None)
    p.add_argument("--N", type=int, default=20, help="accumulation threshold")
    p.add_argument("--all", action="store_true", help="run the seeded random-well suite")
    p.add_argument("--cases", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", default=None, help="suite CSV file (default stdout)")
    p.set_defaults(func=cmd_verify)

    p = common(sub.add_parser("bands", help="band edges of a periodic problem"))
    p.add_argument("--lambda-max", type=float, default=None)
    p.add_argument("--csv", default=None, help="CSV of (lambda, Delta)")
    p.add_argument("--points", type=int, default=2000)
    p.set_defaults(func=cmd_bands)

    p = common(sub.add_parser("oracle", help="finite-difference pencil oracle"))
    p.add_argument("--operator", choices=list(ORACLE_OPERATORS), default="JA")
    p.add_argument("--interval", type=parse_interval, default=None)
    p.add_argument("--grid", type=int, default=4000)
    p.add_argument("--cutoff", type=float, default=None, help="truncation X (default 30)")
    p.add_argument("--periodic", action="store_true", help="periodic/antiperiodic edges over one period")
    p.add_argument("--no-extrapolate", action="store_true")
    p.set_defaults(func=cmd_oracle)
    return ap


def _join_negative(argv: list[str]) -> list[str]:
    """Let ``--interval -1,1`` through: argparse would read -1,1 as an option."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--interval" and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"--interval={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative(argv))
    t0 = time.perf_counter()
    try:
        problem = _load(args.problem) if getattr(args, "problem", None) else None
        if args.command == "verify" and args.all and args.seed is None:
            from .theorems import SUITE_SEED

            args.seed = SUITE_SEED
        manifest = RunManifest.create(args, problem)
        return args.func(args, problem, t0, manifest)
    except IndefSLError as exc:
        sys.stdout.write(dumps(exc.to_json()) + "\n")
        return 1
    except (ValueError, OSError) as exc:
        sys.stdout.write(dumps({"error": "usage", "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
