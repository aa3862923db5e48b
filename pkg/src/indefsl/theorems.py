"""Numerical checks of the counting theorems for A and JA.

Every check returns a :class:`TheoremReport`. A report is ``violated`` only
when all counts it depends on converged under truncation growth; otherwise
the verdict is ``inconclusive`` with a reason.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coefficients import IndefiniteProblem, TruncationPolicy, build_problem, check_symmetry, min_essential
from .counting import BMINUS, BPLUS, N_MAX, CountReport, count_in_interval, effective_interval
from .errors import IndefSLError
from .matching import eigenvalues_A, eigenvalues_JA, gap_of_JA, scan_fixed
from .weyl import ess_distance

THEOREMS = ("thm41", "lemma22iv", "thm44", "interlace", "accumulate", "gap")
SUITE_SEED = 20240611
SUITE_SIZE = 20
SUITE_MARGIN = 0.1
VERDICT_EXIT = {"holds": 0, "violated": 2, "inconclusive": 3}


@dataclass
class TheoremReport:
    theorem: str
    digest: str
    interval: tuple
    measured: dict
    bound: str
    verdict: str
    reason: str = ""

    @property
    def exit_code(self) -> int:
        return VERDICT_EXIT[self.verdict]

    def to_json(self) -> dict:
        return {
            "theorem": self.theorem,
            "problem": self.digest,
            "interval": list(self.interval),
            "measured": self.measured,
            "bound": self.bound,
            "verdict": self.verdict,
            "reason": self.reason,
        }


def _verdict(ok: bool, converged: bool, why_not: str = "count did not converge") -> tuple[str, str]:
    if not converged:
        return "inconclusive", why_not
    return ("holds", "") if ok else ("violated", "")


def _n(rep: CountReport):
    return rep.count if rep.count is not None else None


def _lb(rep: CountReport) -> int:
    return rep.count if rep.count is not None else (rep.lower_bound or 0)


def _check_gap(problem, a, b):
    if not 0.0 <= a < b:
        raise ValueError(f"need 0 <= a < b, got ({a}, {b})")
    effective_interval(problem, a, b)


# ----------------------------------------------------------- estimates


def verify_count_estimate(problem: IndefiniteProblem, a: float, b: float, tol: float = 1e-10) -> TheoremReport:
    """|n_A(a,b) - (n_JA(-b,-a) + n_JA(a,b))| <= 3 on a gap of the essential spectrum."""
    _check_gap(problem, a, b)
    ra = eigenvalues_A(problem, a, b, tol)
    rj = eigenvalues_JA(problem, a, b, tol)
    measured = {"n_A": _n(ra), "n_JA": _n(rj), "X_A": ra.X, "X_JA": rj.X}
    if ra.converged and rj.converged:
        measured["n_JA_positive"] = rj.details["n_positive"]
        measured["n_JA_negative"] = rj.details["n_negative"]
        d = abs(ra.count - rj.count)
        measured["discrepancy"] = d
        verdict, reason = _verdict(d <= 3, True)
    elif _lb(ra) >= N_MAX and _lb(rj) >= N_MAX:
        measured.update(lower_bound_A=_lb(ra), lower_bound_JA=_lb(rj))
        verdict, reason = "holds", f"both counts exceed N_max={N_MAX}"
    else:
        measured.update(lower_bound_A=_lb(ra), lower_bound_JA=_lb(rj))
        verdict, reason = _verdict(False, False)
    return TheoremReport("thm41", problem.digest, (a, b), measured,
                         "|n_A - (n_JA(-b,-a) + n_JA(a,b))| <= 3", verdict, reason)


def verify_rank_one_perturbation(problem: IndefiniteProblem, a: float, b: float,
                                 tol: float = 1e-10) -> TheoremReport:
    """|n_A(a,b) - (n_B+(a,b) + n_B-(a,b))| <= 1."""
    _check_gap(problem, a, b)
    ra = eigenvalues_A(problem, a, b, tol)
    rp = count_in_interval(problem, BPLUS, a, b)
    rm = count_in_interval(problem, BMINUS, a, b)
    measured = {"n_A": _n(ra), "n_B_plus": _n(rp), "n_B_minus": _n(rm)}
    conv = ra.converged and rp.converged and rm.converged
    if conv:
        d = abs(ra.count - rp.count - rm.count)
        measured["discrepancy"] = d
        verdict, reason = _verdict(d <= 1, True)
    else:
        verdict, reason = _verdict(False, False)
    return TheoremReport("lemma22iv", problem.digest, (a, b), measured, "|n_A - n_B| <= 1", verdict, reason)


def _require_symmetric(problem):
    if not problem.symmetric or not check_symmetry(problem).symmetric:
        raise ValueError("this check needs the symmetry condition (c = 0, p and q even, r odd)")


def verify_symmetric_halving(problem: IndefiniteProblem, alpha: float, beta: float,
                             tol: float = 1e-10) -> TheoremReport:
    """Halving formula for n_JA on (alpha, beta) with alpha < min sigma(A) < beta <= min sigma_ess(A).

    When lambda1 is not inside (alpha, beta) the weaker even-count estimate
    |n_A/2 - n_JA| <= 1 is checked instead (if n_A is even).
    """
    _require_symmetric(problem)
    _check_gap(problem, alpha, beta)
    top = min_essential(problem)
    below = eigenvalues_A(problem, 0.0, top, tol)
    ra = eigenvalues_A(problem, alpha, beta, tol)
    rj = eigenvalues_JA(problem, alpha, beta, tol)
    conv = below.converged and ra.converged and rj.converged
    measured = {"n_A": _n(ra), "n_JA": _n(rj)}
    if not conv:
        v, r = _verdict(False, False)
        return TheoremReport("thm44", problem.digest, (alpha, beta), measured, "halving", v, r)
    lam1 = below.eigenvalues[0].center if below.count else math.inf
    npos, nneg = rj.details["n_positive"], rj.details["n_negative"]
    n = ra.count
    measured.update(lambda1=lam1, n_JA_positive=npos, n_JA_negative=nneg)
    main_case = alpha < lam1 < beta and beta <= top and lam1 < top
    if main_case:
        allowed = [n // 2] if n % 2 == 0 else [(n - 1) // 2, (n + 1) // 2]
        bound = "n_JA(a,b) = n_JA(-b,-a) = n_A/2 (even) or (n_A +- 1)/2 (odd)"
        ok = npos == nneg and npos in allowed
    elif n % 2 == 0:
        allowed = [n // 2 - 1, n // 2, n // 2 + 1]
        bound = "|n_A/2 - n_JA(a,b)| = |n_A/2 - n_JA(-b,-a)| <= 1"
        ok = npos == nneg and npos in allowed
    else:
        return TheoremReport("thm44", problem.digest, (alpha, beta), measured, "none", "inconclusive",
                             "interval does not contain lambda1 and n_A is odd: no statement applies")
    measured["allowed"] = [a for a in allowed if a >= 0]
    v, r = _verdict(ok, True)
    return TheoremReport("thm44", problem.digest, (alpha, beta), measured, bound, v, r)


def _alternatives(lam: list[float], mu: list[float]) -> tuple[bool, bool]:
    """Interlacing alternatives (i) and (ii) for A eigenvalues lam (ascending) and JA eigenvalues mu."""
    n = len(lam)

    def inside(lo, hi):
        return sum(lo < m < hi for m in mu)

    def touching(lo, hi):
        return sum(lo <= m <= hi for m in mu)

    # 1-based: (i) pairs (lam_{2k-1}, lam_{2k}) hold one, [lam_{2k}, lam_{2k+1}] hold none
    odd_pairs = [(lam[i], lam[i + 1]) for i in range(0, n - 1, 2)]
    even_pairs = [(lam[i], lam[i + 1]) for i in range(1, n - 1, 2)]
    alt_i = all(inside(*p) == 1 for p in odd_pairs) and all(touching(*p) == 0 for p in even_pairs)
    alt_ii = all(inside(*p) == 1 for p in even_pairs) and all(touching(*p) == 0 for p in odd_pairs)
    return alt_i, alt_ii


def verify_interlacing_with_A(problem: IndefiniteProblem, a: float, b: float,
                              tol: float = 1e-10) -> TheoremReport:
    """Exactly one of the two interlacing alternatives holds; (i) when a < lambda1 < b <= min sigma_ess."""
    _require_symmetric(problem)
    _check_gap(problem, a, b)
    top = min_essential(problem)
    ra = eigenvalues_A(problem, a, b, tol)
    rj = eigenvalues_JA(problem, a, b, tol)
    below = eigenvalues_A(problem, 0.0, top, tol)
    if not (ra.converged and rj.converged and below.converged):
        v, r = _verdict(False, False)
        return TheoremReport("interlace", problem.digest, (a, b), {}, "interlacing", v, r)
    lam = [e.center for e in ra.eigenvalues]
    mu = sorted(e.center for e in rj.eigenvalues if e.center > 0)
    alt_i, alt_ii = _alternatives(lam, mu)
    lam1 = below.eigenvalues[0].center if below.count else math.inf
    bottom = a < lam1 < b <= top
    measured = {"A": lam, "JA_positive": mu, "alternative_i": alt_i, "alternative_ii": alt_ii,
                "bottom_case": bottom}
    if len(lam) <= 1:
        return TheoremReport("interlace", problem.digest, (a, b), measured, "vacuous", "holds",
                             "fewer than two eigenvalues of A")
    ok = alt_i if bottom else alt_i != alt_ii
    bound = "alternative (i) holds" if bottom else "exactly one alternative holds"
    v, r = _verdict(ok, True)
    return TheoremReport("interlace", problem.digest, (a, b), measured, bound, v, r)


# --------------------------------------------------------- accumulation


def _fixed_counts(problem, lo, hi, X):
    d = scan_fixed(problem, "D", lo, hi, X)
    mp = scan_fixed(problem, "M", lo, hi, X)
    mn = scan_fixed(problem, "M", -hi, -lo, X)
    return len(d.zeros) + len(d.common_poles), len(mp.zeros), len(mn.zeros)


def verify_accumulation(problem: IndefiniteProblem, a: float, b: float, N: int = 20,
                        policy: TruncationPolicy | None = None, stable_runs: int = 3) -> TheoremReport:
    """n_A(a, b - eps) reaches N under truncation growth iff n_JA on the mirrored pair does.

    A count is accepted as finite once it is unchanged over ``stable_runs``
    consecutive doublings. For symmetric problems the JA counts must also
    agree on both sides.
    """
    if ess_distance(problem, b) > 1e-12:
        raise ValueError(f"b={b} is not in the essential spectrum")
    policy = policy or problem.truncation
    lo, hi = effective_interval(problem, a, b)
    hist = []
    verdict, reason = "inconclusive", "truncation ceiling reached before N or stabilisation"
    for X in policy.sequence():
        nA, npos, nneg = _fixed_counts(problem, lo, hi, X)
        hist.append({"X": X, "n_A": nA, "n_JA_positive": npos, "n_JA_negative": nneg})
        nJA = npos + nneg
        both_sides = npos == nneg if problem.symmetric else True
        if nA >= N and nJA >= N and len(hist) >= 2:
            ok = both_sides and hist[-1]["n_A"] > hist[-2]["n_A"]
            verdict, reason = ("holds", "both counts reach N and grow") if ok else \
                ("violated", "counts reach N without growth or one-sided")
            break
        recent = hist[-(stable_runs + 1):]
        if len(recent) == stable_runs + 1 and all(r == {**recent[-1], "X": r["X"]} for r in recent):
            fin_A, fin_JA = nA < N, nJA < N
            verdict = "holds" if fin_A == fin_JA and both_sides else "violated"
            reason = "both counts finite and stable" if verdict == "holds" else "finite on one side only"
            break
    measured = {"N": N, "history": hist}
    return TheoremReport("accumulate", problem.digest, (a, b), measured,
                         "n_A >= N under growth iff n_JA >= N", verdict, reason)


def verify_gap(problem: IndefiniteProblem, tol: float = 1e-10) -> TheoremReport:
    """[-lambda1, lambda1] free of JA spectrum, plus the upper estimate by min sigma(B+-)."""
    g = gap_of_JA(problem, tol)
    bound = "[-lambda1, lambda1] in resolvent set of JA"
    if g.case == "zero":
        bound += "; lambda_1+(JA) < min sigma(B+), -lambda_1-(JA) < min sigma(B-)"
    v, r = _verdict(g.holds, True)
    top = min_essential(problem)
    return TheoremReport("gap", problem.digest, (0.0, top), g.to_json(), bound, v, r)


def verify(problem: IndefiniteProblem, theorem: str, interval: tuple[float, float] | None = None,
           **kw) -> TheoremReport:
    """Dispatch by theorem id; ``interval`` defaults to (0, min sigma_ess)."""
    if theorem not in THEOREMS:
        raise ValueError(f"theorem must be one of {THEOREMS}")
    if theorem == "gap":
        return verify_gap(problem, **kw)
    top = min_essential(problem)
    a, b = interval if interval is not None else (0.0, top)
    fn = {
        "thm41": verify_count_estimate,
        "lemma22iv": verify_rank_one_perturbation,
        "thm44": verify_symmetric_halving,
        "interlace": verify_interlacing_with_A,
        "accumulate": verify_accumulation,
    }[theorem]
    return fn(problem, a, b, **kw)


# -------------------------------------------------------------- suite


def suite_problem(i: int, seed: int = SUITE_SEED) -> dict:
    """Problem JSON for case ``i`` of the seeded random-well suite.

    Even cases are symmetric (mirrored wells, r = sgn x); odd cases have
    unmirrored wells and a bump in |r| placed off the origin. The sum of the
    well depths stays below 0.8 q_inf so q > 0.2 q_inf everywhere.
    """
    rng = np.random.default_rng([seed, i])
    q_inf = float(rng.uniform(2.0, 6.0))
    k = int(rng.integers(1, 4))
    depth = 0.8 * q_inf * rng.dirichlet(np.ones(k)) * rng.uniform(0.5, 1.0)
    centers = rng.uniform(0.0, 3.0, k)
    widths = rng.uniform(0.5, 3.0, k)
    symmetric = i % 2 == 0
    if symmetric:
        amps, cs, ws = [], [], []
        for d, b, s in zip(depth, centers, widths):
            if b < 0.25:
                amps.append(d), cs.append(0.0), ws.append(s)
            else:
                amps += [d / 2, d / 2]
                cs += [b, -b]
                ws += [s, s]
        r = {"builtin": "sign"}
    else:
        amps, cs, ws = list(depth), list(rng.uniform(-3.0, 3.0, k)), list(widths)
        # |r| -> 1 at both ends keeps the essential spectrum at [q_inf, inf)
        r = {"expr": "sgn(x)*(1 + w*exp(-(x - x0)^2))", "breakpoints": [0.0],
             "params": {"w": float(rng.uniform(-0.5, 1.0)), "x0": float(rng.uniform(-2.0, 2.0))}}
    q = {"builtin": "gaussian_wells",
         "params": {"q_inf": q_inf, "amplitudes": [float(x) for x in amps],
                    "centers": [float(x) for x in cs], "widths": [float(x) for x in ws]}}
    return {
        "name": f"suite case {i} (seed {seed})",
        "r": r, "p": 1, "q": q, "c": 0, "symmetric": symmetric,
        "ess_model": {"type": "constant_tail", "q_inf": q_inf},
        "truncation": {"X0": 20, "growth": 2, "max_X": 160, "tol": 1e-10},
    }


@dataclass
class SuiteRow:
    case: int
    digest: str
    symmetric: bool
    q_inf: float
    n_A: int | None
    n_JA: int | None
    n_B: int | None
    thm41: str
    thm41_discrepancy: int | None
    lemma22iv: str
    lemma22iv_discrepancy: int | None
    error: str = ""
    eigenvalues_A: list = field(default_factory=list)
    eigenvalues_JA: list = field(default_factory=list)

    CSV_FIELDS = ("case", "digest", "symmetric", "q_inf", "n_A", "n_JA", "n_B", "thm41",
                  "thm41_discrepancy", "lemma22iv", "lemma22iv_discrepancy", "error")

    def csv_row(self) -> list:
        return [getattr(self, f) for f in self.CSV_FIELDS]


def suite_interval(problem: IndefiniteProblem) -> tuple[float, float]:
    """(0, q_inf - SUITE_MARGIN): states closer to the threshold decay too slowly
    for a fixed-box comparison."""
    return 0.0, problem.ess_model.q_inf - SUITE_MARGIN


def run_case(i: int, seed: int = SUITE_SEED) -> SuiteRow:
    problem = build_problem(suite_problem(i, seed))
    q_inf = problem.ess_model.q_inf
    a, b = suite_interval(problem)
    try:
        t41 = verify_count_estimate(problem, a, b)
        l22 = verify_rank_one_perturbation(problem, a, b)
    except IndefSLError as exc:
        return SuiteRow(i, problem.digest, problem.symmetric, q_inf, None, None, None,
                        "inconclusive", None, "inconclusive", None, f"{type(exc).__name__}: {exc}")
    ea = eigenvalues_A(problem, a, b)
    ej = eigenvalues_JA(problem, a, b)
    nb = None
    if l22.measured.get("n_B_plus") is not None and l22.measured.get("n_B_minus") is not None:
        nb = l22.measured["n_B_plus"] + l22.measured["n_B_minus"]
    return SuiteRow(i, problem.digest, problem.symmetric, q_inf, t41.measured["n_A"], t41.measured["n_JA"], nb,
                    t41.verdict, t41.measured.get("discrepancy"), l22.verdict, l22.measured.get("discrepancy"),
                    "", [e.center for e in ea.eigenvalues], [e.center for e in ej.eigenvalues])


def run_suite(n: int = SUITE_SIZE, seed: int = SUITE_SEED, workers: int = 1) -> list[SuiteRow]:
    """Run the seeded suite; cases are independent and may run in separate processes."""
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(run_case, range(n), [seed] * n))
    return [run_case(i, seed) for i in range(n)]


def max_discrepancy(rows: list[SuiteRow]) -> dict:
    d41 = [r.thm41_discrepancy for r in rows if r.thm41_discrepancy is not None]
    d22 = [r.lemma22iv_discrepancy for r in rows if r.lemma22iv_discrepancy is not None]
    return {"thm41": max(d41, default=None), "lemma22iv": max(d22, default=None)}


__all__ = [
    "TheoremReport", "THEOREMS", "verify", "verify_count_estimate", "verify_rank_one_perturbation",
    "verify_symmetric_halving", "verify_interlacing_with_A", "verify_accumulation", "verify_gap",
    "suite_problem", "suite_interval", "run_case", "run_suite", "SuiteRow", "max_discrepancy",
]
