"""Matching functions and their zero/pole structure.

``M(lam) = m_plus(lam) - m_minus(-lam)`` vanishes exactly at eigenvalues of
JA and has poles at eigenvalues of ``B+`` (on the positive axis) and of
``-B-`` (on the negative axis). Between consecutive poles M is increasing on
the positive axis and decreasing on the negative one.

``D(lam) = m_plus(lam) - m_minus(lam)`` is increasing between its poles; its
zeros together with the common poles of ``m_plus`` and ``m_minus`` are the
eigenvalues of A.

Both are handled through the bounded function ``atan(tan(alpha) - tan(beta))``
of the two projective boundary angles, which is continuous across the points
where only one of the two angles passes ``pi/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .coefficients import IndefiniteProblem, TruncationPolicy
from .counting import (
    N_MAX,
    POLE_XTOL,
    CountReport,
    Enclosure,
    _certify,
    converge,
    effective_interval,
    eigenvalues_fixed,
    widen,
)
from .errors import AlternationViolation, NoConvergence
from .ode import DEFAULT_RTOL
from .weyl import default_bc, half_line_shot


@dataclass(frozen=True)
class MatchingFunction:
    """``kind`` is "M" (JA) or "D" (A)."""

    kind: str

    def arguments(self, lam: float) -> tuple[float, float]:
        """Spectral parameters at which m_plus and m_minus are evaluated."""
        return (lam, -lam) if self.kind == "M" else (lam, lam)

    def direction(self, lo: float, hi: float) -> int:
        if self.kind == "M" and hi <= 0.0:
            return -1
        return 1


M_FUNC = MatchingFunction("M")
D_FUNC = MatchingFunction("D")


@dataclass(frozen=True)
class MatchingValue:
    lam: float
    value: float           # extended real, +-inf at a pole
    arctan: float          # atan(value) in [-pi/2, pi/2]
    alpha: float           # projective angle of m_plus
    beta: float            # projective angle of m_minus
    X: float


def _angles(problem, func, lam, X, bc, rtol):
    l1, l2 = func.arguments(lam)
    a = half_line_shot(problem, "plus", l1, X, bc, rtol).phi
    b = half_line_shot(problem, "minus", l2, X, bc, rtol).phi
    return a, b


def _combine(a: float, b: float) -> tuple[float, float]:
    """tan(a) - tan(b) as (value, atan(value)), stable near poles."""
    s = math.sin(a - b)
    den = math.cos(a) * math.cos(b)
    at = math.atan2(s * math.copysign(1.0, den), abs(den))
    if den == 0.0:
        return (math.inf if s > 0 else -math.inf), at
    return s / den, at


def eval_matching_fixed(problem, func, lam, X, bc=None, rtol=DEFAULT_RTOL) -> MatchingValue:
    bc = bc or default_bc(problem)
    a, b = _angles(problem, func, lam, X, bc, rtol)
    val, at = _combine(a, b)
    return MatchingValue(float(lam), val, at, a, b, X)


def eval_matching(problem: IndefiniteProblem, kind: str, lam: float, policy: TruncationPolicy | None = None,
                  bc: str | None = None, rtol: float = DEFAULT_RTOL) -> MatchingValue:
    """Matching function value with truncation doubling until its arctan is stable."""
    from .weyl import check_resolvent

    func = MatchingFunction(kind)
    l1, l2 = func.arguments(lam)
    check_resolvent(problem, l1)
    check_resolvent(problem, l2)
    policy = policy or problem.truncation
    res, _ = converge(lambda X: eval_matching_fixed(problem, func, lam, X, bc, rtol), policy,
                      lambda p, c: abs(p.arctan - c.arctan) <= policy.tol, f"{kind}({lam})")
    return res


@dataclass
class ZeroPoleScan:
    """Zeros and poles of a matching function on one half-axis interval."""

    kind: str
    interval: tuple[float, float]
    X: float
    zeros: list
    poles: list                 # Enclosure
    pole_sources: list          # "B+", "-B-", "B-" or "common"
    grid: np.ndarray = field(default_factory=lambda: np.empty(0))
    values: np.ndarray = field(default_factory=lambda: np.empty(0))
    monotone: bool = True
    alternating: bool = True

    @property
    def common_poles(self) -> list:
        return [p for p, s in zip(self.poles, self.pole_sources) if s == "common"]

    def events(self) -> list[tuple[float, str]]:
        ev = [(z.center, "zero") for z in self.zeros] + [(p.center, "pole") for p in self.poles]
        return sorted(ev)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "interval": list(self.interval),
            "X": self.X,
            "zeros": [z.to_json() for z in self.zeros],
            "poles": [{"enclosure": p.to_json(), "source": s} for p, s in zip(self.poles, self.pole_sources)],
            "monotone": self.monotone,
            "alternating": self.alternating,
        }


def _merge_poles(plus, minus, scale):
    """Union of pole lists; overlapping enclosures are one common pole."""
    tagged = sorted([(e, "B+") for e in plus] + [(e, "B-") for e in minus], key=lambda t: t[0].center)
    out = []
    for e, s in tagged:
        if out:
            q, qs = out[-1]
            gap = abs(e.center - q.center)
            if gap <= max(e.radius + q.radius, 1e-9 * scale) and qs != s:
                out[-1] = (Enclosure(min(e.lo, q.lo), max(e.hi, q.hi)), "common")
                continue
        out.append((e, s))
    return [e for e, _ in out], [s for _, s in out]


def scan_fixed(problem, kind, lo, hi, X, bc=None, tol=1e-10, rtol=DEFAULT_RTOL, grid=0) -> ZeroPoleScan:
    """Zero/pole structure on ``(lo, hi)`` (one half-axis) for the problem truncated at X."""
    bc = bc or default_bc(problem)
    func = MatchingFunction(kind)
    sgn = func.direction(lo, hi)
    scale = max(1.0, abs(lo), abs(hi))
    if kind == "M" and sgn > 0:
        _, poles = eigenvalues_fixed(problem, "plus", lo, hi, X, bc, tol, rtol, 10**9)
        sources = ["B+"] * len(poles)
    elif kind == "M":
        _, mp = eigenvalues_fixed(problem, "minus", -hi, -lo, X, bc, tol, rtol, 10**9)
        poles = [Enclosure(-e.hi, -e.lo) for e in reversed(mp)]
        sources = ["-B-"] * len(poles)
    else:
        _, pp = eigenvalues_fixed(problem, "plus", lo, hi, X, bc, tol, rtol, 10**9)
        _, mp = eigenvalues_fixed(problem, "minus", lo, hi, X, bc, tol, rtol, 10**9)
        poles, sources = _merge_poles(pp, mp, scale)

    def G(lam):
        return sgn * eval_matching_fixed(problem, func, lam, X, bc, rtol).arctan

    # cells between consecutive poles, kept clear of the pole enclosures
    cuts = [(lo, None)] + [(p.center, p) for p in poles] + [(hi, None)]
    zeros = []
    for k, ((x0, p0), (x1, p1)) in enumerate(zip(cuts, cuts[1:])):
        l = x0 if p0 is None else p0.hi + max(8 * p0.radius, 1e-11 * scale)
        r = x1 if p1 is None else p1.lo - max(8 * p1.radius, 1e-11 * scale)
        if not l < r:
            raise AlternationViolation(f"{kind}: poles at {x0!r} and {x1!r} cannot be separated (X={X})")
        gl, gr = G(l), G(r)
        interior = p0 is not None and p1 is not None
        if interior and not (gl < 0.0 < gr):
            raise AlternationViolation(
                f"{kind}: no sign change between consecutive poles {x0!r}, {x1!r} (X={X}): "
                f"atan values {gl:.3g}, {gr:.3g}"
            )
        if gl < 0.0 < gr:
            root = brentq(G, l, r, xtol=min(tol, POLE_XTOL * scale) / 4, rtol=1e-15)
            zeros.append(_certify(G, root, tol, l, r))
        elif gl == 0.0 and p0 is not None:
            zeros.append(Enclosure(l, l))

    scan = ZeroPoleScan(kind, (lo, hi), X, zeros, poles, sources)
    if grid:
        _grid_check(scan, problem, func, sgn, X, bc, rtol, grid)
    return scan


def _grid_check(scan, problem, func, sgn, X, bc, rtol, n):
    """Monotonicity and alternation of the scanned function on an n-point grid.

    For M this is only guaranteed under symmetry: M'(0) equals the indefinite
    norm of the zero-energy solution, which can have either sign.
    """
    lo, hi = scan.interval
    lam = np.linspace(lo, hi, n)
    vals = np.array([eval_matching_fixed(problem, func, x, X, bc, rtol).value for x in lam])
    scan.grid, scan.values = lam, vals
    # cell index of each grid point
    pc = np.array([p.center for p in scan.poles])
    cell = np.searchsorted(pc, lam)
    monotone = True
    for c in np.unique(cell):
        v = sgn * vals[cell == c]
        v = v[np.isfinite(v)]
        if np.any(np.diff(v) <= 0):
            monotone = False
        if np.count_nonzero(np.diff(np.sign(v)) != 0) > 1:
            raise AlternationViolation(f"{func.kind}: more than one sign change in a cell (X={X})")
    ev = [e for _, e in scan.events()]
    alternating = all(e1 != e2 for e1, e2 in zip(ev, ev[1:])) if func.kind == "M" else True
    scan.monotone, scan.alternating = monotone, alternating
    if not monotone:
        raise AlternationViolation(f"{func.kind} is not monotone between poles on a {n}-point grid (X={X})")
    if not alternating:
        raise AlternationViolation(f"{func.kind}: zeros and poles do not alternate (X={X})")


def _same_scan(tol):
    def same(p, c):
        if len(p.zeros) != len(c.zeros) or len(p.poles) != len(c.poles):
            return False
        pairs = list(zip(p.zeros, c.zeros)) + list(zip(p.poles, c.poles))
        return all(abs(e1.center - e2.center) <= tol for e1, e2 in pairs)

    return same


def scan(problem: IndefiniteProblem, kind: str, a: float, b: float, grid: int = 0, tol: float = 1e-10,
         policy: TruncationPolicy | None = None, bc: str | None = None, rtol: float = DEFAULT_RTOL) -> ZeroPoleScan:
    """Converged zero/pole scan on the open interval (a, b) of one half-axis."""
    if kind == "M" and a < 0.0 < b:
        raise ValueError("scan M on each half-axis separately")
    policy = policy or problem.truncation
    func = MatchingFunction(kind)
    lo, hi = _effective(problem, func, a, b)
    hist = []

    def fn(X):
        hist.append(scan_fixed(problem, kind, lo, hi, X, bc, tol, rtol))
        return hist[-1]

    res, X = converge(fn, policy, _same_scan(max(tol, policy.tol)), f"{kind} scan on ({a}, {b})")
    prev = hist[-2]
    res.zeros = [widen(z, max(tol, abs(z.center - z0.center))) for z, z0 in zip(res.zeros, prev.zeros)]
    res.poles = [widen(p, max(tol, abs(p.center - p0.center))) for p, p0 in zip(res.poles, prev.poles)]
    if grid:
        _grid_check(res, problem, func, func.direction(lo, hi), X, bc or default_bc(problem), rtol, grid)
    res.interval = (a, b)
    return res


def _effective(problem, func, a, b):
    """Shrink (a, b) so both boundary-value arguments stay clear of essential spectrum."""
    if func.kind == "D":
        return effective_interval(problem, a, b)
    if b <= 0.0:
        nlo, nhi = effective_interval(problem, -b, -a)
        return -nhi, -nlo
    return effective_interval(problem, a, b)


# ------------------------------------------------------------------ JA, A


def _pair_intervals(a, b):
    return (-b, -a), (a, b)


def eigenvalues_JA(problem: IndefiniteProblem, a: float, b: float, tol: float = 1e-10,
                   policy: TruncationPolicy | None = None, bc: str | None = None,
                   rtol: float = DEFAULT_RTOL) -> CountReport:
    """Eigenvalues of JA in (-b, -a) and (a, b), 0 <= a < b, as zeros of M."""
    if not 0.0 <= a < b:
        raise ValueError("eigenvalues_JA needs 0 <= a < b")
    neg_iv, pos_iv = _pair_intervals(a, b)
    try:
        pos = scan(problem, "M", *pos_iv, tol=tol, policy=policy, bc=bc, rtol=rtol)
        neg = scan(problem, "M", *neg_iv, tol=tol, policy=policy, bc=bc, rtol=rtol)
    except NoConvergence as exc:
        last = exc.last_value
        lb = len(last.zeros) if last is not None else None
        return CountReport("JA", [neg_iv, pos_iv], None, [], exc.X, False, lb, "matching")
    eig = list(neg.zeros) + list(pos.zeros)
    details = {
        "n_negative": len(neg.zeros),
        "n_positive": len(pos.zeros),
        "poles_positive": [p.to_json() for p in pos.poles],
        "poles_negative": [p.to_json() for p in neg.poles],
    }
    if problem.symmetric:
        nz, pz = sorted(z.center for z in neg.zeros), sorted(z.center for z in pos.zeros)
        paired = len(nz) == len(pz)
        defect = max((abs(x + y) for x, y in zip(reversed(nz), pz)), default=0.0) if paired else math.inf
        details["pairing_defect"] = defect
    return CountReport("JA", [neg_iv, pos_iv], len(eig), eig, max(pos.X, neg.X), True, None, "matching", details)


def count_JA_pair(problem: IndefiniteProblem, a: float, b: float, **kw) -> tuple[int, int]:
    rep = eigenvalues_JA(problem, a, b, **kw)
    if rep.count is None:
        raise NoConvergence(f"JA count in +-({a}, {b}) did not converge", last_value=rep.lower_bound, X=rep.X)
    return rep.details["n_positive"], rep.details["n_negative"]


def eigenvalues_A(problem: IndefiniteProblem, a: float, b: float, tol: float = 1e-10,
                  policy: TruncationPolicy | None = None, bc: str | None = None,
                  rtol: float = DEFAULT_RTOL) -> CountReport:
    """Eigenvalues of A in (a, b): zeros of D and common poles of m_plus, m_minus."""
    try:
        s = scan(problem, "D", a, b, tol=tol, policy=policy, bc=bc, rtol=rtol)
    except NoConvergence as exc:
        last = exc.last_value
        lb = len(last.zeros) + len(last.common_poles) if last is not None else None
        return CountReport("A", [(a, b)], None, [], exc.X, False, lb, "matching")
    eig = sorted(list(s.zeros) + s.common_poles, key=lambda e: e.center)
    kinds = ["common_pole" if any(e is p for p in s.common_poles) else "zero" for e in eig]
    return CountReport("A", [(a, b)], len(eig), eig, s.X, True, None, "matching", {"classification": kinds})


def eigenvalues_JB(problem: IndefiniteProblem, a: float, b: float, tol: float = 1e-10,
                   policy: TruncationPolicy | None = None) -> CountReport:
    """Eigenvalues of JB = B+ (+) (-B-) in (-b, -a) and (a, b)."""
    from .counting import BPLUS, NEG_BMINUS, locate_eigenvalues

    pos = locate_eigenvalues(problem, BPLUS, a, b, tol, policy)
    neg = locate_eigenvalues(problem, NEG_BMINUS, -b, -a, tol, policy)
    ok = pos.count is not None and neg.count is not None
    return CountReport("JB", [(-b, -a), (a, b)], pos.count + neg.count if ok else None,
                       neg.eigenvalues + pos.eigenvalues, max(pos.X or 0, neg.X or 0), ok, None, "halfline",
                       {"n_positive": pos.count, "n_negative": neg.count})


@dataclass(frozen=True)
class GapReport:
    """JA eigenvalues nearest to zero against lambda1 = min sigma(A).

    ``case`` is "zero" when lambda1 is a zero of m_plus - m_minus, "common_pole"
    when it is a pole of both, and "none" when A has no eigenvalue below the
    essential spectrum. In the "zero" case the first JA eigenvalues must also
    lie strictly inside (-min sigma(B-), min sigma(B+)).
    """

    lambda1: float
    case: str
    nearest_positive: float
    nearest_negative: float
    min_B_plus: float
    min_B_minus: float
    gap_holds: bool
    upper_holds: bool | None

    @property
    def holds(self) -> bool:
        return self.gap_holds and self.upper_holds is not False

    def to_json(self):
        return {**self.__dict__, "holds": self.holds}


def gap_of_JA(problem: IndefiniteProblem, tol: float = 1e-10, slack: float = 1e-6) -> GapReport:
    """Check that [-lambda1, lambda1] contains no JA eigenvalue (up to ``slack``)."""
    from .coefficients import min_essential
    from .counting import BMINUS, BPLUS, locate_eigenvalues

    top = min_essential(problem)
    a_rep = eigenvalues_A(problem, 0.0, top, tol)
    ja = eigenvalues_JA(problem, 0.0, top, tol)
    if a_rep.count is None or ja.count is None:
        raise NoConvergence("eigenvalues below the essential spectrum did not converge")
    if a_rep.count:
        lam1, case = a_rep.eigenvalues[0].center, a_rep.details["classification"][0]
    else:
        lam1, case = top, "none"
    pos = [e.center for e in ja.eigenvalues if e.center > 0]
    neg = [e.center for e in ja.eigenvalues if e.center < 0]
    npos = min(pos, default=math.inf)
    nneg = max(neg, default=-math.inf)
    bp = locate_eigenvalues(problem, BPLUS, 0.0, top, tol, n_max=1)
    bm = locate_eigenvalues(problem, BMINUS, 0.0, top, tol, n_max=1)
    bmin_p = bp.eigenvalues[0].center if bp.eigenvalues else top
    bmin_m = bm.eigenvalues[0].center if bm.eigenvalues else top
    gap_ok = npos > lam1 - slack and -nneg > lam1 - slack
    upper = None
    if case == "zero":
        upper = npos < bmin_p and -nneg < bmin_m
    return GapReport(lam1, case, npos, nneg, bmin_p, bmin_m, gap_ok, upper)


__all__ = [
    "MatchingFunction", "MatchingValue", "ZeroPoleScan", "eval_matching", "scan", "scan_fixed",
    "eigenvalues_JA", "eigenvalues_A", "eigenvalues_JB", "count_JA_pair", "gap_of_JA", "N_MAX",
]
