"""Eigenvalue counts and enclosures for the half-line Dirichlet problems.

Everything is computed for the truncated problem on ``[c, c + X]`` (or
``[c - X, c]``) first, where the spectrum is discrete and oscillation theory is
exact, and then repeated with ``X`` grown until the answer is stable.

Below the essential spectrum the count comes from the lifted Pruefer angle at
``c`` of the solution with Dirichlet data at the far end: on the right side it
decreases through ``-(k+1) pi`` at the k-th eigenvalue (0-based), on the left
side it increases through ``(k+1) pi``. Inside a spectral gap the projective
boundary angle is unwrapped in ``lam`` instead, using its exact derivative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.optimize import brentq

from .coefficients import IndefiniteProblem, TruncationPolicy
from .errors import BisectionStall, EssentialSpectrumProximity, NoConvergence
from .ode import DEFAULT_ATOL, DEFAULT_RTOL
from .weyl import ESS_MARGIN, default_bc, ess_distance, essential_intervals, half_line_shot

N_MAX = 64
ENDPOINT_OFFSET = 1e-9
UNWRAP_STEP = 0.3  # target angle change per lam step when unwrapping
POLE_XTOL = 1e-13


def endpoint_offset(a: float, b: float) -> float:
    return ENDPOINT_OFFSET * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class HalfLineOperator:
    """``B+`` (side plus), ``B-`` (side minus) or ``-B-`` (side minus, sign -1)."""

    side: str
    sign: int = 1

    @property
    def name(self) -> str:
        return {("plus", 1): "B+", ("minus", 1): "B-", ("minus", -1): "-B-", ("plus", -1): "-B+"}[
            (self.side, self.sign)
        ]


BPLUS = HalfLineOperator("plus")
BMINUS = HalfLineOperator("minus")
NEG_BMINUS = HalfLineOperator("minus", -1)


@dataclass(frozen=True)
class Enclosure:
    lo: float
    hi: float

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def radius(self) -> float:
        return 0.5 * (self.hi - self.lo)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    __contains__ = contains

    def to_json(self):
        return [self.lo, self.hi]


@dataclass
class CountReport:
    """Count of eigenvalues of ``operator`` in the open interval(s) ``intervals``.

    ``count`` is None when it could not be certified; ``lower_bound`` is then
    the best count seen before the truncation ceiling was hit.
    """

    operator: str
    intervals: list
    count: int | None
    eigenvalues: list = field(default_factory=list)
    X: float | None = None
    converged: bool = True
    lower_bound: int | None = None
    method: str = ""
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "operator": self.operator,
            "intervals": [list(iv) for iv in self.intervals],
            "count": self.count,
            "lower_bound": self.lower_bound,
            "converged": self.converged,
            "X": self.X,
            "method": self.method,
            "eigenvalues": [e.to_json() if isinstance(e, Enclosure) else e for e in self.eigenvalues],
            "details": self.details,
        }


# ---------------------------------------------------------------- fixed X


def _shot(problem, side, lam, X, bc, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    return half_line_shot(problem, side, lam, X, bc, rtol, atol)


def _prufer_index(problem, side, lam, X, rtol=DEFAULT_RTOL) -> float:
    """Signed Pruefer phase in units of pi, increasing in lam, zero-based."""
    th = _shot(problem, side, lam, X, "dirichlet", rtol).prufer
    return (-th if side == "plus" else th) / math.pi


def count_below_fixed(problem, side, lam, X, rtol=DEFAULT_RTOL) -> int:
    """Eigenvalues strictly below ``lam`` of the Dirichlet problem truncated at X."""
    return max(0, math.ceil(_prufer_index(problem, side, lam, X, rtol)) - 1)


def uses_prufer(problem: IndefiniteProblem, b: float, bc: str) -> bool:
    """Pruefer counting applies below the essential spectrum with Dirichlet truncation."""
    if bc != "dirichlet":
        return False
    ess = essential_intervals(problem, b)
    return not ess or b < ess[0][0]


def _locate_prufer(problem, side, a, b, X, tol, rtol, n_max):
    na = count_below_fixed(problem, side, a, X, rtol)
    nb = count_below_fixed(problem, side, b, X, rtol)
    out = []
    for k in range(na, min(nb, na + n_max)):
        f = lambda lam, k=k: _prufer_index(problem, side, lam, X, rtol) - (k + 1)  # noqa: E731
        root = brentq(f, a, b, xtol=min(tol, POLE_XTOL * max(1.0, abs(b))) / 4, rtol=1e-15)
        out.append(_certify(f, root, tol, a, b))
    return nb - na, out


def widen(e: Enclosure, radius: float) -> Enclosure:
    c = e.center
    r = max(radius, e.radius)
    lo, hi = c - r, c + r
    # keep the half-width at or below r despite rounding
    while (hi - lo) / 2 > r:
        lo, hi = math.nextafter(lo, c), math.nextafter(hi, c)
    return Enclosure(lo, hi)


def _certify(f, root, tol, a, b) -> Enclosure:
    """Smallest enclosure [root - h, root + h] with a sign change of f, h <= tol."""
    h = max(abs(root) * 4e-16, 1e-15)
    while h <= tol:
        lo, hi = max(a, root - h), min(b, root + h)
        if f(lo) < 0 <= f(hi) or f(lo) > 0 >= f(hi):
            return Enclosure(lo, hi)
        h *= 8.0
    raise BisectionStall(f"could not certify a sign change around {root!r} within {tol:g}")


def _unwrap_poles(problem, side, a, b, X, bc, tol, rtol):
    """Poles of m_side in (a, b) at truncation X by unwrapping the boundary angle."""
    sgn = 1.0 if side == "plus" else -1.0

    def psi(lam):
        s = _shot(problem, side, lam, X, bc, rtol)
        return (sgn * s.phi) % math.pi, abs(s.dphi)

    poles = []
    lam, (ps, d) = a, psi(a)
    scale = max(1.0, abs(a), abs(b))
    while lam < b:
        h = min(b - lam, UNWRAP_STEP / max(d, 1e-300))
        while True:
            lam2 = min(lam + h, b)
            ps2, d2 = psi(lam2)
            inc = (ps2 - ps) % math.pi
            pred = (lam2 - lam) * 0.5 * (d + d2)
            if inc < 0.5 and (lam2 - lam) * d2 < 0.5 and abs(inc - pred) < 0.05 + 0.25 * pred:
                break
            h *= 0.5
            if h < 1e-15 * scale:
                raise BisectionStall(f"angle unwrapping stalled at lam={lam!r} ({side}, X={X})")
        if ps < 0.5 * math.pi <= ps + inc:
            ref = ps + 0.5 * inc

            def g(x):
                p, _ = psi(x)
                return ref + ((p - ref + 0.5 * math.pi) % math.pi - 0.5 * math.pi) - 0.5 * math.pi

            if g(lam2) == 0.0:
                root = lam2
            else:
                root = brentq(g, lam, lam2, xtol=min(tol, POLE_XTOL * scale) / 4, rtol=1e-15)
            if a < root < b:
                poles.append(_certify(g, root, tol, lam, lam2) if g(lam2) != 0.0 else Enclosure(root, root))
        lam, ps, d = lam2, ps2, d2
    return len(poles), poles


def eigenvalues_fixed(problem, side, a, b, X, bc=None, tol=1e-10, rtol=DEFAULT_RTOL, n_max=N_MAX):
    """(count, enclosures) of the half-line problem truncated at X in the open interval (a, b)."""
    bc = bc or default_bc(problem)
    if uses_prufer(problem, b, bc):
        return _locate_prufer(problem, side, a, b, X, tol, rtol, n_max)
    return _unwrap_poles(problem, side, a, b, X, bc, tol, rtol)


# ------------------------------------------------------------ converged


def converge(fn, policy: TruncationPolicy, same, what: str):
    """Evaluate ``fn(X)`` along the truncation sequence until two consecutive results agree."""
    prev = None
    for X in policy.sequence():
        cur = fn(X)
        if prev is not None and same(prev, cur):
            return cur, X
        prev = cur
    raise NoConvergence(f"{what} not stable up to X={policy.max_X}", last_value=prev, X=policy.max_X)


def effective_interval(problem, a, b, eps=ESS_MARGIN):
    """Open interval pulled in from the ends: by the endpoint offset, and by ``eps``
    where an end touches the essential spectrum."""
    if not a < b:
        raise ValueError(f"empty interval ({a}, {b})")
    off = endpoint_offset(a, b)
    lo, hi = a + off, b - off
    if ess_distance(problem, lo) < eps:
        lo = a + eps
    if ess_distance(problem, hi) < eps:
        hi = b - eps
    slack = 0.5
    if not lo < hi or min(ess_distance(problem, lo), ess_distance(problem, hi)) < eps * slack:
        raise EssentialSpectrumProximity(f"({a}, {b}) is not inside a gap of the essential spectrum")
    for e1, e2 in essential_intervals(problem, hi):
        if e1 < hi and e2 > lo:
            raise EssentialSpectrumProximity(f"({a}, {b}) meets the essential spectrum [{e1}, {e2}]")
    return lo, hi


def locate_eigenvalues(
    problem: IndefiniteProblem,
    op: HalfLineOperator,
    a: float,
    b: float,
    tol: float = 1e-10,
    policy: TruncationPolicy | None = None,
    bc: str | None = None,
    rtol: float = DEFAULT_RTOL,
    n_max: int = N_MAX,
) -> CountReport:
    """Eigenvalue enclosures of B+, B- or -B- in (a, b), converged in the truncation."""
    if op.sign < 0:
        rep = locate_eigenvalues(problem, HalfLineOperator(op.side), -b, -a, tol, policy, bc, rtol, n_max)
        rep.operator = op.name
        rep.intervals = [(a, b)]
        rep.eigenvalues = [Enclosure(-e.hi, -e.lo) for e in reversed(rep.eigenvalues)]
        return rep
    policy = policy or problem.truncation
    lo, hi = effective_interval(problem, a, b)
    bc = bc or default_bc(problem)

    def same(p, c):
        return p[0] == c[0] and all(abs(e1.center - e2.center) <= max(tol, policy.tol) for e1, e2 in zip(p[1], c[1]))

    hist = []

    def fn(X):
        hist.append(eigenvalues_fixed(problem, op.side, lo, hi, X, bc, tol, rtol, n_max))
        return hist[-1]

    try:
        (n, encl), X = converge(fn, policy, same, f"{op.name} eigenvalues in ({a}, {b})")
    except NoConvergence as exc:
        last = exc.last_value
        return CountReport(op.name, [(a, b)], None, list(last[1]) if last else [], policy.max_X, False,
                           last[0] if last else None, "prufer" if uses_prufer(problem, hi, bc) else "unwrap")
    method = "prufer" if uses_prufer(problem, hi, bc) else "unwrap"
    # the reported radius covers the requested tolerance and the truncation change
    encl = [widen(e, max(tol, abs(e.center - e0.center))) for e, e0 in zip(encl, hist[-2][1])]
    details = {"truncated_list": n > len(encl)}
    return CountReport(op.name, [(a, b)], n, encl, X, True, None, method, details)


def count_in_interval(
    problem: IndefiniteProblem,
    op: HalfLineOperator,
    a: float,
    b: float,
    policy: TruncationPolicy | None = None,
    bc: str | None = None,
    rtol: float = DEFAULT_RTOL,
) -> CountReport:
    """Number of eigenvalues in (a, b); cheap Pruefer count below the essential spectrum."""
    if op.sign < 0:
        rep = count_in_interval(problem, HalfLineOperator(op.side), -b, -a, policy, bc, rtol)
        rep.operator, rep.intervals = op.name, [(a, b)]
        return rep
    policy = policy or problem.truncation
    bc = bc or default_bc(problem)
    lo, hi = effective_interval(problem, a, b)
    if not uses_prufer(problem, hi, bc):
        return locate_eigenvalues(problem, op, a, b, policy=policy, bc=bc, rtol=rtol)

    def fn(X):
        return count_below_fixed(problem, op.side, hi, X, rtol) - count_below_fixed(problem, op.side, lo, X, rtol)

    try:
        n, X = converge(fn, policy, lambda p, c: p == c, f"{op.name} count in ({a}, {b})")
    except NoConvergence as exc:
        return CountReport(op.name, [(a, b)], None, [], policy.max_X, False, exc.last_value, "prufer")
    return CountReport(op.name, [(a, b)], n, [], X, True, None, "prufer")


def count_below(
    problem: IndefiniteProblem,
    op: HalfLineOperator,
    lam: float,
    policy: TruncationPolicy | None = None,
    rtol: float = DEFAULT_RTOL,
) -> CountReport:
    """Eigenvalues of B+ or B- strictly below ``lam`` (which must lie below the essential spectrum)."""
    if op.sign < 0:
        raise ValueError("count_below is defined for B+ and B- only; use count_in_interval for -B-")
    policy = policy or problem.truncation
    ess = essential_intervals(problem, lam + 1.0)
    if ess and lam > ess[0][0] - ESS_MARGIN:
        raise EssentialSpectrumProximity(f"lam={lam} is not below the essential spectrum minus {ESS_MARGIN:g}")
    try:
        n, X = converge(lambda X: count_below_fixed(problem, op.side, lam, X, rtol), policy,
                        lambda p, c: p == c, f"{op.name} count below {lam}")
    except NoConvergence as exc:
        return CountReport(op.name, [(-math.inf, lam)], None, [], policy.max_X, False, exc.last_value, "prufer")
    return CountReport(op.name, [(-math.inf, lam)], n, [], X, True, None, "prufer")
