"""Finite-difference matrix-pencil oracle, used for cross-validation only.

The operator ``-(p f')' + q f`` is discretised in divergence form on a
vertex-centred grid with Dirichlet conditions at the cut-off points::

    T[i, i]   = p(i+1/2) / h(i+) + p(i-1/2) / h(i-) + q(x_i) w_i
    T[i, i+1] = -p(i+1/2) / h(i+)
    R[i, i]   = r(x_i) w_i

with ``w_i`` the control-volume width. On the whole line the sign change
point ``c`` sits on a cell face so that no grid point sees ``r(c)``.

Two solvers are provided. ``pencil_eigenvalues`` is the dense reference: it
factors ``T = L L^T`` and diagonalises the symmetric ``S = L^-1 R L^-T``,
returning ``1/mu``. ``eigenvalues_in`` bisects on the Sylvester inertia of the
tridiagonal ``T - lam R`` (O(n) per probe); for ``lam > 0`` the number of
negative pivots equals the number of pencil eigenvalues in ``(0, lam)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from numba import njit

from .coefficients import IndefiniteProblem, PeriodicBands
from .counting import CountReport, Enclosure
from .errors import FactorizationFailure, NonPositiveDefiniteT

OPERATORS = ("A", "JA", "B+", "B-", "-B-")


@dataclass(frozen=True)
class Pencil:
    """Tridiagonal T (diagonal ``d``, off-diagonal ``e``) and diagonal R."""

    d: np.ndarray
    e: np.ndarray
    r: np.ndarray
    x: np.ndarray
    X: float
    side: str  # "full", "plus", "minus" or "periodic"/"antiperiodic"
    corner: float = 0.0  # T[0, n-1] = T[n-1, 0] for periodic grids

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @property
    def T(self) -> np.ndarray:
        T = np.diag(self.d) + np.diag(self.e, 1) + np.diag(self.e, -1)
        if self.corner:
            T[0, -1] = T[-1, 0] = self.corner
        return T

    @property
    def R(self) -> np.ndarray:
        return np.diag(self.r)

    @property
    def h(self) -> float:
        """Largest grid spacing."""
        return float(np.max(np.diff(self.x))) if self.n > 1 else self.X

    def absolute(self) -> "Pencil":
        """Same T with weight |r| (the definite problem of A)."""
        return Pencil(self.d, self.e, np.abs(self.r), self.x, self.X, self.side, self.corner)


def discretize(problem: IndefiniteProblem, X: float, n: int, side: str = "full") -> Pencil:
    """Dirichlet discretisation on [c-X, c+X] (``full``), [c, c+X] (``plus``) or [c-X, c] (``minus``)."""
    if n < 16:
        raise ValueError("discretize needs n >= 16")
    if not X > 0:
        raise ValueError("discretize needs X > 0")
    c = problem.c
    if side == "full":
        nl = (n + 1) // 2
        nr = n - nl
        hL = X / (nl + 0.5)
        hR = X / (nr + 0.5)
        xl = c - (np.arange(nl, 0, -1) - 0.5) * hL
        xr = c + (np.arange(1, nr + 1) - 0.5) * hR
        x = np.concatenate([xl, xr])
        ends = (c - X, c + X)
    elif side in ("plus", "minus"):
        h = X / (n + 1)
        x = c + h * np.arange(1, n + 1) if side == "plus" else c - X + h * np.arange(1, n + 1)
        ends = (c, c + X) if side == "plus" else (c - X, c)
    else:
        raise ValueError(f"unknown side {side!r}")
    nodes = np.concatenate([[ends[0]], x, [ends[1]]])
    gaps = np.diff(nodes)              # n + 1 spacings
    faces = 0.5 * (nodes[:-1] + nodes[1:])
    with np.errstate(all="ignore"):
        pf = problem.p(faces)
        q = problem.q(x)
        r = problem.r(x)
    w = 0.5 * (gaps[:-1] + gaps[1:])
    flux = pf / gaps
    d = flux[:-1] + flux[1:] + q * w
    e = -flux[1:-1]
    if side != "full":
        r = np.abs(r)
    pen = Pencil(d, e, r * w, x, float(X), side)
    if side == "full" and not (np.all(r[x < c] < 0) and np.all(r[x > c] > 0)):
        raise NonPositiveDefiniteT("weight sign pattern violated on the grid")
    if _neg_count(d, e, np.zeros_like(d), 0.0) != 0:
        raise NonPositiveDefiniteT(f"T is not positive definite at X={X}, n={n}")
    return pen


def discretize_periodic(problem: IndefiniteProblem, n: int, antiperiodic: bool = False,
                        x0: float | None = None) -> Pencil:
    """One period with periodic (or antiperiodic) closure; weight |r|."""
    ess = problem.ess_model
    if not isinstance(ess, PeriodicBands):
        raise ValueError("discretize_periodic needs a PeriodicBands model")
    gamma = ess.period
    x0 = problem.c if x0 is None else x0
    h = gamma / n
    # nodes at cell midpoints keep grid points off the sign-change point c
    x = x0 + h * (np.arange(n) + 0.5)
    faces = x0 + h * np.arange(n + 1)
    with np.errstate(all="ignore"):
        pf = problem.p(faces[1:])   # face to the right of node i
        q = problem.q(x)
        r = np.abs(problem.r(x))
    flux = pf / h
    left = np.roll(flux, 1)
    d = flux + left + q * h
    e = -flux[:-1]
    corner = (1.0 if antiperiodic else -1.0) * flux[-1]
    return Pencil(d, e, r * h, x, gamma, "antiperiodic" if antiperiodic else "periodic", corner)


# ---------------------------------------------------------------- inertia


@njit(cache=True)
def _neg_count(d, e, r, lam):
    """Negative pivots of the LDL^T factorisation of tridiag(d - lam r, e)."""
    n = d.shape[0]
    cnt = 0
    piv = d[0] - lam * r[0]
    tiny = 1e-300
    for i in range(n):
        if i > 0:
            piv = (d[i] - lam * r[i]) - e[i - 1] * e[i - 1] / piv
        if piv == 0.0:
            piv = -tiny
        if piv < 0.0:
            cnt += 1
    return cnt


@njit(cache=True)
def _neg_count_cyclic(d, e, r, corner, lam):
    """Inertia of a tridiagonal matrix with corner entries, by bordering the last row."""
    n = d.shape[0]
    m = n - 1
    # LDL^T of the leading (n-1) block, solving K11 y = k with k = (corner, 0, ..., e[m-1])
    piv = np.empty(m)
    cnt = 0
    for i in range(m):
        a = d[i] - lam * r[i]
        if i > 0:
            a -= e[i - 1] * e[i - 1] / piv[i - 1]
        if a == 0.0:
            a = -1e-300
        piv[i] = a
        if a < 0.0:
            cnt += 1
    k = np.zeros(m)
    k[0] += corner
    k[m - 1] += e[m - 1]
    # forward: z = L^-1 k, L unit lower with L[i, i-1] = e[i-1] / piv[i-1]
    z = np.empty(m)
    z[0] = k[0]
    for i in range(1, m):
        z[i] = k[i] - e[i - 1] / piv[i - 1] * z[i - 1]
    s = 0.0
    for i in range(m):
        s += z[i] * z[i] / piv[i]
    schur = (d[n - 1] - lam * r[n - 1]) - s
    if schur <= 0.0:
        cnt += 1
    return cnt


def negative_count(pen: Pencil, lam: float) -> int:
    if pen.corner:
        return int(_neg_count_cyclic(pen.d, pen.e, pen.r, pen.corner, float(lam)))
    return int(_neg_count(pen.d, pen.e, pen.r, float(lam)))


def _definite(pen) -> bool:
    return bool(pen.corner) or bool(np.all(pen.r > 0))


def _count_le(pen, lam):
    """Eigenvalues <= lam (definite), in (0, lam] (lam > 0) or in [lam, 0) (lam < 0)."""
    if lam == 0.0 and not _definite(pen):
        return 0
    return negative_count(pen, np.nextafter(lam, math.inf if (lam > 0 or _definite(pen)) else -math.inf))


def count_in(pen: Pencil, a: float, b: float) -> int:
    """Pencil eigenvalues in the open interval (a, b)."""
    if _definite(pen) or a >= 0:
        return negative_count(pen, b) - _count_le(pen, a)
    if b <= 0:
        return negative_count(pen, a) - _count_le(pen, b)
    return count_in(pen, a, 0.0) + count_in(pen, 0.0, b)


def eigenvalues_in(pen: Pencil, a: float, b: float, tol: float = 1e-13) -> np.ndarray:
    """All pencil eigenvalues in (a, b) by inertia bisection."""
    if a < 0.0 < b and not _definite(pen):
        return np.concatenate([eigenvalues_in(pen, a, 0.0, tol), eigenvalues_in(pen, 0.0, b, tol)])
    out = []

    def rec(lo, hi, k):
        if k == 0:
            return
        if hi - lo <= tol * max(1.0, abs(lo), abs(hi)):
            out.extend([0.5 * (lo + hi)] * k)
            return
        mid = 0.5 * (lo + hi)
        kl, kr = count_in(pen, lo, mid), count_in(pen, mid, hi)
        out.extend([mid] * (k - kl - kr))  # eigenvalues sitting exactly at mid
        rec(lo, mid, kl)
        rec(mid, hi, kr)

    rec(a, b, count_in(pen, a, b))
    return np.sort(np.array(out))


# ------------------------------------------------------------ dense path


def pencil_eigenvalues(pen: Pencil, window: tuple[float, float] | None = None) -> np.ndarray:
    """Eigenvalues of T v = lam R v by the reciprocal Cholesky reduction (dense).

    With ``window=(a, b)`` only eigenvalues in (a, b) are returned (0 < a or b < 0).
    """
    T = pen.T
    try:
        L = sla.cholesky(T, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NonPositiveDefiniteT(f"Cholesky of T failed: {exc}") from None
    try:
        Z = sla.solve_triangular(L, np.eye(pen.n), lower=True)
        S = (Z * pen.r) @ Z.T
        S = 0.5 * (S + S.T)
        if window is None:
            mu = sla.eigvalsh(S)
        else:
            a, b = window
            if a < 0 < b:
                raise ValueError("window must not contain 0")
            lo, hi = sorted((1.0 / a if a else math.inf, 1.0 / b if b else math.inf))
            lo, hi = max(lo, -1e300), min(hi, 1e300)
            mu = sla.eigvalsh(S, subset_by_value=(lo, hi))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise FactorizationFailure(str(exc)) from None
    if np.any(mu == 0):
        raise FactorizationFailure("zero reciprocal eigenvalue (singular R)")
    return np.sort(1.0 / mu)


# ------------------------------------------------------------- Richardson


def _weight_for(operator):
    return "abs" if operator in ("A", "B+", "B-", "-B-") else "signed"


def _pencil_for(problem, operator, X, n):
    if operator in ("A", "JA"):
        pen = discretize(problem, X, n, "full")
        return pen.absolute() if operator == "A" else pen
    side = "plus" if operator == "B+" else "minus"
    return discretize(problem, X, n, side)


def oracle_eigenvalues(problem: IndefiniteProblem, operator: str, a: float, b: float,
                       X: float = 30.0, n: int = 4000, extrapolate: bool = True) -> np.ndarray:
    """Eigenvalues in (a, b) at grid size n, Richardson-extrapolated with n/2 by default."""
    if operator not in OPERATORS:
        raise ValueError(f"operator must be one of {OPERATORS}")
    if operator == "-B-":
        return -oracle_eigenvalues(problem, "B-", -b, -a, X, n, extrapolate)[::-1]
    pen = _pencil_for(problem, operator, X, n)
    ev = eigenvalues_in(pen, a, b)
    if not extrapolate:
        return ev
    pen2 = _pencil_for(problem, operator, X, n // 2)
    # widen the coarse window a little so eigenvalues near the ends pair up
    pad = 10 * (b - a) * 1e-3
    ev2 = eigenvalues_in(pen2, a - pad, b + pad)
    if len(ev2) != len(ev):
        ev2 = np.array([ev2[np.argmin(np.abs(ev2 - x))] for x in ev]) if len(ev2) else ev
    h1, h2 = pen.h, pen2.h
    return (h2**2 * ev - h1**2 * ev2) / (h2**2 - h1**2)


def periodic_edges(problem: IndefiniteProblem, n: int, lam_max: float, extrapolate: bool = True) -> dict:
    """Periodic and antiperiodic FD eigenvalues below lam_max."""
    out = {}
    for anti in (False, True):
        pen = discretize_periodic(problem, n, anti)
        ev = eigenvalues_in(pen, -1e6, lam_max)
        if extrapolate:
            pen2 = discretize_periodic(problem, n // 2, anti)
            ev2 = eigenvalues_in(pen2, -1e6, lam_max * 1.01)[: len(ev)]
            h1, h2 = pen.h, pen2.h
            ev = (h2**2 * ev - h1**2 * ev2) / (h2**2 - h1**2)
        out["antiperiodic" if anti else "periodic"] = ev
    return out


def oracle_counts(problem: IndefiniteProblem, operator: str, interval: tuple[float, float],
                  X: float = 30.0, n: int = 4000) -> CountReport:
    """Eigenvalue count of the discretised operator in the interval (both mirrors for JA)."""
    a, b = interval
    if operator == "JA":
        ivs = [(-b, -a), (a, b)] if a >= 0 else [(a, b)]
        ev = np.concatenate([oracle_eigenvalues(problem, "JA", lo, hi, X, n) for lo, hi in ivs])
    else:
        ivs = [(a, b)]
        ev = oracle_eigenvalues(problem, operator, a, b, X, n)
    encl = [Enclosure(float(x), float(x)) for x in ev]
    return CountReport(f"oracle:{operator}", ivs, len(ev), encl, X, True, None, "pencil", {"n": n})


def pairing_defect(ev: np.ndarray) -> float:
    """max |lam_k + lam_{-k}| over the +- ordered pairs; inf if the counts differ."""
    pos = np.sort(ev[ev > 0])
    neg = np.sort(-ev[ev < 0])
    if len(pos) != len(neg):
        return math.inf
    return float(np.max(np.abs(pos - neg))) if len(pos) else 0.0
