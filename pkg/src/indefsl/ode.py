"""Shooting layer: integration of the quasi-derivative system with Pruefer tracking.

All half-line problems use the equation ``-(p u')' + q u = lam |r| u``; the
sign of the weight only enters through which half-line is meant. States are
``(u, v)`` with ``v = p u'``.

The Pruefer angle is ``theta = arg(v + i u)``; it passes through multiples of
pi exactly at zeros of ``u`` and is lifted continuously along the path.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .coefficients import IndefiniteProblem, PeriodicBands
from .errors import NonfiniteState, StepUnderflow

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
MAX_STEPS = 2_000_000


@dataclass(frozen=True)
class SLState:
    """Point on a solution: position, u and the quasi-derivative v = p u'."""

    x: float
    u: float
    v: float

    @property
    def angle(self) -> float:
        """Pruefer angle arg(v + i u) in (-pi, pi]."""
        return math.atan2(self.u, self.v)

    def normalized(self) -> "SLState":
        n = math.hypot(self.u, self.v)
        return SLState(self.x, self.u / n, self.v / n)


@dataclass(frozen=True)
class PrueferTrace:
    """Result of one integration.

    ``theta_start``/``theta_end`` are the lifted Pruefer angles at the ends,
    ``rho_log`` is ``log |(u, v)|`` at the end relative to a unit start, and
    ``weight_integral`` is ``int |r| u^2 |dx|`` of the unit-start solution.
    Sample arrays are filled only when a trace was requested.
    """

    x0: float
    x1: float
    lam: float
    theta_start: float
    theta_end: float
    rho_log: float
    weight_integral: float
    nsteps: int
    x: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    u: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    v: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    theta: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    log_scale: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    @property
    def zero_count(self) -> int:
        """Zeros of u strictly inside the path (endpoint zeros excluded)."""
        ts, te = self.theta_start, self.theta_end
        if te >= ts:
            return max(0, math.ceil(te / math.pi) - 1 - math.floor(ts / math.pi))
        return max(0, math.ceil(ts / math.pi) - 1 - math.floor(te / math.pi))

    def to_csv(self, path_or_file) -> None:
        """Write columns x, u, v, theta, log_scale (u, v are scaled back when finite)."""
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["x", "u", "v", "theta", "log_scale"])
            for row in zip(self.x, self.u, self.v, self.theta, self.log_scale):
                w.writerow([f"{val:.17g}" for val in row])
        finally:
            if own:
                fh.close()


@dataclass(frozen=True)
class Shot:
    """Raw multi-column integration result (columns share the path)."""

    x0: float
    x1: float
    lams: np.ndarray
    Y: np.ndarray  # (2, m) terminal directions, scaled by exp(logscale)
    logscale: np.ndarray
    theta: np.ndarray
    gram: np.ndarray
    nsteps: int
    trace: tuple | None = None

    def true_state(self, j: int = 0) -> np.ndarray:
        return self.Y[:, j] * math.exp(self.logscale[j])

    def unit_state(self, j: int = 0) -> np.ndarray:
        y = self.Y[:, j]
        return y / math.hypot(y[0], y[1])


def shoot(
    problem: IndefiniteProblem,
    lams,
    x0: float,
    x1: float,
    Y0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    trace_cap: int = 0,
) -> Shot:
    """Integrate columns of ``Y0`` from ``x0`` to ``x1``, one spectral parameter per column."""
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    Y0 = np.asarray(Y0, dtype=np.float64).reshape(2, -1)
    if Y0.shape[1] != lams.shape[0]:
        Y0 = np.repeat(Y0[:, :1], lams.shape[0], axis=1) if Y0.shape[1] == 1 else Y0
    if not (np.all(np.isfinite(lams)) and np.all(np.isfinite(Y0))):
        raise NonfiniteState("non-finite spectral parameter or initial state")
    P, Q, R = problem.p.program, problem.q.program, problem.r.program
    breaks = np.asarray(problem.breakpoints, dtype=np.float64)
    # start with a step resolving the local oscillation scale
    h0 = min(abs(x1 - x0), 0.05) if x1 != x0 else 0.0
    Y, ls, th, G, n, status, tx, tu, tv, tl, tt, ntr = _kernels.integrate_kernel(
        P.ops, P.args, Q.ops, Q.args, R.ops, R.args,
        lams, float(x0), float(x1), Y0, breaks, rtol, atol, h0, MAX_STEPS, trace_cap,
    )
    if status == _kernels.STATUS_UNDERFLOW:
        raise StepUnderflow(f"step size underflow integrating {x0} -> {x1} at lam={lams.tolist()}")
    if status == _kernels.STATUS_NONFINITE:
        raise NonfiniteState(f"non-finite state integrating {x0} -> {x1} at lam={lams.tolist()}")
    if status == _kernels.STATUS_MAXSTEPS:
        raise StepUnderflow(f"step budget exhausted integrating {x0} -> {x1}")
    trace = (tx[:ntr], tu[:ntr], tv[:ntr], tl[:ntr], tt[:ntr]) if trace_cap else None
    return Shot(float(x0), float(x1), lams, Y, ls, th, G, int(n), trace)


def _endpoints(problem: IndefiniteProblem, side: str, X: float) -> tuple[float, float]:
    if side == "plus":
        return problem.c, problem.c + X
    if side == "minus":
        return problem.c, problem.c - X
    raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")


def integrate(
    problem: IndefiniteProblem,
    side: str,
    lam: float,
    init: SLState | tuple[float, float],
    X: float,
    direction: str = "outward",
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    trace: bool = False,
    trace_cap: int = 200_000,
    equation_sign: int = 1,
) -> tuple[SLState, PrueferTrace]:
    """Integrate ``-(p u')' + q u = equation_sign * lam * |r| u`` on one half-line
    between ``c`` and ``c +- X``.

    ``direction='outward'`` starts at ``c``; ``'inward'`` starts at the far end.
    The returned state is the terminal direction (unit norm); its true size is
    ``exp(trace.rho_log)`` times the size of ``init``.
    """
    near, far = _endpoints(problem, side, X)
    x0, x1 = (near, far) if direction == "outward" else (far, near)
    u0, v0 = (init.u, init.v) if isinstance(init, SLState) else init
    n0 = math.hypot(u0, v0)
    if n0 == 0:
        raise NonfiniteState("initial state is zero")
    if equation_sign not in (1, -1):
        raise ValueError("equation_sign must be +1 or -1")
    shot = shoot(problem, [equation_sign * lam], x0, x1, [[u0 / n0], [v0 / n0]], rtol, atol,
                 trace_cap if trace else 0)
    y = shot.unit_state()
    rho = float(shot.logscale[0] + math.log(math.hypot(*shot.Y[:, 0])))
    arrays = {}
    if shot.trace is not None:
        tx, tu, tv, tl, tt = shot.trace
        arrays = dict(x=tx, u=tu, v=tv, theta=tt, log_scale=tl)
    pt = PrueferTrace(
        x0=x0, x1=x1, lam=float(lam),
        theta_start=math.atan2(u0, v0), theta_end=float(shot.theta[0]),
        rho_log=rho, weight_integral=float(shot.gram[0, 0] * math.exp(2 * shot.logscale[0])),
        nsteps=shot.nsteps, **arrays,
    )
    return SLState(x1, float(y[0]), float(y[1])), pt


@dataclass(frozen=True)
class PeriodMap:
    """Monodromy over one period starting at ``x0``; columns are the
    solutions with initial data (1, 0) and (0, 1)."""

    x0: float
    lam: float
    matrix: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def floquet(self):
        """Multipliers (|rho_small| <= |rho_large|) and their eigenvectors, for real multipliers."""
        (a, b), (c, d) = self.matrix
        D = a + d
        # equals D^2 - 4 for unit determinant but keeps accuracy near narrow gaps
        disc = (a - d) ** 2 + 4.0 * b * c
        if disc <= 0:
            raise ValueError(f"multipliers are not real at lam={self.lam} (trace {D})")
        s = math.sqrt(disc)
        big = (D + math.copysign(s, D)) / 2.0
        small = 1.0 / big  # det = 1
        return small, self._eigvec(small), big, self._eigvec(big)

    def _eigvec(self, rho):
        (a, b), (c, d) = self.matrix
        # use the better conditioned of the two rows of (M - rho I)
        if abs(b) + abs(a - rho) >= abs(c) + abs(d - rho):
            vec = np.array([b, rho - a])
        else:
            vec = np.array([rho - d, c])
        return vec / np.linalg.norm(vec)


def period_map(problem: IndefiniteProblem, lam: float, x0: float | None = None,
               rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL) -> PeriodMap:
    """Transfer matrix over ``[x0, x0 + period]`` (forward)."""
    ess = problem.ess_model
    if not isinstance(ess, PeriodicBands):
        raise ValueError("period_map needs a PeriodicBands essential-spectrum model")
    x0 = problem.c if x0 is None else float(x0)
    shot = shoot(problem, [lam, lam], x0, x0 + ess.period, np.eye(2), rtol, atol)
    M = shot.Y * np.exp(shot.logscale)[None, :]
    return PeriodMap(x0, float(lam), M)


@dataclass(frozen=True)
class LagrangeReport:
    """Terms of the Green identity on ``[c, c +- X]`` for two solutions."""

    lam1: float
    lam2: float
    X: float
    lhs: float            # (lam1 - lam2) int |r| h1 h2
    boundary_c: float     # (v1 u2 - u1 v2)(c)
    boundary_X: float     # (v1 u2 - u1 v2)(c +- X)
    defect: float         # lhs - orientation * (boundary_c - boundary_X)
    relative_defect: float


def lagrange_defect(
    problem: IndefiniteProblem,
    lam1: float,
    lam2: float,
    init1: tuple[float, float],
    init2: tuple[float, float],
    X: float,
    side: str = "plus",
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> LagrangeReport:
    """Check the Green identity for two solutions started at ``c``.

    The truncated boundary term at ``c +- X`` is reported separately; it only
    vanishes in the limit when both solutions lie in L^2 at infinity.
    """
    near, far = _endpoints(problem, side, X)
    Y0 = np.array([[init1[0], init2[0]], [init1[1], init2[1]]], dtype=float)
    shot = shoot(problem, [lam1, lam2], near, far, Y0, rtol, atol)
    s1, s2 = np.exp(shot.logscale)
    h1 = shot.Y[:, 0] * s1
    h2 = shot.Y[:, 1] * s2
    G12 = shot.gram[0, 1] * s1 * s2
    lhs = (lam1 - lam2) * G12
    bc = init1[1] * init2[0] - init1[0] * init2[1]
    bX = h1[1] * h2[0] - h1[0] * h2[1]
    # on the left half-line the outward orientation reverses the sign
    orient = 1.0 if side == "plus" else -1.0
    defect = lhs - orient * (bc - bX)
    scale = max(abs(lhs), abs(bc), abs(bX), 1e-300)
    return LagrangeReport(float(lam1), float(lam2), float(X), float(lhs), float(bc), float(bX),
                          float(defect), float(abs(defect) / scale))
