"""Titchmarsh-Weyl boundary values of the half-line problems.

``m_plus(lam) = v(c)/u(c)`` for the solution of ``-(p u')' + q u = lam |r| u``
that is square integrable near +infinity, ``m_minus`` likewise near -infinity.
Values are kept projectively as an angle ``phi = atan2(v, u) mod pi`` so
that poles (``phi = pi/2``) are ordinary points.

The L^2 solution is approximated at a finite truncation ``X`` by a boundary
condition at ``c +- X``: Dirichlet by default, or the decaying Floquet
direction for periodic coefficients (which is exact up to rounding).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .coefficients import ConstantTail, DeclaredGaps, IndefiniteProblem, PeriodicBands, TruncationPolicy
from .errors import EssentialSpectrumProximity, NoConvergence
from .ode import DEFAULT_ATOL, DEFAULT_RTOL, shoot

ESS_MARGIN = 1e-6
FLOQUET_RTOL = 1e-12
HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class ProjectiveBoundaryValue:
    """Angle ``theta`` in [0, pi) with ``m = tan(theta)``; ``theta = pi/2`` is a pole."""

    theta: float
    error_estimate: float = 0.0
    X: float = math.nan

    @property
    def as_scalar(self) -> float:
        if self.theta == HALF_PI:
            return math.inf
        return math.tan(self.theta)

    @property
    def arctan(self) -> float:
        """atan(m) in (-pi/2, pi/2]."""
        return self.theta if self.theta <= HALF_PI else self.theta - math.pi

    @classmethod
    def from_uv(cls, u: float, v: float, **kw) -> "ProjectiveBoundaryValue":
        th = math.atan2(v, u) % math.pi
        if th >= math.pi:
            th = 0.0
        return cls(th, **kw)


def angle_gap(a: float, b: float) -> float:
    """Distance between two projective angles (mod pi)."""
    d = (a - b) % math.pi
    return min(d, math.pi - d)


@dataclass(frozen=True)
class HalfLineShot:
    """Boundary data at ``c`` for one truncated half-line problem.

    ``prufer`` is the lifted Pruefer angle arg(v + i u) at ``c`` when the angle
    at the far end is ``prufer0``. ``dphi`` is d(phi)/d(lam) of the projective
    angle phi = atan2(v, u).
    """

    side: str
    lam: float
    X: float
    bc: str
    u: float
    v: float
    prufer: float
    prufer0: float
    dphi: float

    @property
    def phi(self) -> float:
        return ProjectiveBoundaryValue.from_uv(self.u, self.v).theta

    @property
    def pbv(self) -> ProjectiveBoundaryValue:
        return ProjectiveBoundaryValue.from_uv(self.u, self.v, X=self.X)


def default_bc(problem: IndefiniteProblem) -> str:
    return "floquet" if isinstance(problem.ess_model, PeriodicBands) else "dirichlet"


def _floquet_start(problem, side, lam, X, rtol, atol):
    """Decaying Floquet direction at the far end and the weight integral of the tail."""
    from .ode import period_map

    gamma = problem.ess_model.period
    # one period only, so a tight tolerance is cheap and keeps edge-adjacent
    # multipliers resolvable
    rtol, atol = min(rtol, FLOQUET_RTOL), min(atol, FLOQUET_RTOL * 1e-2)
    if side == "plus":
        far = problem.c + X
        pm = period_map(problem, lam, far, rtol, atol)
        small, vec, _, _ = pm.floquet()
        shot = shoot(problem, [lam], far, far + gamma, vec.reshape(2, 1), rtol, atol)
        rho2 = small * small
    else:
        far = problem.c - X
        pm = period_map(problem, lam, far - gamma, rtol, atol)
        _, _, big, vec = pm.floquet()
        shot = shoot(problem, [lam], far, far - gamma, vec.reshape(2, 1), rtol, atol)
        rho2 = 1.0 / (big * big)
    tail = shot.gram[0, 0] * math.exp(2 * shot.logscale[0]) / (1.0 - rho2)
    return vec, tail


@lru_cache(maxsize=200_000)
def _half_line_shot(problem, side, lam, X, bc, rtol, atol) -> HalfLineShot:
    if bc == "dirichlet":
        start = np.array([0.0, 1.0])
        tail = 0.0
    elif bc == "floquet":
        start, tail = _floquet_start(problem, side, lam, X, rtol, atol)
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")
    far = problem.c + X if side == "plus" else problem.c - X
    shot = shoot(problem, [lam], far, problem.c, start.reshape(2, 1), rtol, atol)
    # work in the renormalised frame: the true solution is Y * exp(logscale)
    u, v = shot.Y[:, 0]
    n2 = u * u + v * v
    dphi = (shot.gram[0, 0] + tail * math.exp(-2.0 * shot.logscale[0])) / n2
    if side == "minus":
        dphi = -dphi
    n = math.sqrt(n2)
    return HalfLineShot(side, lam, X, bc, u / n, v / n, float(shot.theta[0]),
                        math.atan2(start[0], start[1]), dphi)


def half_line_shot(
    problem: IndefiniteProblem,
    side: str,
    lam: float,
    X: float,
    bc: str | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> HalfLineShot:
    """Shoot from the far end ``c +- X`` back to ``c`` at fixed truncation."""
    if side not in ("plus", "minus"):
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    bc = bc or default_bc(problem)
    return _half_line_shot(problem, side, float(lam), float(X), bc, float(rtol), float(atol))


def clear_cache() -> None:
    _half_line_shot.cache_clear()


def essential_intervals(problem: IndefiniteProblem, upto: float) -> list[tuple[float, float]]:
    """Essential spectrum of A (hence of both half-line problems) intersected with (-inf, upto]."""
    ess = problem.ess_model
    if isinstance(ess, ConstantTail):
        return [(ess.q_inf, math.inf)] if ess.q_inf <= upto else []
    if isinstance(ess, DeclaredGaps):
        out, lo = [], 0.0
        for a, b in ess.gaps:
            if a > lo:
                out.append((lo, a))
            lo = b
        out.append((lo, math.inf))
        return [(a, b) for a, b in out if a <= upto]
    from .periodic import band_edges

    return [(a, b) for a, b in band_edges(problem, lam_max=max(upto, 0.0) + 1.0).bands if a <= upto]


def ess_distance(problem: IndefiniteProblem, lam: float) -> float:
    """Signed distance to the essential spectrum: negative inside."""
    best = math.inf
    for a, b in essential_intervals(problem, lam + 1.0):
        if a <= lam <= b:
            return -min(lam - a, b - lam)
        best = min(best, abs(lam - a), abs(lam - b))
    return best


def check_resolvent(problem: IndefiniteProblem, lam: float, eps: float = ESS_MARGIN) -> None:
    d = ess_distance(problem, lam)
    if d < eps:
        raise EssentialSpectrumProximity(
            f"lambda={lam:.17g} is {'inside' if d < 0 else 'within ' + format(d, '.3g') + ' of'} "
            f"the essential spectrum (margin {eps:g})"
        )


def boundary_value(
    problem: IndefiniteProblem,
    side: str,
    lam: float,
    policy: TruncationPolicy | None = None,
    bc: str | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    eps: float = ESS_MARGIN,
) -> ProjectiveBoundaryValue:
    """Weyl boundary value with truncation doubling until the angle is stable."""
    check_resolvent(problem, lam, eps)
    policy = policy or problem.truncation
    prev = None
    for X in policy.sequence():
        th = half_line_shot(problem, side, lam, X, bc, rtol, atol).phi
        if prev is not None:
            d = angle_gap(th, prev)
            if d <= policy.tol:
                return ProjectiveBoundaryValue(th, d, X)
        prev = th
    raise NoConvergence(f"m_{side}({lam}) not stable up to X={policy.max_X}", last_value=prev, X=policy.max_X)


def m_plus(problem: IndefiniteProblem, lam: float, **kw) -> ProjectiveBoundaryValue:
    return boundary_value(problem, "plus", lam, **kw)


def m_minus(problem: IndefiniteProblem, lam: float, **kw) -> ProjectiveBoundaryValue:
    return boundary_value(problem, "minus", lam, **kw)
