"""Band structure of periodic coefficients from the discriminant.

The discriminant is the trace of the period map. Band edges are the points
where it equals +2 (periodic eigenvalues) or -2 (antiperiodic eigenvalues);
closed gaps show up as extrema that just touch the level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .coefficients import IndefiniteProblem, PeriodicBands
from .errors import InterleavingViolation
from .ode import period_map

DEFAULT_LAM_MAX = 100.0
CLOSED_GAP_TOL = 1e-13
BAND_RTOL = 1e-12
EDGE_XTOL = 1e-13


@dataclass(frozen=True)
class BandEdge:
    value: float
    kind: str  # "periodic" (trace +2) or "antiperiodic" (trace -2)


@dataclass(frozen=True)
class BandStructure:
    edges: tuple[BandEdge, ...]
    bands: tuple[tuple[float, float], ...]
    gaps: tuple[tuple[float, float], ...]
    closed: tuple[float, ...]
    lam_max: float
    period: float
    checks: dict = field(default_factory=dict, compare=False)

    @property
    def lambda1(self) -> float:
        return self.edges[0].value

    def to_json(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "edges": [{"value": e.value, "kind": e.kind} for e in self.edges],
            "bands": [list(b) for b in self.bands],
            "gaps": [list(g) for g in self.gaps],
            "closed_gaps": list(self.closed),
            "lam_max": self.lam_max,
        }


def discriminant(problem: IndefiniteProblem, lam: float) -> float:
    return period_map(problem, lam).trace


def _lam_key(lam_max):
    if lam_max is None or lam_max <= DEFAULT_LAM_MAX:
        return DEFAULT_LAM_MAX
    return DEFAULT_LAM_MAX * 2.0 ** math.ceil(math.log2(lam_max / DEFAULT_LAM_MAX))


def band_edges(problem: IndefiniteProblem, lam_max: float | None = None) -> BandStructure:
    """All band edges below ``lam_max`` (rounded up to a cached size)."""
    if not isinstance(problem.ess_model, PeriodicBands):
        raise ValueError("band_edges needs a PeriodicBands essential-spectrum model")
    return _band_edges(problem, _lam_key(lam_max))


def gap_function(problem: IndefiniteProblem, lam: float, rtol: float = BAND_RTOL) -> tuple[float, float]:
    """``(trace^2 - 4, trace)`` with the first computed as ``(a - d)^2 + 4 b c``.

    With unit determinant both forms agree, but the second stays accurate near
    narrow gaps where ``a - d``, ``b`` and ``c`` are all small.
    """
    (a, b), (c, d) = period_map(problem, lam, rtol=rtol, atol=rtol * 1e-2).matrix
    return (a - d) ** 2 + 4.0 * b * c, a + d


@lru_cache(maxsize=64)
def _band_edges(problem: IndefiniteProblem, lam_max: float) -> BandStructure:
    gamma = problem.ess_model.period
    F = lambda lam: gap_function(problem, lam)[0]  # noqa: E731

    # below the spectrum the discriminant exceeds 2
    lo = 0.0
    while F(lo) <= 0.0 or discriminant(problem, lo) < 0:
        lo = -1.0 if lo == 0.0 else 2.0 * lo
        if lo < -1e8:
            raise InterleavingViolation("could not find a point below the spectrum")

    # phase speed bound from sampled coefficients over one period
    xs = problem.c + np.linspace(0.0, gamma, 257)
    speed = math.sqrt(float(np.max(np.abs(problem.r(xs)) / problem.p(xs))))
    ds = math.pi / (gamma * speed * 48.0)
    s = np.arange(0.0, math.sqrt(lam_max - lo) + 2 * ds, ds)
    grid = lo + s * s
    vals = np.array([F(x) for x in grid])

    # F < 0 inside bands, F > 0 in gaps; refine every interior local maximum
    # so that gaps narrower than the grid are not missed
    knots = list(zip(grid.tolist(), vals.tolist()))
    maxima = []
    for i in range(1, len(grid) - 1):
        if vals[i] >= vals[i - 1] and vals[i] >= vals[i + 1]:
            res = minimize_scalar(lambda x: -F(x), bounds=(grid[i - 1], grid[i + 1]),
                                  method="bounded", options={"xatol": 1e-13})
            xm = float(res.x)
            maxima.append((xm, float(F(xm))))
    knots = sorted(knots + maxima)
    is_max = {x for x, _ in maxima}

    edges, closed = [], []
    kind_at = lambda lam: "periodic" if discriminant(problem, lam) > 0 else "antiperiodic"  # noqa: E731
    for k in range(1, len(knots) - 1):
        xe, fe = knots[k]
        if xe in is_max and abs(fe) <= CLOSED_GAP_TOL:
            knots[k] = (xe, 0.0)
            closed.append(float(xe))
            kind = kind_at(xe)
            edges += [BandEdge(float(xe), kind), BandEdge(float(xe), kind)]
    for (x0, f0), (x1, f1) in zip(knots, knots[1:]):
        if f0 * f1 < 0:
            root = brentq(F, x0, x1, xtol=EDGE_XTOL, rtol=1e-15)
            edges.append(BandEdge(float(root), kind_at(root)))
    edges = [e for e in sorted(edges, key=lambda e: e.value) if e.value <= lam_max]
    _check_interleaving(edges)

    vals_e = [e.value for e in edges]
    bands, gaps = [], []
    for i in range(0, len(vals_e), 2):
        hi = vals_e[i + 1] if i + 1 < len(vals_e) else math.inf
        bands.append((vals_e[i], hi))
    for (_, b1), (a2, _) in zip(bands, bands[1:]):
        if a2 > b1:
            gaps.append((b1, a2))
    return BandStructure(tuple(edges), tuple(bands), tuple(gaps), tuple(closed), lam_max, gamma,
                         {"interleaving": True})


def _check_interleaving(edges) -> None:
    """Edge kinds must follow P, A A, P P, A A, ... in increasing order."""
    for i, e in enumerate(edges):
        # position 0 -> P, 1,2 -> A, 3,4 -> P, ...
        want = "periodic" if ((i + 1) // 2) % 2 == 0 else "antiperiodic"
        if e.kind != want:
            raise InterleavingViolation(
                f"edge {i} at {e.value:.12g} is {e.kind}, expected {want}"
            )
        if i > 0 and e.value < edges[i - 1].value:
            raise InterleavingViolation("edges out of order")


def audit_gaps_JA(problem: IndefiniteProblem, bands: BandStructure | None = None,
                  max_gaps: int | None = None) -> list:
    """One report per open gap g: JA eigenvalues in g and -g, plus one for (-lambda1, lambda1).

    A has no eigenvalues in the gaps, so the general estimate allows at most 3
    JA eigenvalues in the union; under the symmetry condition at most one per side.
    """
    from .matching import count_JA_pair
    from .theorems import TheoremReport

    bands = bands or band_edges(problem)
    gaps = list(bands.gaps)[:max_gaps] if max_gaps else list(bands.gaps)
    sym = problem.symmetric
    bound = "n_JA(g) <= 1 and n_JA(-g) <= 1" if sym else "n_JA(g) + n_JA(-g) <= 3"
    out = []
    for g in gaps:
        npos, nneg = count_JA_pair(problem, g[0], g[1])
        ok = (npos <= 1 and nneg <= 1) if sym else (npos + nneg <= 3)
        out.append(TheoremReport("periodic_gap", problem.digest, g, {"n_JA_positive": npos, "n_JA_negative": nneg},
                                 bound, "holds" if ok else "violated"))
    lam1 = bands.lambda1
    npos, nneg = count_JA_pair(problem, 0.0, lam1)
    out.append(TheoremReport("gap", problem.digest, (0.0, lam1), {"n_JA_positive": npos, "n_JA_negative": nneg},
                             "(-lambda1, lambda1) in resolvent set of JA",
                             "holds" if npos + nneg == 0 else "violated"))
    return out
