"""Coefficient model, problem validation and essential-spectrum models.

A problem is the triple (r, p, q) on the real line together with the point
``c`` where the weight r changes sign. Conditions on the coefficients are
checked by sampling, so they are proxies for the almost-everywhere statements
they stand for; in particular a weight vanishing on a null set cannot be
distinguished from one that does not.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Union

import jsonschema
import numpy as np

from .errors import NonpositiveP, ParseError, SignPatternViolation, SymmetryDeclaredButViolated
from .expr import Program, compile_expr

SYMMETRY_TOL = 1e-12
DEFAULT_GRID = 10_000


def _wells_expr(params):
    amps = list(params["amplitudes"])
    centers = list(params.get("centers", [0.0] * len(amps)))
    widths = list(params.get("widths", [1.0] * len(amps)))
    if not len(amps) == len(centers) == len(widths):
        raise ParseError("gaussian_wells: amplitudes, centers and widths must have equal length")
    terms = [repr(float(params["q_inf"]))]
    for a, b, s in zip(amps, centers, widths):
        terms.append(f"- {float(a)!r}*exp(-(x - ({float(b)!r}))^2/{float(s)!r})")
    return " ".join(terms)


# name -> (expression template or builder, default params, breakpoints builder)
BUILTINS = {
    "constant": ("value", {"value": 1.0}),
    "sign": ("scale*sgn(x - c)", {"scale": 1.0, "c": 0.0}),
    "sech2": ("(kappa + 1)^2 - kappa*(kappa + 1)/cosh(x)^2", {"kappa": 1.0}),
    "rational_tail": ("q_inf + g/(s^2 + x^2)", {"q_inf": 1.0, "g": -0.5, "s": 1.0}),
    "periodic_cos": ("a0 + a1*cos(2*pi*x/period + phase)", {"a0": 10.0, "a1": 2.0, "period": 1.0, "phase": 0.0}),
    "gaussian_wells": (_wells_expr, {"q_inf": 1.0, "amplitudes": []}),
}


@dataclass(frozen=True)
class Coefficient:
    """One coefficient function with its declared discontinuities."""

    program: Program
    breakpoints: tuple[float, ...] = ()
    source: dict = field(default_factory=dict, compare=False)

    def __call__(self, x):
        return self.program(x)

    @classmethod
    def from_json(cls, spec) -> "Coefficient":
        if isinstance(spec, (int, float)):
            spec = {"builtin": "constant", "params": {"value": float(spec)}}
        if "builtin" in spec:
            name = spec["builtin"]
            if name not in BUILTINS:
                raise ParseError(f"unknown builtin {name!r}")
            template, defaults = BUILTINS[name]
            params = {**defaults, **spec.get("params", {})}
            text = template(params) if callable(template) else template
            scalars = {k: v for k, v in params.items() if isinstance(v, (int, float))}
            breaks = [params["c"]] if name == "sign" else []
            prog = compile_expr(text, scalars)
            return cls(prog, tuple(float(b) for b in spec.get("breakpoints", breaks)), dict(spec))
        if "expr" in spec:
            prog = compile_expr(spec["expr"], spec.get("params"))
            return cls(prog, tuple(float(b) for b in spec.get("breakpoints", [])), dict(spec))
        raise ParseError(f"coefficient needs 'builtin' or 'expr': {spec!r}")


@dataclass(frozen=True)
class ConstantTail:
    q_inf: float

    def __post_init__(self):
        if not self.q_inf > 0:
            raise ParseError("ConstantTail requires q_inf > 0")


@dataclass(frozen=True)
class PeriodicBands:
    period: float

    def __post_init__(self):
        if not self.period > 0:
            raise ParseError("PeriodicBands requires period > 0")


@dataclass(frozen=True)
class DeclaredGaps:
    gaps: tuple[tuple[float, float], ...]

    def __post_init__(self):
        gs = sorted(self.gaps)
        for a, b in gs:
            if not (0 <= a < b):
                raise ParseError(f"declared gap ({a}, {b}) needs 0 <= a < b")
        for (_, b1), (a2, _) in zip(gs, gs[1:]):
            if a2 < b1:
                raise ParseError("declared gaps overlap")
        object.__setattr__(self, "gaps", tuple((float(a), float(b)) for a, b in gs))


EssentialSpectrumModel = Union[ConstantTail, PeriodicBands, DeclaredGaps]


@dataclass(frozen=True)
class TruncationPolicy:
    X0: float = 20.0
    growth: float = 2.0
    max_X: float = 320.0
    tol: float = 1e-9

    def sequence(self):
        X = self.X0
        while X <= self.max_X * (1 + 1e-12):
            yield X
            X *= self.growth


@dataclass(frozen=True)
class CoefficientField:
    p: Coefficient
    q: Coefficient
    r: Coefficient

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(sorted(set(self.p.breakpoints + self.q.breakpoints + self.r.breakpoints)))


@dataclass(frozen=True)
class IndefiniteProblem:
    coeffs: CoefficientField
    c: float = 0.0
    symmetric: bool = False
    ess_model: EssentialSpectrumModel = ConstantTail(1.0)
    truncation: TruncationPolicy = TruncationPolicy()
    name: str = ""
    checks: dict = field(default_factory=dict, compare=False, hash=False)
    source: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    @property
    def p(self):
        return self.coeffs.p

    @property
    def q(self):
        return self.coeffs.q

    @property
    def r(self):
        return self.coeffs.r

    @property
    def breakpoints(self):
        return self.coeffs.breakpoints

    @property
    def digest(self) -> str:
        blob = json.dumps(self.source, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def __hash__(self):
        return hash(self.digest)

    def __eq__(self, other):
        return isinstance(other, IndefiniteProblem) and self.source == other.source


PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["r", "p", "q"],
    "additionalProperties": False,
    "definitions": {
        "coef": {
            "oneOf": [
                {"type": "number"},
                {
                    "type": "object",
                    "required": ["builtin"],
                    "additionalProperties": False,
                    "properties": {
                        "builtin": {"enum": sorted(BUILTINS)},
                        "params": {"type": "object"},
                        "breakpoints": {"type": "array", "items": {"type": "number"}},
                    },
                },
                {
                    "type": "object",
                    "required": ["expr"],
                    "additionalProperties": False,
                    "properties": {
                        "expr": {"type": "string"},
                        "params": {"type": "object", "additionalProperties": {"type": "number"}},
                        "breakpoints": {"type": "array", "items": {"type": "number"}},
                    },
                },
            ]
        }
    },
    "properties": {
        "name": {"type": "string"},
        "r": {"$ref": "#/definitions/coef"},
        "p": {"$ref": "#/definitions/coef"},
        "q": {"$ref": "#/definitions/coef"},
        "c": {"type": "number"},
        "symmetric": {"type": "boolean"},
        "ess_model": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": ["constant_tail", "periodic_bands", "declared_gaps"]},
                "q_inf": {"type": "number"},
                "period": {"type": "number"},
                "gaps": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                },
            },
        },
        "truncation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "X0": {"type": "number", "exclusiveMinimum": 0},
                "growth": {"type": "number", "exclusiveMinimum": 1},
                "max_X": {"type": "number", "exclusiveMinimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}


def _ess_from_json(spec, q: Coefficient) -> EssentialSpectrumModel:
    if spec is None:
        # constant coefficient q: the tail value is the constant itself
        if q.program.is_constant:
            return ConstantTail(float(q.program.args[0]))
        raise ParseError("ess_model is required unless q is constant")
    kind = spec["type"]
    try:
        if kind == "constant_tail":
            return ConstantTail(float(spec["q_inf"]))
        if kind == "periodic_bands":
            return PeriodicBands(float(spec["period"]))
        return DeclaredGaps(tuple(tuple(g) for g in spec["gaps"]))
    except KeyError as exc:
        raise ParseError(f"ess_model {kind!r} is missing field {exc}") from None


def _one_sided(points, lo, hi):
    """Sample points plus both one-sided neighbours of each breakpoint."""
    pts = [np.asarray(points, dtype=float)]
    for b in lo:
        pts.append(np.array([np.nextafter(b, -np.inf), np.nextafter(b, np.inf)]))
    out = np.concatenate(pts)
    return out[np.isin(out, hi, invert=True)]


def validation_grid(problem: IndefiniteProblem, n: int = DEFAULT_GRID) -> np.ndarray:
    X0 = problem.truncation.X0
    x = problem.c + np.linspace(-X0, X0, n)
    # breakpoints are sampled one-sidedly, never at the jump itself
    return np.sort(_one_sided(x, problem.breakpoints, np.array(problem.breakpoints)))


def build_problem(spec: dict | str, grid: int = DEFAULT_GRID) -> IndefiniteProblem:
    """Parse and validate a problem description (dict or JSON string)."""
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from None
    try:
        jsonschema.validate(spec, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ParseError(f"schema violation: {exc.message}") from None

    coeffs = CoefficientField(
        p=Coefficient.from_json(spec["p"]),
        q=Coefficient.from_json(spec["q"]),
        r=Coefficient.from_json(spec["r"]),
    )
    problem = IndefiniteProblem(
        coeffs=coeffs,
        c=float(spec.get("c", 0.0)),
        symmetric=bool(spec.get("symmetric", False)),
        ess_model=_ess_from_json(spec.get("ess_model"), coeffs.q),
        truncation=TruncationPolicy(**spec.get("truncation", {})),
        name=spec.get("name", ""),
        source=json.loads(json.dumps(spec)),
    )

    x = validation_grid(problem, grid)
    with np.errstate(all="ignore"):
        pv = problem.p(x)
        rv = problem.r(x)
    if not np.all(np.isfinite(pv)) or np.any(pv <= 0):
        bad = x[~(pv > 0)][0]
        raise NonpositiveP(f"p({bad:.6g}) = {problem.p(np.array(bad)):.6g} is not positive")
    right, left = x > problem.c, x < problem.c
    if np.any(~(rv[right] > 0)):
        bad = x[right][~(rv[right] > 0)][0]
        raise SignPatternViolation(f"r({bad:.6g}) <= 0 on the right of c = {problem.c}")
    if np.any(~(rv[left] < 0)):
        bad = x[left][~(rv[left] < 0)][0]
        raise SignPatternViolation(f"r({bad:.6g}) >= 0 on the left of c = {problem.c}")

    checks = {"condition_I": True}
    if problem.symmetric:
        rep = check_symmetry(problem, grid)
        if not rep.symmetric:
            raise SymmetryDeclaredButViolated(
                f"declared symmetric but c={problem.c}, defects p={rep.p_defect:.3g} "
                f"q={rep.q_defect:.3g} r={rep.r_defect:.3g}"
            )
        checks["condition_III"] = True
    else:
        checks["condition_III"] = check_symmetry(problem, grid).symmetric
    problem.checks.update(checks)
    return problem


def load_problem(path) -> IndefiniteProblem:
    with open(path) as fh:
        text = fh.read()
    return build_problem(text)


@dataclass(frozen=True)
class SymmetryReport:
    p_defect: float
    q_defect: float
    r_defect: float
    c_is_zero: bool
    symmetric: bool

    def to_json(self):
        return dict(self.__dict__)


def check_symmetry(problem: IndefiniteProblem, grid: int = DEFAULT_GRID) -> SymmetryReport:
    """Sampled defects of p, q even and r odd about 0."""
    X0 = problem.truncation.X0
    xs = np.linspace(0.0, X0, grid // 2 + 1)[1:]
    bps = [abs(b) for b in problem.breakpoints if b != 0.0]
    xs = _one_sided(xs, bps, np.array([0.0]))
    xs = xs[xs > 0]
    with np.errstate(all="ignore"):
        dp = float(np.max(np.abs(problem.p(xs) - problem.p(-xs))))
        dq = float(np.max(np.abs(problem.q(xs) - problem.q(-xs))))
        dr = float(np.max(np.abs(problem.r(xs) + problem.r(-xs))))
    c0 = problem.c == 0.0
    ok = c0 and max(dp, dq, dr) <= SYMMETRY_TOL
    return SymmetryReport(dp, dq, dr, c0, ok)


def min_essential(problem: IndefiniteProblem) -> float:
    """Bottom of the essential spectrum of A as declared by the model."""
    ess = problem.ess_model
    if isinstance(ess, ConstantTail):
        return ess.q_inf
    if isinstance(ess, DeclaredGaps):
        lowest = ess.gaps[0]
        return lowest[1] if lowest[0] == 0.0 else 0.0
    from .periodic import band_edges

    return band_edges(problem).lambda1
