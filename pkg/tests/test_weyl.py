import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indefsl.counting import BPLUS, locate_eigenvalues
from indefsl.errors import EssentialSpectrumProximity
from indefsl.weyl import (
    ProjectiveBoundaryValue,
    angle_gap,
    boundary_value,
    ess_distance,
    half_line_shot,
    m_minus,
    m_plus,
)

from conftest import problem


@pytest.mark.parametrize("lam", [-4.0, -1.0, 0.0, 0.5, 0.9])
def test_m_plus_closed_form(lam):
    assert m_plus(problem("const_q1"), lam).as_scalar == pytest.approx(-math.sqrt(1 - lam), abs=1e-8)


def test_m_minus_closed_form():
    assert m_minus(problem("const_q1"), 0.0).as_scalar == pytest.approx(1.0, abs=1e-10)


def test_large_negative_lambda():
    p = problem("const_q1")
    assert m_plus(p, -1e4).as_scalar == pytest.approx(-math.sqrt(1 + 1e4), rel=1e-9)
    assert m_minus(p, -1e4).as_scalar == pytest.approx(math.sqrt(1 + 1e4), rel=1e-9)


def test_increasing_in_lambda():
    p = problem("const_q1")
    vals = [m_plus(p, 1 - t * t).as_scalar for t in np.linspace(3, 0.1, 12)]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] == pytest.approx(-0.1, abs=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.floats(-20.0, 8.9))
def test_symmetric_mirror(lam):
    p = problem("sech2_k2")
    a, b = m_plus(p, lam), m_minus(p, lam)
    # m_minus = -m_plus, i.e. theta_minus = pi - theta_plus (mod pi)
    assert angle_gap(b.theta, math.pi - a.theta) <= 1e-8


def test_pole_at_half_line_eigenvalue():
    # kappa = 1 has no B+ eigenvalue below 4 (its odd state sits at the threshold)
    assert locate_eigenvalues(problem("sech2_k1"), BPLUS, 0.0, 4.0).count == 0
    p = problem("sech2_k2")
    ev = locate_eigenvalues(p, BPLUS, 0.0, 9.0).eigenvalues
    assert len(ev) == 1 and ev[0].center == pytest.approx(8.0, abs=1e-9)
    th = half_line_shot(p, "plus", ev[0].center, 60.0).phi
    assert angle_gap(th, math.pi / 2) <= 1e-8


def test_monotone_rotation_with_wraparound():
    # the projective angle of m_plus turns in one direction through the pole
    p = problem("sech2_k2")
    lams = np.linspace(3.0, 8.9, 300)
    th = np.array([half_line_shot(p, "plus", x, 60.0).phi for x in lams])
    steps = (np.diff(th) + math.pi / 2) % math.pi - math.pi / 2
    assert np.all(steps > 0)


def test_refuses_essential_spectrum():
    p = problem("const_q1")
    with pytest.raises(EssentialSpectrumProximity):
        m_plus(p, 1.0 - 1e-7)
    with pytest.raises(EssentialSpectrumProximity):
        m_plus(p, 2.0)
    assert ess_distance(p, 0.0) == 1.0 and ess_distance(p, 2.0) < 0


def test_truncation_convergence_at_x40():
    p = problem("const_q1")
    th = half_line_shot(p, "plus", 0.5, 40.0).phi
    assert abs(math.tan(th) + math.sqrt(0.5)) <= 1e-8


def test_projective_value():
    pole = ProjectiveBoundaryValue(math.pi / 2)
    assert pole.as_scalar == math.inf and pole.arctan == math.pi / 2
    v = ProjectiveBoundaryValue.from_uv(-1.0, 1.0)
    assert v.as_scalar == pytest.approx(-1.0) and 0 <= v.theta < math.pi


def test_error_estimate_reported():
    v = boundary_value(problem("sech2_k2"), "plus", 2.0)
    assert 0 <= v.error_estimate <= 1e-10 and v.X >= 60
