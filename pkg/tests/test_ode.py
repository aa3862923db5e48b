import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indefsl.coefficients import build_problem
from indefsl.errors import NonfiniteState
from indefsl.ode import SLState, integrate, lagrange_defect, period_map, shoot

from conftest import problem


def const_problem(q, period=1.0):
    # a constant coefficient is periodic with any period
    spec = {"r": {"builtin": "sign"}, "p": 1, "q": q, "c": 0,
            "ess_model": {"type": "periodic_bands", "period": period}}
    return build_problem(spec)


def test_decaying_solution_forward():
    st_, tr = integrate(const_problem(1), "plus", 0.0, (1.0, -1.0), 20.0)
    assert st_.u == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert st_.v == pytest.approx(-1 / math.sqrt(2), abs=1e-12)
    assert tr.rho_log == pytest.approx(-20.0, abs=1e-3)
    assert tr.zero_count == 0


def test_decaying_solution_backward_is_stable():
    st_, tr = integrate(const_problem(1), "plus", 0.0, (1.0, -1.0), 20.0, direction="inward")
    assert (st_.u, st_.v) == pytest.approx((1 / math.sqrt(2), -1 / math.sqrt(2)), abs=1e-12)
    assert tr.rho_log == pytest.approx(20.0, abs=1e-7)


def test_zero_length_interval():
    p = problem("sech2_k2")
    st_, tr = integrate(p, "plus", 3.0, (1.0, 0.0), 1e-14)
    assert (st_.u, st_.v) == pytest.approx((1.0, 0.0), abs=1e-12)
    assert tr.zero_count == 0


def test_oscillatory_zero_count():
    # q - lam = -1: u = cos x has zeros at pi/2, 3pi/2, 5pi/2 in (0, 3 pi)
    _, tr = integrate(const_problem(0), "plus", 1.0, (1.0, 0.0), 3 * math.pi)
    assert tr.zero_count == 3


def test_equation_sign_flips_lambda():
    p = const_problem(0)
    _, a = integrate(p, "minus", 1.0, (1.0, 0.0), 3 * math.pi)
    _, b = integrate(p, "minus", -1.0, (1.0, 0.0), 3 * math.pi, equation_sign=-1)
    assert a.zero_count == b.zero_count == 3
    assert a.theta_end == b.theta_end
    with pytest.raises(ValueError):
        integrate(p, "plus", 1.0, (1.0, 0.0), 1.0, equation_sign=2)


def test_zero_initial_state():
    with pytest.raises(NonfiniteState):
        integrate(const_problem(1), "plus", 0.0, (0.0, 0.0), 1.0)


def test_trace_samples_and_csv(tmp_path):
    _, tr = integrate(problem("sech2_k2"), "plus", 5.0, (0.0, 1.0), 5.0, trace=True)
    assert len(tr.x) > 10 and tr.x[0] == 0.0 and tr.x[-1] == pytest.approx(5.0)
    assert np.all(np.diff(tr.theta) > -math.pi / 2)
    out = tmp_path / "t.csv"
    tr.to_csv(out)
    assert out.read_text().splitlines()[0] == "x,u,v,theta,log_scale"


def test_zero_count_along_path_nondecreasing():
    p = problem("sech2_k3")
    counts = [integrate(p, "plus", 12.0, (0.0, 1.0), X)[1].zero_count for X in np.linspace(0.1, 6, 30)]
    assert counts == sorted(counts)


@settings(max_examples=15, deadline=None)
@given(st.floats(-5.0, 15.0), st.floats(0.0, 10.0))
def test_zero_count_monotone_in_lambda(lam, dl):
    p = problem("sech2_k2")
    n1 = integrate(p, "plus", lam, (0.0, 1.0), 8.0)[1].zero_count
    n2 = integrate(p, "plus", lam + dl, (0.0, 1.0), 8.0)[1].zero_count
    assert n2 >= n1


def test_wronskian_constant():
    p = problem("sech2_k2")
    # oscillatory regime: no cancellation in the determinant
    for lam, X in ((6.3, 1.0), (6.3, 2.0), (12.0, 4.0), (12.0, 9.0)):
        s = shoot(p, [lam, lam], 0.0, X, np.eye(2))
        Y = s.Y * np.exp(s.logscale)[None, :]
        assert np.linalg.det(Y) == pytest.approx(1.0, rel=1e-9)


def test_rtol_halving_moves_angle_little():
    p = problem("sech2_k2")
    a = integrate(p, "plus", 7.0, (0.0, 1.0), 10.0, rtol=1e-10)[0]
    b = integrate(p, "plus", 7.0, (0.0, 1.0), 10.0, rtol=5e-11)[0]
    d = abs(math.atan2(a.v, a.u) - math.atan2(b.v, b.u)) % math.pi
    assert min(d, math.pi - d) <= 10 * 1e-10


def test_period_map_constant_closed_form():
    k, gamma = 1.7, 0.8
    pm = period_map(const_problem(k * k, gamma), 0.0)
    c, s = math.cosh(k * gamma), math.sinh(k * gamma)
    assert np.allclose(pm.matrix, [[c, s / k], [k * s, c]], rtol=1e-9)


def test_period_map_free_equation():
    pm = period_map(const_problem(2.0, 1.5), 2.0)
    assert np.allclose(pm.matrix, [[1.0, 1.5], [0.0, 1.0]], atol=1e-10)


def test_period_map_mathieu_det():
    p = problem("mathieu")
    pm = period_map(p, 9.0)
    assert pm.det == pytest.approx(1.0, abs=1e-10)
    ref = period_map(p, 9.0, rtol=1e-13, atol=1e-15)
    assert np.allclose(pm.matrix, ref.matrix, rtol=1e-8)


def test_floquet_decaying_vector():
    p = problem("mathieu")
    small, vs, big, vb = period_map(p, 5.0).floquet()
    assert abs(small) < 1 < abs(big) and small * big == pytest.approx(1.0)
    M = period_map(p, 5.0).matrix
    assert np.allclose(M @ vs, small * vs, atol=1e-9)


@pytest.mark.parametrize("side", ["plus", "minus"])
def test_lagrange_defect_small(side):
    rep = lagrange_defect(problem("sech2_k2"), 4.0, 6.5, (1.0, 0.3), (0.2, 1.0), 3.0, side)
    assert rep.relative_defect <= 1e-8


def test_slstate_angle():
    s = SLState(0.0, 3.0, 4.0)
    assert s.normalized().u == pytest.approx(0.6)
    assert s.angle == pytest.approx(math.atan2(3.0, 4.0))
