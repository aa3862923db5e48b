import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indefsl.coefficients import build_problem
from indefsl.counting import BPLUS, locate_eigenvalues
from indefsl.matching import (
    _combine,
    count_JA_pair,
    eigenvalues_A,
    eigenvalues_JA,
    eval_matching,
    gap_of_JA,
    scan,
)
from indefsl.oracle import oracle_eigenvalues
from indefsl.weyl import m_plus

from conftest import problem

WELL = {"r": {"builtin": "sign"}, "p": 1, "q": {"expr": "3 - 2*exp(-x^2)"}, "c": 0, "symmetric": True,
        "ess_model": {"type": "constant_tail", "q_inf": 3}}


def test_const_values():
    p = problem("const_q1")
    assert eval_matching(p, "M", 0.0).value == pytest.approx(-2.0, abs=1e-9)
    assert eval_matching(p, "D", 0.0).value == pytest.approx(-2.0, abs=1e-9)
    assert eval_matching(p, "D", 0.75).value == pytest.approx(-2 * math.sqrt(0.25), abs=1e-9)
    assert scan(p, "D", 0.0, 1.0).zeros == []


@settings(max_examples=8, deadline=None)
@given(st.floats(-8.9, 8.9))
def test_symmetric_M_formula(lam):
    p = problem("sech2_k2")
    M = eval_matching(p, "M", lam)
    ref, _ = _combine(m_plus(p, lam).theta, math.pi - m_plus(p, -lam).theta)
    assert math.atan(M.value) == pytest.approx(math.atan(ref), abs=1e-8)


def test_combine_handles_poles():
    v, at = _combine(math.pi / 2, 0.3)
    assert v > 1e15 and at == pytest.approx(math.pi / 2)
    v, at = _combine(0.3, math.pi / 2)
    assert v < -1e15 and abs(at) == pytest.approx(math.pi / 2)
    v, at = _combine(0.2, 0.2)
    assert v == 0.0 and at == 0.0


def test_scan_sech2_k2():
    s = scan(problem("sech2_k2"), "M", 3.0, 9.0, grid=200)
    assert len(s.poles) == 1 and len(s.zeros) == 1
    assert s.poles[0].center == pytest.approx(8.0, abs=1e-9)
    assert s.monotone and s.alternating


def test_scan_negative_axis_decreasing():
    s = scan(problem("sech2_k2"), "M", -9.0, -3.0, grid=200)
    assert [e for e, _ in s.events()] == sorted(e for e, _ in s.events())
    assert s.monotone and len(s.zeros) == 1


def test_scan_const_empty():
    p = problem("const_q1")
    for a, b in ((-1.0, 0.0), (0.0, 1.0)):
        s = scan(p, "M", a, b)
        assert s.zeros == [] and s.poles == []


def test_scan_kappa3_zero_count():
    s = scan(problem("sech2_k3"), "M", 4.0, 16.0)
    assert len(s.zeros) in (1, 2)


def test_ja_sech2_k2():
    rep = eigenvalues_JA(problem("sech2_k2"), 3.0, 9.0)
    assert rep.details["n_positive"] == rep.details["n_negative"] == 1
    assert rep.details["pairing_defect"] <= 1e-9
    # frozen oracle value (n = 16000, X = 30, Richardson)
    assert rep.eigenvalues[1].center == pytest.approx(7.099761500899534, abs=1e-6)


def test_ja_const_empty():
    assert count_JA_pair(problem("const_q1"), 0.0, 1.0) == (0, 0)


def test_ja_well_matches_oracle():
    p = build_problem(WELL)
    rep = eigenvalues_JA(p, 0.0, 3.0)
    pos = [e.center for e in rep.eigenvalues if e.center > 0]
    assert pos == pytest.approx([2.8991348464047717], abs=1e-6)
    ref = oracle_eigenvalues(p, "JA", 0.0, 3.0)
    assert np.allclose(pos, ref, atol=1e-6)


def test_A_sech2_k2():
    rep = eigenvalues_A(problem("sech2_k2"), 3.0, 9.0)
    assert rep.count == 2
    for e, ref in zip(rep.eigenvalues, (5.0, 8.0)):
        assert abs(e.center - ref) <= 1e-9 and e.radius <= 1e-10
    # the odd state is a common pole, the even one a zero of D
    assert rep.details["classification"] == ["zero", "common_pole"]


def test_A_well_matches_oracle():
    p = build_problem(WELL)
    rep = eigenvalues_A(p, 0.0, 3.0)
    assert [e.center for e in rep.eigenvalues] == pytest.approx([2.045220045252827], abs=1e-6)


def test_gap_sech2():
    g = gap_of_JA(problem("sech2_k2"))
    assert g.lambda1 == pytest.approx(5.0, abs=1e-9) and g.holds
    assert g.nearest_positive > 5.0 and g.nearest_negative < -5.0
    g1 = gap_of_JA(problem("sech2_k1"))
    assert g1.case == "zero" and g1.upper_holds and g1.nearest_positive < g1.min_B_plus


def test_gap_const():
    g = gap_of_JA(problem("const_q1"))
    assert g.case == "none" and g.holds and g.nearest_positive == math.inf


def test_interlacing_with_half_line():
    # between consecutive B+ eigenvalues lies exactly one JA eigenvalue, and conversely
    p = problem("sech2_k5")
    poles = [e.center for e in locate_eigenvalues(p, BPLUS, 0.0, 36.0).eigenvalues]
    zeros = sorted(e.center for e in eigenvalues_JA(p, 0.0, 36.0).eigenvalues if e.center > 0)
    for a, b in zip(poles, poles[1:]):
        assert sum(a < z < b for z in zeros) == 1
    for a, b in zip(zeros, zeros[1:]):
        assert sum(a < x < b for x in poles) == 1


def test_zero_set_symmetric():
    rep = eigenvalues_JA(problem("sech2_k4"), 0.0, 25.0)
    assert rep.details["pairing_defect"] <= 1e-9


def test_slope_at_zero_is_indefinite_norm():
    # M'(0) = int_+ |r| h0^2 - int_- |r| k0^2 with h0(c) = k0(c) = 1; the
    # reference value comes from an independent scipy integration at X = 40
    from indefsl.theorems import suite_problem

    p = build_problem(suite_problem(5))
    h = 1e-4
    slope = (eval_matching(p, "M", h).value - eval_matching(p, "M", -h).value) / (2 * h)
    assert slope == pytest.approx(-0.008001818038128272, abs=1e-8)
    # so M decreases just right of 0 for this asymmetric weight
    assert eval_matching(p, "M", 0.05).value < eval_matching(p, "M", 1e-3).value
