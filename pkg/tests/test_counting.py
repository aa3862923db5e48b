import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indefsl.coefficients import build_problem
from indefsl.counting import (
    BMINUS,
    BPLUS,
    NEG_BMINUS,
    Enclosure,
    count_below,
    count_below_fixed,
    count_in_interval,
    effective_interval,
    locate_eigenvalues,
)
from indefsl.errors import EssentialSpectrumProximity
from indefsl.oracle import oracle_counts, oracle_eigenvalues
from indefsl.periodic import band_edges

from conftest import problem


def test_const_no_spectrum_below_one():
    p = problem("const_q1")
    assert count_below(p, BPLUS, 0.5).count == 0
    assert count_in_interval(p, BPLUS, 0.0, 1.0).count == 0
    assert locate_eigenvalues(p, BPLUS, 0.0, 1.0).eigenvalues == []


def test_count_below_matches_oracle():
    p = problem("sech2_k2")
    assert count_below(p, BPLUS, 8.99).count == oracle_counts(p, "B+", (0.0, 8.99)).count == 1


def test_minus_reflection_symmetric():
    p = problem("sech2_k2")
    neg = count_in_interval(p, NEG_BMINUS, -9.0, -3.0)
    assert neg.count == count_in_interval(p, BPLUS, 3.0, 9.0).count == 1
    ev = locate_eigenvalues(p, NEG_BMINUS, -9.0, -3.0).eigenvalues
    assert ev[0].center == pytest.approx(-8.0, abs=1e-9)


def test_kappa3_count_matches_oracle():
    p = problem("sech2_k3")
    assert count_in_interval(p, BPLUS, 4.0, 16.0).count == oracle_counts(p, "B+", (4.0, 16.0)).count


def test_lowest_b_plus_matches_oracle():
    p = problem("sech2_k2")
    ev = locate_eigenvalues(p, BPLUS, 0.0, 9.0).eigenvalues
    # frozen Richardson-extrapolated oracle value (n = 16000, X = 30)
    assert ev[0].center == pytest.approx(8.000000000004457, abs=1e-6)
    assert ev[0].radius <= 1e-10


def test_kneser_count_keeps_growing():
    rep = count_below(problem("kneser_super"), BPLUS, 5.0 - 1e-4)
    assert not rep.converged and rep.count is None and rep.lower_bound >= 20


def test_count_below_rejects_neg_operator_and_ess():
    p = problem("const_q1")
    with pytest.raises(ValueError):
        count_below(p, NEG_BMINUS, 0.5)
    with pytest.raises(EssentialSpectrumProximity):
        count_below(p, BPLUS, 1.5)


def test_effective_interval_pulls_in_at_threshold():
    lo, hi = effective_interval(problem("sech2_k2"), 3.0, 9.0)
    assert lo == pytest.approx(3.0, abs=1e-8) and hi == pytest.approx(9.0 - 1e-6)
    with pytest.raises(EssentialSpectrumProximity):
        effective_interval(problem("sech2_k2"), 3.0, 10.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 8.9), st.floats(0.0, 8.9))
def test_staircase_monotone(a, b):
    p = problem("sech2_k3")
    lo, hi = sorted((a, b))
    assert count_below_fixed(p, "plus", lo, 60.0) <= count_below_fixed(p, "plus", hi, 60.0)


def test_pole_consistency_with_weyl():
    from indefsl.weyl import angle_gap, half_line_shot

    p = problem("sech2_k4")
    rep = locate_eigenvalues(p, BPLUS, 5.0, 25.0)
    assert rep.count == 2
    for e in rep.eigenvalues:
        assert angle_gap(half_line_shot(p, "plus", e.center, rep.X).phi, math.pi / 2) <= 1e-8


def test_direct_sum_counts():
    from indefsl.matching import eigenvalues_JB

    p = problem("sech2_k3")
    jb = eigenvalues_JB(p, 4.0, 16.0)
    assert jb.count == count_in_interval(p, BPLUS, 4, 16).count + count_in_interval(p, NEG_BMINUS, -16, -4).count


def mathieu_phase():
    return build_problem({"r": {"builtin": "sign"}, "p": 1,
                          "q": {"builtin": "periodic_cos", "params": {"phase": 1.3}},
                          "ess_model": {"type": "periodic_bands", "period": 1},
                          "truncation": {"X0": 8, "max_X": 64, "tol": 1e-10}})


def test_periodic_gap_eigenvalues_match_oracle():
    p = mathieu_phase()
    gaps = band_edges(p).gaps
    found = 0
    for g in gaps[:2]:
        rep = locate_eigenvalues(p, BPLUS, *g)
        # Dirichlet boxes add edge states at the far end, so only check that
        # every located eigenvalue is also an oracle eigenvalue
        ref = oracle_eigenvalues(p, "B+", *g, X=30.0, n=6000)
        for e in rep.eigenvalues:
            assert g[0] < e.center < g[1]
            assert np.min(np.abs(ref - e.center)) <= 1e-6
            found += 1
    assert found == 2


def test_enclosure():
    e = Enclosure(1.0, 3.0)
    assert e.center == 2.0 and e.radius == 1.0 and e.contains(2.5) and not e.contains(3.5)
