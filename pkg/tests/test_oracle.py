import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indefsl.coefficients import build_problem
from indefsl.errors import NonPositiveDefiniteT
from indefsl.oracle import (
    count_in,
    discretize,
    discretize_periodic,
    eigenvalues_in,
    oracle_counts,
    oracle_eigenvalues,
    pairing_defect,
    pencil_eigenvalues,
)

from conftest import problem


def test_stencil_small():
    p = problem("const_q1")
    pen = discretize(p, 2.0, 16)
    T = pen.T
    assert np.allclose(T, T.T)
    # interior rows sum to q * w for constant p and uniform spacing
    h = pen.x[1] - pen.x[0]
    assert np.allclose(T[2:7].sum(axis=1), h, atol=1e-12)
    assert int(np.sum(pen.r > 0)) == 8 and int(np.sum(pen.r < 0)) == 8


@settings(max_examples=10, deadline=None)
@given(st.integers(16, 60))
def test_sign_count(n):
    pen = discretize(problem("sech2_k2"), 10.0, n)
    assert int(np.sum(pen.r > 0)) == n // 2
    assert int(np.sum(pen.r < 0)) == (n + 1) // 2
    assert not np.any(np.isclose(pen.x, 0.0))


def test_absolute_weight_is_plain_problem():
    pen = discretize(problem("sech2_k2"), 20.0, 400).absolute()
    ev = pencil_eigenvalues(pen)
    ev_std = np.sort(np.linalg.eigvalsh(pen.T / np.sqrt(np.outer(pen.r, pen.r))))
    assert np.allclose(ev, ev_std, rtol=1e-9)


def test_dense_vs_inertia():
    pen = discretize(problem("sech2_k3"), 15.0, 300)
    dense = pencil_eigenvalues(pen)
    for a, b in ((0.0, 16.0), (-16.0, 0.0), (3.0, 40.0)):
        ref = dense[(dense > a) & (dense < b)]
        got = eigenvalues_in(pen, a, b)
        assert count_in(pen, a, b) == len(ref)
        assert np.allclose(got, ref, atol=1e-10)


def test_periodic_dense_vs_inertia():
    for anti in (False, True):
        pen = discretize_periodic(problem("mathieu"), 64, anti)
        dense = pencil_eigenvalues(pen)
        got = eigenvalues_in(pen, -1e3, 150.0)
        assert np.allclose(got, dense[dense < 150.0], atol=1e-9)


def test_symmetric_pairing():
    ev = oracle_eigenvalues(problem("sech2_k4"), "JA", -25.0, 25.0, X=20.0, n=2000)
    assert pairing_defect(ev) <= 1e-8
    assert pairing_defect(np.array([1.0, -1.0, 2.0])) == math.inf


def test_frozen_values():
    p = problem("sech2_k2")
    ev = oracle_eigenvalues(p, "JA", 3.0, 9.0, n=16000)
    assert ev == pytest.approx([7.099761500899534], abs=1e-9)
    bp = oracle_eigenvalues(p, "B+", 4.0, 9.0, n=16000)
    assert bp == pytest.approx([8.0], abs=1e-8)


def test_mirror_operator():
    p = problem("sech2_k2")
    neg = oracle_eigenvalues(p, "-B-", -9.0, -4.0, X=20.0, n=2000)
    pos = oracle_eigenvalues(p, "B-", 4.0, 9.0, X=20.0, n=2000)
    assert np.allclose(neg, -pos[::-1])


def test_counts():
    p = problem("sech2_k3")
    assert oracle_counts(p, "A", (0.0, 15.5), X=20.0, n=2000).count == 3
    assert oracle_counts(p, "B+", (4.0, 16.0), X=20.0, n=2000).count == 1
    assert oracle_counts(problem("const_q1"), "JA", (0.0, 1.0), X=20.0, n=1000).count == 0


def test_not_positive_definite():
    bad = build_problem({"r": {"builtin": "sign"}, "p": 1, "q": -5, "c": 0, "symmetric": True,
                         "ess_model": {"type": "periodic_bands", "period": 1}})
    with pytest.raises(NonPositiveDefiniteT):
        discretize(bad, 10.0, 200)


def test_bad_arguments():
    with pytest.raises(ValueError):
        discretize(problem("const_q1"), 10.0, 8)
    with pytest.raises(ValueError):
        oracle_eigenvalues(problem("const_q1"), "C", 0.0, 1.0)
