"""Unit tests for the closed-form 2x2 helpers."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamosc import mat2
from conftest import hermitian

EPS = float(np.finfo(float).eps)

_entry = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)
_centry = st.builds(complex, _entry, _entry)
_matrix = st.builds(mat2.mat2, _centry, _centry, _centry, _centry)


def test_builders_validate():
    with pytest.raises(ValueError):
        mat2.mat2(1.0, float("inf"), 0.0, 1.0)
    with pytest.raises(ValueError):
        mat2.as_mat2(np.zeros((3, 2)))
    assert mat2.norm_max(mat2.identity() - np.eye(2)) == 0.0
    assert mat2.norm_max(mat2.zeros()) == 0.0
    assert mat2.norm_max(mat2.ones() - 1.0) == 0.0


@given(_matrix, _matrix)
def test_trace_commutativity(m1, m2):
    # tr(AB) = tr(BA); the scale is the worst entrywise product sum
    lhs = mat2.tr2(m1 @ m2)
    rhs = mat2.tr2(m2 @ m1)
    scale = float(np.sum(np.abs(m1) * np.abs(m2.T)))
    assert abs(lhs - rhs) <= 4.0 * EPS * max(1.0, scale)


@given(_matrix)
def test_adjoint_involution_and_det(m):
    assert np.array_equal(mat2.adjoint(mat2.adjoint(m)), m)
    assert abs(mat2.det2(mat2.adjoint(m)) - np.conj(mat2.det2(m))) <= 16.0 * EPS * (
        1.0 + float(np.max(np.abs(m))) ** 2
    )


def test_inverse_roundtrip():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        try:
            d, t, inv = mat2.det_tr_inv(m)
        except mat2.Singular:
            continue
        assert abs(d - np.linalg.det(m)) <= 64.0 * EPS * (1.0 + abs(d))
        assert abs(t - np.trace(m)) == 0.0
        scale = 1.0 + mat2.norm_max(m) * mat2.norm_max(inv)
        assert mat2.norm_max(m @ inv - np.eye(2)) <= 8.0 * EPS * scale
        assert mat2.norm_max(inv @ m - np.eye(2)) <= 8.0 * EPS * scale


def test_det_tr_inv_rejects_singular():
    v = np.array([1.0, 2.0 + 1.0j])
    m = np.outer(v, v.conj())  # rank one
    with pytest.raises(mat2.Singular):
        mat2.det_tr_inv(m)


def test_herm_eigvals_match_lapack():
    rng = np.random.default_rng(12)
    for _ in range(500):
        h = hermitian(rng, rng.uniform(0.1, 5.0))
        lo, hi = mat2.herm_eigvals(h)
        ref = np.linalg.eigvalsh(h)
        assert lo <= hi
        assert abs(lo - ref[0]) <= 1e-12 * (1.0 + mat2.norm_max(h))
        assert abs(hi - ref[1]) <= 1e-12 * (1.0 + mat2.norm_max(h))


def test_is_hermitian_reports_asymmetry():
    h = np.array([[1.0, 2.0 - 1.0j], [2.0 + 1.0j, 3.0]])
    flag = mat2.is_hermitian(h)
    assert flag.is_hermitian and flag.max_asymmetry <= 1e-15
    bumped = h + np.array([[0.0, 1e-6], [0.0, 0.0]])
    flag = mat2.is_hermitian(bumped)
    assert not flag.is_hermitian
    assert abs(flag.max_asymmetry - 1e-6) <= 1e-9


def test_is_psd_requires_hermitian():
    with pytest.raises(mat2.NotHermitian):
        mat2.is_psd(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert mat2.is_psd(np.diag([2.0, 0.0]))
    assert not mat2.is_psd(np.diag([2.0, -1.0]))


def test_sqrt_psd_round_trip():
    rng = np.random.default_rng(13)
    for _ in range(1000):
        h = hermitian(rng, rng.uniform(0.05, 4.0))
        m = h @ h
        r = mat2.sqrt_psd(m)
        assert mat2.is_hermitian(r).is_hermitian
        assert mat2.is_psd(r)
        assert mat2.norm_max(r @ r - m) <= 1e-10 * (1.0 + mat2.norm_max(m))


def test_sqrt_psd_degenerate_shapes():
    assert mat2.norm_max(mat2.sqrt_psd(np.zeros((2, 2)))) == 0.0
    assert mat2.norm_max(mat2.sqrt_psd(np.diag([0.0, 4.0])) - np.diag([0.0, 2.0])) <= 1e-12
    v = np.array([1.0, 1.0j]) / math.sqrt(2.0)
    m = 3.0 * np.outer(v, v.conj())  # rank one, eigenvalues {0, 3}
    r = mat2.sqrt_psd(m)
    assert mat2.norm_max(r @ r - m) <= 1e-10 * (1.0 + mat2.norm_max(m))
    lo, _ = mat2.herm_eigvals(r)
    assert abs(lo) <= 1e-10  # the zero eigenvalue stays put


def test_sqrt_psd_rejections():
    with pytest.raises(mat2.NotPSD):
        mat2.sqrt_psd(np.diag([1.0, -1.0]))
    with pytest.raises(mat2.NotHermitian):
        mat2.sqrt_psd(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_solve_sandwich_invertible_case():
    rng = np.random.default_rng(14)
    for _ in range(200):
        h = hermitian(rng, 1.0)
        s = h @ h + 0.5 * np.eye(2)
        m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        if abs(mat2.det2(m)) < 1e-3:
            continue
        f, res = mat2.solve_sandwich(s, m)
        _, _, s_inv = mat2.det_tr_inv(s)
        assert res <= 1e-12
        assert mat2.norm_max(f - s_inv) <= 1e-10


def test_solve_sandwich_rank_deficient_min_norm():
    """With rank-one M the equation only pins F on range(M); the returned
    completion must still solve it and be no larger than the full inverse."""
    s = np.array([[2.0, 0.5], [0.5, 1.0]], dtype=complex)
    v = np.array([1.0, -1.0]) / math.sqrt(2.0)
    m = np.outer(v, v.conj())
    f, res = mat2.solve_sandwich(s, m)
    assert res <= 1e-12
    _, _, s_inv = mat2.det_tr_inv(s)
    assert np.linalg.norm(f) <= np.linalg.norm(s_inv) + 1e-12
    assert mat2.norm_max(f - s_inv) > 1e-3  # genuinely a different solution


def test_random_hermitian_is_hermitian():
    rng = np.random.default_rng(15)
    for scale in (0.1, 1.0, 10.0):
        h = mat2.random_hermitian(rng, scale)
        assert mat2.is_hermitian(h).is_hermitian
