"""Exact-size complex 2x2 linear algebra.

Matrices are numpy arrays of shape (2, 2) and dtype complex128 throughout.
Everything here is closed-form: determinants, traces, inverses, Hermitian
and positive-semidefinite predicates, the principal PSD square root, and a
pointwise least-squares solver for the sandwich equation S @ X @ M = M.

Norms are max-absolute-entry unless stated otherwise; all tolerances scale
as tol * (1 + norm) so the checks behave identically across magnitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Singular",
    "NotHermitian",
    "NotPSD",
    "HermFlag",
    "mat2",
    "as_mat2",
    "identity",
    "zeros",
    "ones",
    "norm_max",
    "adjoint",
    "det2",
    "tr2",
    "det_tr_inv",
    "is_hermitian",
    "herm_eigvals",
    "is_psd",
    "sqrt_psd",
    "solve_sandwich",
    "random_hermitian",
]

TOL_HERM = 1e-10
TOL_SING = 1e-12
TOL_RANK = 1e-10


class Singular(ValueError):
    """Determinant too small for a trustworthy inverse."""


class NotHermitian(ValueError):
    """Operation requires a Hermitian input."""


class NotPSD(ValueError):
    """Operation requires a positive semidefinite input."""


@dataclass(frozen=True)
class HermFlag:
    """Outcome of the Hermitian test with its measured asymmetry."""

    is_hermitian: bool
    max_asymmetry: float


def mat2(e11, e12, e21, e22) -> np.ndarray:
    """Build a complex 2x2 matrix from four entries, validating finiteness."""
    m = np.array([[e11, e12], [e21, e22]], dtype=complex)
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError("non-finite entry in 2x2 matrix")
    return m


def as_mat2(obj) -> np.ndarray:
    m = np.asarray(obj, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected shape (2, 2), got {m.shape}")
    return m


def identity() -> np.ndarray:
    return np.eye(2, dtype=complex)


def zeros() -> np.ndarray:
    return np.zeros((2, 2), dtype=complex)


def ones() -> np.ndarray:
    return np.ones((2, 2), dtype=complex)


def norm_max(m) -> float:
    """Max absolute entry."""
    return float(np.max(np.abs(m)))


def adjoint(m) -> np.ndarray:
    return np.conj(np.asarray(m).T)


def det2(m) -> complex:
    return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def tr2(m) -> complex:
    return complex(m[0, 0] + m[1, 1])


def det_tr_inv(m) -> tuple[complex, complex, np.ndarray]:
    """Return (det, tr, inv) by the adjugate formula.

    Raises
    ------
    Singular
        When |det| <= 1e-12 * (1 + max-entry norm), which callers treat as
        a focal-point indicator rather than a numerical accident.
    """
    m = as_mat2(m)
    d = det2(m)
    t = tr2(m)
    if abs(d) <= TOL_SING * (1.0 + norm_max(m)):
        raise Singular(f"matrix is singular to tolerance (|det| = {abs(d):.3e})")
    inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex) / d
    return d, t, inv


def is_hermitian(m, tol: float | None = None) -> HermFlag:
    """Test M == M* up to tol * (1 + max-entry norm)."""
    m = as_mat2(m)
    if tol is None:
        tol = TOL_HERM
    asym = norm_max(m - adjoint(m))
    return HermFlag(asym <= tol * (1.0 + norm_max(m)), asym)


def herm_eigvals(m) -> tuple[float, float]:
    """Eigenvalues (lo, hi) of a Hermitian 2x2 by the quadratic formula.

    The input is symmetrized first, so tiny asymmetries do not leak
    imaginary parts into the result.
    """
    h = 0.5 * (as_mat2(m) + adjoint(m))
    t = float(np.real(tr2(h)))
    d = float(np.real(det2(h)))
    disc = max(t * t - 4.0 * d, 0.0)
    r = math.sqrt(disc)
    return (0.5 * (t - r), 0.5 * (t + r))


def is_psd(m, tol: float | None = None) -> bool:
    """True when both eigenvalues are >= -tol * (1 + max-entry norm).

    Raises NotHermitian when the input fails the Hermitian test, since
    positivity only makes sense for Hermitian matrices.
    """
    m = as_mat2(m)
    flag = is_hermitian(m)
    if not flag.is_hermitian:
        raise NotHermitian(f"max asymmetry {flag.max_asymmetry:.3e}")
    if tol is None:
        tol = TOL_HERM
    lo, _ = herm_eigvals(m)
    return lo >= -tol * (1.0 + norm_max(m))


def sqrt_psd(m) -> np.ndarray:
    """Principal square root of a Hermitian PSD 2x2 matrix, closed form.

    For nondegenerate M the root is (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det)).
    When the denominator degenerates (M close to 0 or rank deficient with
    vanishing trace shift) the rank-1 fallback M / sqrt(tr M) applies, and
    sqrt(0) = 0.

    Raises
    ------
    NotPSD
        When an eigenvalue is below -1e-10 * (1 + norm).
    NotHermitian
        When the input is not Hermitian to tolerance.
    """
    m = as_mat2(m)
    if not is_psd(m):
        lo, hi = herm_eigvals(m)
        raise NotPSD(f"eigenvalues ({lo:.3e}, {hi:.3e})")
    h = 0.5 * (m + adjoint(m))
    t = float(np.real(tr2(h)))
    d = max(float(np.real(det2(h))), 0.0)
    scale = 1.0 + norm_max(h)
    lo, hi = herm_eigvals(h)
    if hi <= TOL_SING * scale:
        return np.zeros((2, 2), dtype=complex)
    if lo <= TOL_HERM * scale:
        # Small eigenvalue below the positivity resolution. Treat it as an
        # exact zero and use the rank-1 root M / sqrt(tr M): the closed form
        # below would lift the noise eigenvalue from ~eps to ~sqrt(eps),
        # which is large enough to poison least-squares solves against S.
        return h / math.sqrt(t)
    root_d = math.sqrt(d)
    s = (h + root_d * np.eye(2)) / math.sqrt(t + 2.0 * root_d)
    return 0.5 * (s + adjoint(s))


def solve_sandwich(s, m, rank_tol: float = TOL_RANK) -> tuple[np.ndarray, float]:
    """Minimum-norm least-squares F with S @ F @ M = M.

    Vectorizes to the 4x4 Kronecker system (M^T kron S) vec(F) = vec(M)
    and solves by SVD-backed least squares with singular values below
    rank_tol * s_max treated as zero. Returns (F, residual) where the
    residual is the max-entry norm of S @ F @ M - M.

    When both S and M are invertible the unique solution is S^{-1}. When M
    is rank deficient the equation constrains F only on the range of M, and
    the minimum-norm completion is returned (generally not S^{-1}).
    """
    s = as_mat2(s)
    m = as_mat2(m)
    k = np.kron(m.T, s)
    rhs = m.reshape(-1, order="F")
    sol, _, _, _ = np.linalg.lstsq(k, rhs, rcond=rank_tol)
    f = sol.reshape((2, 2), order="F")
    residual = norm_max(s @ f @ m - m)
    return f, residual


def random_hermitian(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random Hermitian 2x2 with entries on the order of scale."""
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    return scale * 0.5 * (g + adjoint(g))
