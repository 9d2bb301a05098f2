"""Deterministic dense factorizations used by the sketching algorithms.

Thin wrappers over LAPACK (via numpy/scipy) that pin down the exact
conventions the algorithms rely on: economy shapes, nonincreasing
singular values, upper-triangular Cholesky with M = C*C, and the
truncated pseudoinverse with a relative singular-value cutoff.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .containers import EPS, SvdFactorization

__all__ = [
    "PositiveDefinitenessError",
    "qr_econ",
    "svd_econ",
    "orth",
    "cholesky_upper",
    "triangular_solve_right",
    "truncated_pinv_apply",
    "DEFAULT_RANK_TOL",
]

# numerical-rank cutoff factor used throughout: sigma > 5 eps sigma_1
DEFAULT_RANK_TOL = 5.0 * EPS


class PositiveDefinitenessError(np.linalg.LinAlgError):
    """Raised when a Cholesky factorization meets a non-positive pivot."""


def _check_finite(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has nonfinite entries")
    return m


def qr_econ(m):
    """Economy Householder QR of a tall matrix.

    Returns (Q, R) with Q n-by-k orthonormal and R k-by-k upper
    triangular; requires n >= k.
    """
    m = _check_finite(m)
    n, k = m.shape
    if n < k:
        raise ValueError(f"qr_econ requires n >= k, got shape {m.shape}")
    q, r = np.linalg.qr(m, mode="reduced")
    return q, r


def svd_econ(m) -> SvdFactorization:
    """Economy SVD with min(n, k) triplets, M = U diag(sigma) V*."""
    m = _check_finite(m)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return SvdFactorization(u=u, sigma=s, v=vh.conj().T)


def orth(m, rel_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis for the numerical range of m, dropping dependent columns.

    Uses Householder QR; falls back to an SVD basis when the R factor
    reveals rank deficiency, so the returned basis always spans the
    numerical range.
    """
    m = _check_finite(m)
    if m.shape[1] == 0:
        return m.copy()
    q, r = np.linalg.qr(m, mode="reduced")
    diag = np.abs(np.diag(r))
    top = diag.max(initial=0.0)
    if top == 0.0:
        return q[:, :0]
    if diag.min() > rel_tol * top:
        return q
    fac = svd_econ(m)
    rank = int(np.count_nonzero(fac.sigma > rel_tol * fac.sigma[0]))
    return fac.u[:, :rank]


def cholesky_upper(m) -> np.ndarray:
    """Upper-triangular Cholesky factor C with M = C*C.

    Requires a numerically positive definite self-adjoint input; raises
    PositiveDefinitenessError on a non-positive pivot so the caller can
    apply a shift or a pivoted fallback.
    """
    m = _check_finite(m)
    k = m.shape[0]
    if m.shape[1] != k:
        raise ValueError("cholesky_upper requires a square matrix")
    scale = np.linalg.norm(m, "fro")
    if scale > 0 and np.linalg.norm(m - m.conj().T, "fro") > 1e-10 * scale:
        raise ValueError("input is not self-adjoint to tolerance 1e-10")
    try:
        lower = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise PositiveDefinitenessError(str(exc)) from exc
    return lower.conj().T


def triangular_solve_right(b, c) -> np.ndarray:
    """Solve X C = B for X with C upper triangular (X = B C^{-1})."""
    x_h = scipy.linalg.solve_triangular(c, b.conj().T, lower=False, trans="C")
    return x_h.conj().T


def truncated_pinv_apply(m, b, rel_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Apply the truncated pseudoinverse of m to b.

    Computes V_r diag(sigma_r)^{-1} U_r* b where r counts singular
    values exceeding rel_tol * sigma_1.  Rank 0 yields a zero matrix.
    """
    m = _check_finite(m, "m")
    b = _check_finite(np.asarray(b), "b")
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if b.shape[0] != m.shape[0]:
        raise ValueError(f"shape mismatch: m {m.shape}, b {b.shape}")
    fac = svd_econ(m)
    if fac.sigma.size == 0 or fac.sigma[0] == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(fac.sigma > rel_tol * fac.sigma[0]))
    dtype = np.result_type(m.dtype, b.dtype)
    if rank == 0:
        out = np.zeros((m.shape[1], b.shape[1]), dtype=dtype)
    else:
        core = (fac.u[:, :rank].conj().T @ b) / fac.sigma[:rank, None]
        out = fac.v[:, :rank] @ core
    return out[:, 0] if squeeze else out
