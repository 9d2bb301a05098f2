"""Randomized low-rank approximation and regression with structured sketches.

Implements the five sketching algorithms (randomized SVD, psd Nystrom,
generalized Nystrom in outer-product and SVD form, sketch-and-solve)
plus approximate matrix recovery from bilinear queries and the
orthogonality statistic used by the OSI diagnostics.

Inputs may be dense arrays, scipy sparse matrices, or matvec oracles
(objects with ``shape``, ``matmat`` and ``adjoint_matmat``); test
matrices are drawn from :mod:`sketchkit.sketch`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core.containers import EPS, EigFactorization, OuterProduct, SvdFactorization
from .core.factor import (
    DEFAULT_RANK_TOL,
    PositiveDefinitenessError,
    cholesky_upper,
    qr_econ,
    orth,
    svd_econ,
    triangular_solve_right,
    truncated_pinv_apply,
)
from .core.rng import RngStream
from .sketch.base import TestMatrix

__all__ = [
    "rsvd",
    "nystrom_psd",
    "gen_nystrom_outer",
    "gen_nystrom_svd",
    "sketch_and_solve",
    "matrix_recovery",
    "osi_orthogonality_statistic",
    "OrthogonalityStat",
    "default_left_dim",
]


def default_left_dim(k: int) -> int:
    """Recommended left-sketch dimension p = ceil(1.5 k)."""
    return int(np.ceil(1.5 * k))


def _is_oracle(a) -> bool:
    return hasattr(a, "matmat") and hasattr(a, "adjoint_matmat") and not sp.issparse(a)


def _shape(a):
    return tuple(a.shape)


def _adjoint_operand(a):
    """Conjugate transpose of a dense / sparse / oracle operand."""
    if _is_oracle(a):
        return a.adjoint()
    if sp.issparse(a):
        return sp.csr_array(a.conj().T)
    return np.asarray(a).conj().T


def _sketch_right(a, tm: TestMatrix) -> np.ndarray:
    """Y = A Omega through the fast apply path (or oracle matvecs)."""
    if _is_oracle(a):
        return np.asarray(a.matmat(tm.materialize()))
    return tm.apply_right(a)


def _sketch_left_adjoint(a, tm: TestMatrix) -> np.ndarray:
    """X = A* Psi for a tall left sketch Psi (n x p)."""
    if _is_oracle(a):
        return np.asarray(a.adjoint_matmat(tm.materialize()))
    return tm.apply_adjoint(a).conj().T


def rsvd(a, k: int, tm: TestMatrix) -> SvdFactorization:
    """Randomized SVD: two passes over A, approximation rank <= k.

    The output reproduces Q (Q* A) for Q = orth(A Omega); a
    rank-deficient sketch is handled by dropping dependent columns of
    the orthonormal basis.
    """
    n, d = _shape(a)
    if tm.d != d or tm.k != k:
        raise ValueError(f"test matrix {tm!r} incompatible with A {a.shape} and k={k}")
    if k > min(n, d):
        raise ValueError(f"k={k} exceeds min(n, d)={min(n, d)}")
    y = _sketch_right(a, tm)
    q = orth(y)
    if q.shape[1] == 0:
        dt = y.dtype
        return SvdFactorization(
            u=np.zeros((n, 0), dtype=dt), sigma=np.zeros(0), v=np.zeros((d, 0), dtype=dt)
        )
    if _is_oracle(a):
        b = a.adjoint_matmat(q).conj().T
    else:
        b = q.conj().T @ (a.toarray() if sp.issparse(a) else a)
        b = np.asarray(b)
    fac = svd_econ(b)
    return SvdFactorization(u=q @ fac.u, sigma=fac.sigma, v=fac.v)


def _spectral_norm(y: np.ndarray, iters: int = 20, seed: int = 0) -> float:
    """Power-iteration estimate of ||Y||_2 (coarse accuracy suffices)."""
    if y.size == 0:
        return 0.0
    rng = RngStream(seed, ("spectral-norm",)).generator()
    v = rng.standard_normal(y.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        w = y @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = y.conj().T @ (w / nw)
        sigma = np.linalg.norm(v)
        if sigma == 0.0:
            return 0.0
        v /= sigma
        sigma = np.sqrt(sigma * nw)
    return float(sigma)


def _check_psd(a, tol: float = 1e-8, probes: int = 8, seed: int = 0) -> None:
    """Reject inputs that visibly fail self-adjointness/psd on sampled quadratic forms."""
    n = a.shape[0]
    rng = RngStream(seed, ("psd-check",)).generator()
    v = rng.standard_normal((n, probes))
    if _is_oracle(a):
        av = np.asarray(a.matmat(v))
    else:
        av = np.asarray(a @ v)
    quad = np.einsum("ij,ij->j", v.conj(), av)
    scale = max(np.linalg.norm(av, axis=0).max(), 1e-300) / np.sqrt(n)
    norms2 = np.einsum("ij,ij->j", v.conj(), v).real
    if np.any(np.abs(quad.imag) > tol * scale * norms2):
        raise ValueError("input is not self-adjoint to psd-check tolerance")
    if np.any(quad.real < -tol * scale * norms2):
        raise ValueError("input fails the sampled psd check")


def nystrom_psd(a, k: int, tm: TestMatrix, *, max_shift_retries: int = 3) -> EigFactorization:
    """Single-pass psd Nystrom approximation with the stabilizing shift.

    Computes Y = A Omega, shifts by nu = sqrt(n) eps ||Y||_2, factors
    Omega* Y_nu by Cholesky, and recovers an eigendecomposition with
    the shift removed and eigenvalues clamped at zero.  A Cholesky
    failure retries with nu increased tenfold, up to three times.
    """
    n, n2 = _shape(a)
    if n != n2:
        raise ValueError("nystrom_psd needs a square matrix")
    if tm.d != n or tm.k != k:
        raise ValueError(f"test matrix {tm!r} incompatible with A {a.shape} and k={k}")
    _check_psd(a, seed=tm.seed)
    y = _sketch_right(a, tm)
    omega = tm.materialize()
    nu = np.sqrt(n) * EPS * _spectral_norm(y, seed=tm.seed)
    last_exc: Exception | None = None
    for attempt in range(max_shift_retries + 1):
        y_nu = y + nu * omega if nu > 0 else y.copy()
        core = tm.apply_adjoint(y_nu)
        core = (core + core.conj().T) / 2.0
        try:
            c = cholesky_upper(core)
        except PositiveDefinitenessError as exc:
            last_exc = exc
            if nu == 0.0:
                nu = np.sqrt(n) * EPS * max(_spectral_norm(y, seed=tm.seed), 1.0)
            nu *= 10.0
            continue
        b = triangular_solve_right(y_nu, c)
        fac = svd_econ(b)
        lam = np.maximum(fac.sigma**2 - nu, 0.0)
        return EigFactorization(u=fac.u[:, :k], lam=lam[:k])
    raise PositiveDefinitenessError(
        f"Cholesky failed after {max_shift_retries} shift increases: {last_exc}"
    )


def _gn_core(a, tm_omega: TestMatrix, tm_psi: TestMatrix) -> OuterProduct:
    y = _sketch_right(a, tm_omega)
    x = _sketch_left_adjoint(a, tm_psi)
    w = tm_omega.apply_right(x.conj().T)  # (Psi* A) Omega, p x k
    fac = svd_econ(w)
    if fac.sigma.size == 0 or fac.sigma[0] == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(fac.sigma > DEFAULT_RANK_TOL * fac.sigma[0]))
    f = y @ (fac.v[:, :rank] / fac.sigma[:rank])
    g = x @ fac.u[:, :rank]
    return OuterProduct(f=f, g=g)


def _validate_gn(a, k: int, p: int, tm_omega: TestMatrix, tm_psi: TestMatrix):
    n, d = _shape(a)
    if not (k <= p <= min(n, d)):
        raise ValueError(f"need k <= p <= min(n, d); got k={k}, p={p}, shape={a.shape}")
    if tm_omega.d != d or tm_omega.k != k:
        raise ValueError("right test matrix has wrong dimensions")
    if tm_psi.d != n or tm_psi.k != p:
        raise ValueError("left test matrix has wrong dimensions")
    return n, d


def gen_nystrom_outer(a, k: int, p: int, tm_omega: TestMatrix, tm_psi: TestMatrix) -> OuterProduct:
    """Generalized Nystrom approximation in outer-product form, A_hat = F G*.

    Equals Y (Psi* Y)^+ (Psi* A) at full numerical rank, with the
    5-eps rank cut absorbing degeneracy.  Wide inputs (n < d) are
    processed through the adjoint.
    """
    n, d = _validate_gn(a, k, p, tm_omega, tm_psi)
    if n < d:
        flipped = _gn_core(_adjoint_operand(a), tm_psi, tm_omega)
        return OuterProduct(f=flipped.g, g=flipped.f)
    return _gn_core(a, tm_omega, tm_psi)


def _gn_svd_core(a, tm_omega: TestMatrix, tm_psi: TestMatrix) -> SvdFactorization:
    y = _sketch_right(a, tm_omega)
    x = _sketch_left_adjoint(a, tm_psi)
    q, _ = qr_econ(y)
    pmat, t = qr_econ(x)
    w = tm_psi.apply_adjoint(q)  # p x k
    fac1 = svd_econ(w)
    if fac1.sigma.size == 0 or fac1.sigma[0] == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(fac1.sigma > DEFAULT_RANK_TOL * fac1.sigma[0]))
    core = fac1.v[:, :rank] @ (
        (fac1.u[:, :rank].conj().T @ t.conj().T) / fac1.sigma[:rank, None]
    )
    fac2 = svd_econ(core)
    return SvdFactorization(u=q @ fac2.u, sigma=fac2.sigma, v=pmat @ fac2.v)


def _outer_to_svd(op: OuterProduct) -> SvdFactorization:
    """Orthogonalize an outer-product approximation into compact SVD form."""
    if op.rank == 0:
        return SvdFactorization(
            u=np.zeros((op.f.shape[0], 0), dtype=op.f.dtype),
            sigma=np.zeros(0),
            v=np.zeros((op.g.shape[0], 0), dtype=op.g.dtype),
        )
    qf, rf = qr_econ(op.f)
    qg, rg = qr_econ(op.g)
    fac = svd_econ(rf @ rg.conj().T)
    return SvdFactorization(u=qf @ fac.u, sigma=fac.sigma, v=qg @ fac.v)


def gen_nystrom_svd(a, k: int, p: int, tm_omega: TestMatrix, tm_psi: TestMatrix) -> SvdFactorization:
    """Generalized Nystrom approximation returned in compact SVD form.

    Produces the same approximation as :func:`gen_nystrom_outer` for
    the same sketches, with orthonormal factors.  Wide inputs are
    handled through the adjoint in outer-product form (the direct
    orthogonalized route needs a tall sketched core) and then
    re-orthogonalized.
    """
    n, d = _validate_gn(a, k, p, tm_omega, tm_psi)
    if n < d:
        flipped = _gn_core(_adjoint_operand(a), tm_psi, tm_omega)
        return _outer_to_svd(OuterProduct(f=flipped.g, g=flipped.f))
    return _gn_svd_core(a, tm_omega, tm_psi)


def sketch_and_solve(a, b, tm_psi: TestMatrix) -> np.ndarray:
    """Sketch-and-solve least squares: (Psi* A)^+ (Psi* B).

    The sketched system is solved by the truncated pseudoinverse with
    the 5-eps singular-value cutoff.  A left sketch with p >= d is
    recommended but not enforced.
    """
    n, _ = _shape(a)
    if tm_psi.d != n:
        raise ValueError("left test matrix must act on the row space of A")
    b = np.asarray(b)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if b.shape[0] != n:
        raise ValueError(f"B must have {n} rows, got {b.shape}")
    a_sk = tm_psi.apply_adjoint(a.toarray() if sp.issparse(a) else np.asarray(a))
    b_sk = tm_psi.apply_adjoint(b)
    out = truncated_pinv_apply(a_sk, b_sk)
    return out[:, 0] if squeeze else out


def matrix_recovery(query, basis, p: int, *, field: str = "real", seed: int = 0):
    """Approximate a matrix from p bilinear queries, within span(basis).

    Draws iid standard normal probe pairs (x_i, y_i), evaluates the
    plain-transpose bilinear forms y^T M x against the basis and the
    target, and solves the sketched least-squares system.

    Parameters
    ----------
    query : callable
        Oracle (x, y) -> y^T B x for the hidden target B.
    basis : sequence of ndarray
        Linearly independent n x n matrices spanning the family.
    p : int
        Number of bilinear queries (must be at least len(basis)).
    field : str
        'real' or 'complex' probe field.
    seed : int
        Probe seed.

    Returns
    -------
    coeffs : ndarray
        Coefficients of the recovered matrix in the basis.
    recovered : ndarray
        The matrix sum_j coeffs[j] * basis[j].
    """
    basis = [np.asarray(m) for m in basis]
    d = len(basis)
    if d == 0:
        raise ValueError("basis must be nonempty")
    n = basis[0].shape[0]
    if any(m.shape != (n, n) for m in basis):
        raise ValueError("basis matrices must share a square shape")
    if p < d:
        raise ValueError(f"need p >= {d} queries, got {p}")

    gram = np.empty((d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(i, d):
            gram[i, j] = np.vdot(basis[i], basis[j])
            gram[j, i] = np.conj(gram[i, j])
    eigs = np.linalg.eigvalsh(gram)
    if eigs[0] <= 5 * EPS * d * max(eigs[-1], 1e-300):
        warnings.warn("basis Gram matrix is numerically rank-deficient; proceeding")

    rng = RngStream(seed, ("matrix-recovery",)).generator()
    if field == "complex":
        xs = (rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))) / np.sqrt(2)
        ys = (rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))) / np.sqrt(2)
    else:
        xs = rng.standard_normal((n, p))
        ys = rng.standard_normal((n, p))

    f = np.empty((p, d), dtype=xs.dtype)
    for j, mat in enumerate(basis):
        f[:, j] = np.einsum("ij,ij->j", ys, mat @ xs)
    g = np.array([query(xs[:, i], ys[:, i]) for i in range(p)])

    coeffs = truncated_pinv_apply(f, g)
    recovered = np.zeros((n, n), dtype=np.result_type(coeffs.dtype, basis[0].dtype))
    for j, mat in enumerate(basis):
        recovered += coeffs[j] * mat
    return coeffs, recovered


@dataclass
class OrthogonalityStat:
    """Value of ||B (Qp* Omega)(Q* Omega)^+||_F^2 and a rank flag."""

    value: float
    rank_deficient: bool


def osi_orthogonality_statistic(b, q, q_perp, tm: TestMatrix) -> OrthogonalityStat:
    """How badly a sketch mixes a subspace with its orthogonal complement.

    Small values mean the sketched least-squares projection of
    Q_perp B* onto range(Q) stays small, the property that drives the
    error bounds of all the sketching algorithms.  Returns +inf with a
    flag when Q* Omega is numerically rank-deficient.
    """
    b = np.atleast_2d(np.asarray(b))
    q = np.asarray(q)
    q_perp = np.asarray(q_perp)
    r, s = q.shape[1], q_perp.shape[1]
    if b.shape[1] != s:
        raise ValueError(f"B must have {s} columns, got {b.shape}")
    cross = np.linalg.norm(q.conj().T @ q_perp)
    if cross > 1e-10 * np.sqrt(max(r * s, 1)):
        raise ValueError("Q and Q_perp are not mutually orthogonal")
    w1 = tm.apply_adjoint(q)  # k x r, equals (Q* Omega)*
    w2 = tm.apply_adjoint(q_perp)  # k x s
    fac = svd_econ(w1)
    if fac.sigma.size == 0 or fac.sigma[0] == 0.0 or (
        np.count_nonzero(fac.sigma > DEFAULT_RANK_TOL * fac.sigma[0]) < r
    ):
        return OrthogonalityStat(value=np.inf, rank_deficient=True)
    # (Q* Omega)^+ = U Sigma^{-1} V* built from w1 = U Sigma V*; the
    # trailing unitary V* does not change the Frobenius norm
    z = b @ (w2.conj().T @ (fac.u / fac.sigma))
    return OrthogonalityStat(value=float(np.linalg.norm(z) ** 2), rank_deficient=False)
