"""Matrix containers and low-rank factorization forms.

Dense matrices are validated, column-major (Fortran-ordered) numpy
arrays over float64 or complex128.  Sparse matrices are canonical-form
scipy CSR arrays.  Low-rank factorizations come in outer-product, SVD,
and eigendecomposition forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "REAL",
    "COMPLEX",
    "EPS",
    "dtype_of",
    "field_of",
    "dense_matrix",
    "as_ndarray",
    "sparse_csr",
    "validate_csr",
    "nnz",
    "OuterProduct",
    "SvdFactorization",
    "EigFactorization",
]

REAL = "real"
COMPLEX = "complex"

# machine epsilon of the (double precision only) scalar types
EPS = float(np.finfo(np.float64).eps)

_DTYPES = {REAL: np.float64, COMPLEX: np.complex128}


def dtype_of(field: str) -> np.dtype:
    """Map a field tag to its double-precision dtype."""
    try:
        return np.dtype(_DTYPES[field])
    except KeyError:
        raise ValueError(f"unknown field {field!r}; expected 'real' or 'complex'")


def field_of(a) -> str:
    """Field tag of an array-like (complex dtype -> 'complex')."""
    return COMPLEX if np.iscomplexobj(a) else REAL


def dense_matrix(data, field: str | None = None) -> np.ndarray:
    """Validate and return a column-major dense matrix.

    Entries must be finite; dtype is float64 or complex128.  1-d input
    is treated as a single column.
    """
    a = np.asarray(data)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d array, got ndim={a.ndim}")
    dtype = dtype_of(field) if field is not None else dtype_of(field_of(a))
    a = np.asfortranarray(a, dtype=dtype)
    if not np.all(np.isfinite(a)):
        raise ValueError("dense matrix entries must be finite (no NaN/Inf)")
    return a


def as_ndarray(a) -> np.ndarray:
    """Accept a dense array or scipy sparse matrix and return ndarray."""
    if sp.issparse(a):
        return a.toarray()
    return np.asarray(a)


def sparse_csr(rows, cols, row_ptr, col_idx, values) -> sp.csr_array:
    """Build a validated CSR matrix from raw components."""
    mat = sp.csr_array(
        (np.asarray(values), np.asarray(col_idx), np.asarray(row_ptr)),
        shape=(rows, cols),
    )
    validate_csr(mat)
    return mat


def validate_csr(mat) -> None:
    """Check CSR invariants: monotone row_ptr, sorted in-row indices, finite values."""
    if not sp.issparse(mat) or mat.format != "csr":
        raise ValueError("expected a CSR sparse matrix")
    indptr, indices, data = mat.indptr, mat.indices, mat.data
    if indptr[0] != 0 or indptr[-1] != len(indices):
        raise ValueError("row_ptr must start at 0 and end at nnz")
    if np.any(np.diff(indptr) < 0):
        raise ValueError("row_ptr must be nondecreasing")
    for i in range(mat.shape[0]):
        seg = indices[indptr[i]:indptr[i + 1]]
        if seg.size > 1 and np.any(np.diff(seg) <= 0):
            raise ValueError(f"column indices must be strictly increasing in row {i}")
        if np.any(seg < 0) or np.any(seg >= mat.shape[1]):
            raise ValueError(f"column index out of bounds in row {i}")
    if not np.all(np.isfinite(data)):
        raise ValueError("sparse values must be finite")


def nnz(a) -> int:
    """Number of stored nonzero entries."""
    if sp.issparse(a):
        return int(a.nnz)
    return int(np.count_nonzero(a))


def _check_orthonormal(name: str, q: np.ndarray, tol_scale: float = 1e-10) -> None:
    k = q.shape[1]
    if k == 0:
        return
    defect = np.linalg.norm(q.conj().T @ q - np.eye(k), "fro")
    if defect > tol_scale * np.sqrt(k):
        raise ValueError(f"{name} is not orthonormal: ||Q*Q - I||_F = {defect:.3e}")


@dataclass
class OuterProduct:
    """Approximation in outer-product form, A_hat = F G*."""

    f: np.ndarray  # n x k
    g: np.ndarray  # d x k

    def __post_init__(self):
        if self.f.shape[1] != self.g.shape[1]:
            raise ValueError("F and G must have the same number of columns")

    @property
    def rank(self) -> int:
        return self.f.shape[1]

    def matrix(self) -> np.ndarray:
        return self.f @ self.g.conj().T

    def trace(self) -> complex | float:
        """tr(F G*) without forming the product (requires square A_hat)."""
        if self.f.shape[0] != self.g.shape[0]:
            raise ValueError("trace requires a square approximation")
        return np.vdot(self.g, self.f)


@dataclass
class SvdFactorization:
    """Approximation in SVD form, A_hat = U diag(sigma) V*."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        k = self.sigma.shape[0]
        if self.u.shape[1] != k or self.v.shape[1] != k:
            raise ValueError("inconsistent factor widths")
        if np.iscomplexobj(self.sigma):
            raise ValueError("singular values must be real")

    def validate(self) -> None:
        _check_orthonormal("U", self.u)
        _check_orthonormal("V", self.v)
        if np.any(self.sigma < 0):
            raise ValueError("singular values must be nonnegative")
        if np.any(np.diff(self.sigma) > 0):
            raise ValueError("singular values must be nonincreasing")

    @property
    def rank(self) -> int:
        return self.sigma.shape[0]

    def matrix(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.conj().T


@dataclass
class EigFactorization:
    """Psd approximation in eigendecomposition form, A_hat = U diag(lam) U*."""

    u: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        if self.u.shape[1] != self.lam.shape[0]:
            raise ValueError("inconsistent factor widths")
        if np.iscomplexobj(self.lam):
            raise ValueError("eigenvalues must be real")

    def validate(self) -> None:
        _check_orthonormal("U", self.u)
        if np.any(self.lam < 0):
            raise ValueError("eigenvalues must be nonnegative")

    @property
    def rank(self) -> int:
        return self.lam.shape[0]

    def matrix(self) -> np.ndarray:
        return (self.u * self.lam) @ self.u.conj().T

    def trace(self) -> float:
        return float(np.sum(self.lam))
