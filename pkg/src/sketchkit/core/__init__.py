"""Scalar-generic containers, factorizations, seeded RNG, and file I/O."""

from .containers import (
    COMPLEX,
    EPS,
    REAL,
    EigFactorization,
    OuterProduct,
    SvdFactorization,
    as_ndarray,
    dense_matrix,
    dtype_of,
    field_of,
    nnz,
    sparse_csr,
    validate_csr,
)
from .factor import (
    DEFAULT_RANK_TOL,
    PositiveDefinitenessError,
    cholesky_upper,
    orth,
    qr_econ,
    svd_econ,
    triangular_solve_right,
    truncated_pinv_apply,
)
from .io import ParseError, read_matrix_market, write_csv, write_matrix_market
from .rng import RngStream

__all__ = [
    "COMPLEX",
    "EPS",
    "REAL",
    "EigFactorization",
    "OuterProduct",
    "SvdFactorization",
    "as_ndarray",
    "dense_matrix",
    "dtype_of",
    "field_of",
    "nnz",
    "sparse_csr",
    "validate_csr",
    "DEFAULT_RANK_TOL",
    "PositiveDefinitenessError",
    "cholesky_upper",
    "orth",
    "qr_econ",
    "svd_econ",
    "triangular_solve_right",
    "truncated_pinv_apply",
    "ParseError",
    "read_matrix_market",
    "write_csv",
    "write_matrix_market",
    "RngStream",
]
