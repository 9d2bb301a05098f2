"""The sketching-operator interface shared by every test-matrix family.

A test matrix Omega is a d-by-k random linear map with a declared
field, a seed, and two apply paths: right-apply A -> A Omega and
adjoint-apply B -> Omega* B.  Every family satisfies the isotropy
condition E ||Omega* x||^2 = ||x||^2, and every fast apply path agrees
with the materialized dense matrix.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np
import scipy.sparse as sp

from ..core.containers import dtype_of
from ..core.rng import RngStream

__all__ = ["TestMatrix", "ExplicitTM", "entry_sample"]


def entry_sample(distribution: str, rng: np.random.Generator, size) -> np.ndarray:
    """Sample iid unit-variance scalar entries from a named distribution.

    Supported names: 'real_rademacher', 'complex_rademacher',
    'steinhaus', 'real_gaussian', 'complex_gaussian',
    'uniform_symmetric' (uniform on [-sqrt(3), sqrt(3)]).
    """
    if distribution == "real_rademacher":
        return rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
    if distribution == "complex_rademacher":
        re = rng.integers(0, 2, size=size) * 2.0 - 1.0
        im = rng.integers(0, 2, size=size) * 2.0 - 1.0
        return (re + 1j * im) / np.sqrt(2.0)
    if distribution == "steinhaus":
        theta = rng.uniform(0.0, 2.0 * np.pi, size=size)
        return np.exp(1j * theta)
    if distribution == "real_gaussian":
        return rng.standard_normal(size)
    if distribution == "complex_gaussian":
        return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)
    if distribution == "uniform_symmetric":
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=size)
    raise ValueError(f"unknown entry distribution {distribution!r}")


class TestMatrix(ABC):
    """Abstract random sketching operator Omega in F^{d x k}."""

    def __init__(self, d: int, k: int, field: str, seed: int):
        if d < 1 or k < 1:
            raise ValueError(f"dimensions must be positive, got d={d}, k={k}")
        self.d = int(d)
        self.k = int(k)
        self.field = field
        self.dtype = dtype_of(field)
        self.seed = int(seed)

    def _rng(self, *labels) -> np.random.Generator:
        return RngStream(self.seed, (type(self).__name__,) + labels).generator()

    def _check_right(self, a) -> None:
        if a.shape[1] != self.d:
            raise ValueError(f"apply_right needs A with {self.d} columns, got {a.shape}")

    def _check_adjoint(self, b) -> None:
        if b.shape[0] != self.d:
            raise ValueError(f"apply_adjoint needs B with {self.d} rows, got {b.shape}")

    @abstractmethod
    def materialize(self) -> np.ndarray:
        """Explicit dense d-by-k matrix (for diagnostics and oracles)."""

    def apply_right(self, a) -> np.ndarray:
        """Compute A Omega for A with d columns (dense or sparse A)."""
        self._check_right(a)
        out = a @ self.materialize()
        return out.toarray() if sp.issparse(out) else np.asarray(out)

    def apply_adjoint(self, b) -> np.ndarray:
        """Compute Omega* B for B with d rows."""
        if sp.issparse(b):
            b = b.toarray()
        b = np.asarray(b)
        squeeze = b.ndim == 1
        if squeeze:
            b = b[:, None]
        self._check_adjoint(b)
        out = self.materialize().conj().T @ b
        return out[:, 0] if squeeze else out

    def sample_adjoint_sqnorms(self, x, trials: int, seed: int) -> np.ndarray:
        """Monte Carlo samples of ||Omega* x||^2 over fresh draws of Omega.

        Generic implementation instantiates one operator per trial;
        families override with vectorized samplers that agree in
        distribution (checked by tests).
        """
        x = np.asarray(x)
        out = np.empty(trials)
        for t in range(trials):
            tm = self.redraw(seed=seed + t)
            y = tm.apply_adjoint(x)
            out[t] = float(np.real(np.vdot(y, y)))
        return out

    @abstractmethod
    def redraw(self, seed: int) -> "TestMatrix":
        """A fresh operator with the same parameters and a new seed."""

    def __repr__(self):
        return f"{type(self).__name__}(d={self.d}, k={self.k}, field={self.field!r}, seed={self.seed})"


class ExplicitTM(TestMatrix):
    """A user-supplied explicit matrix wrapped as a sketching operator."""

    def __init__(self, matrix, field: str | None = None):
        matrix = np.asarray(matrix)
        if field is None:
            field = "complex" if np.iscomplexobj(matrix) else "real"
        super().__init__(matrix.shape[0], matrix.shape[1], field, seed=0)
        self._matrix = matrix.astype(self.dtype, copy=False)

    def materialize(self) -> np.ndarray:
        return self._matrix

    def redraw(self, seed: int) -> "ExplicitTM":
        return self


def sparse_adjoint_apply(matrix: sp.csr_array, b):
    """Omega* B for a sparse Omega; keeps the result sparse when B is sparse."""
    out = matrix.conj().T @ b
    if sp.issparse(out):
        return out
    return np.asarray(out)
