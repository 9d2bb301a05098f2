"""Sparse random test matrices: SparseStack, SparseUniform, SparseIID, SparseCol.

All four are stored as scipy CSR arrays, so the fast apply paths are
sparse matrix products with cost proportional to nnz.  The SparseStack
with row sparsity 1 reduces to a scaled CountSketch.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .base import TestMatrix, entry_sample

__all__ = ["SparseStackTM", "SparseUniformTM", "SparseIIDTM", "SparseColTM"]


def _sample_without_replacement(rng, n_sets: int, take: int, universe: int) -> np.ndarray:
    """Draw n_sets independent uniform subsets of size `take` from range(universe).

    Rejection sampling on iid draws, conditioned on distinctness, which
    is exactly the without-replacement distribution.  Falls back to
    per-set permutation when acceptance would be poor.
    """
    if take > universe:
        raise ValueError(f"cannot take {take} distinct items from {universe}")
    if take == universe:
        base = np.arange(universe)
        return np.tile(base, (n_sets, 1)) if n_sets else np.empty((0, take), dtype=int)
    # acceptance probability of an iid draw being all-distinct
    accept = np.prod(1.0 - np.arange(take) / universe)
    if accept < 0.05:
        out = np.empty((n_sets, take), dtype=np.int64)
        for i in range(n_sets):
            out[i] = rng.permutation(universe)[:take]
        return out
    out = rng.integers(0, universe, size=(n_sets, take))
    while True:
        srt = np.sort(out, axis=1)
        bad = np.nonzero((np.diff(srt, axis=1) == 0).any(axis=1))[0]
        if bad.size == 0:
            return out
        out[bad] = rng.integers(0, universe, size=(bad.size, take))


class _SparseTM(TestMatrix):
    """Shared apply paths for CSR-backed test matrices."""

    _matrix_cache: sp.csr_array | None

    @property
    def matrix(self) -> sp.csr_array:
        if self._matrix_cache is None:
            self._matrix_cache = self._build()
        return self._matrix_cache

    def _build(self) -> sp.csr_array:
        raise NotImplementedError

    def materialize(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply_right(self, a) -> np.ndarray:
        self._check_right(a)
        out = a @ self.matrix
        return out.toarray() if sp.issparse(out) else np.asarray(out)

    def apply_adjoint(self, b) -> np.ndarray:
        if sp.issparse(b):
            out = self.matrix.conj().T @ b
            return out.toarray() if sp.issparse(out) else np.asarray(out)
        b = np.asarray(b)
        squeeze = b.ndim == 1
        if squeeze:
            b = b[:, None]
        self._check_adjoint(b)
        out = np.asarray(self.matrix.conj().T @ b)
        return out[:, 0] if squeeze else out


class SparseStackTM(_SparseTM):
    """Row-sparse test matrix: zeta CountSketch blocks of width b, stacked side by side.

    Each row has exactly zeta nonzeros of magnitude 1/sqrt(zeta), one
    per block.  Embedding dimension k = b * zeta.  Real entries are
    Rademacher; complex entries default to Steinhaus.
    """

    def __init__(
        self,
        d: int,
        zeta: int = 4,
        block_size: int | None = None,
        *,
        k: int | None = None,
        distribution: str | None = None,
        field: str = "real",
        seed: int = 0,
    ):
        if zeta < 1:
            raise ValueError("row sparsity zeta must be >= 1")
        if block_size is None:
            if k is None:
                raise ValueError("give either block_size or k")
            if k % zeta:
                raise ValueError(f"k={k} must be divisible by zeta={zeta}")
            block_size = k // zeta
        if block_size < 1:
            raise ValueError("block size must be >= 1")
        super().__init__(d, block_size * zeta, field, seed)
        self.zeta = int(zeta)
        self.block_size = int(block_size)
        if distribution is None:
            distribution = "steinhaus" if field == "complex" else "real_rademacher"
        self.distribution = distribution
        self._matrix_cache = None

    @classmethod
    def from_assignments(cls, signs, buckets, block_size, field="real"):
        """Test-fixture constructor from explicit (d, zeta) sign/bucket arrays."""
        signs = np.asarray(signs)
        buckets = np.asarray(buckets)
        d, zeta = signs.shape
        tm = cls(d, zeta, block_size, field=field, seed=0)
        tm._matrix_cache = tm._assemble(signs, buckets)
        return tm

    def _assemble(self, signs, buckets) -> sp.csr_array:
        d, zeta, b = self.d, self.zeta, self.block_size
        cols = buckets + np.arange(zeta)[None, :] * b
        indptr = np.arange(d + 1) * zeta
        values = (signs / np.sqrt(zeta)).astype(self.dtype).ravel()
        return sp.csr_array((values, cols.ravel(), indptr), shape=(d, self.k))

    def _build(self) -> sp.csr_array:
        rng = self._rng("entries")
        buckets = rng.integers(0, self.block_size, size=(self.d, self.zeta))
        signs = entry_sample(self.distribution, rng, (self.d, self.zeta))
        return self._assemble(signs, buckets)

    def redraw(self, seed: int) -> "SparseStackTM":
        return SparseStackTM(
            self.d,
            self.zeta,
            self.block_size,
            distribution=self.distribution,
            field=self.field,
            seed=seed,
        )

    def sample_adjoint_sqnorms(self, x, trials: int, seed: int) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        rng = self.redraw(seed)._rng("sqnorm-batch")
        out = np.zeros(trials)
        b = self.block_size
        chunk = max(1, int(4_000_000 // max(1, self.d)))
        done = 0
        while done < trials:
            m = min(chunk, trials - done)
            acc = np.zeros(m)
            for _ in range(self.zeta):
                buckets = rng.integers(0, b, size=(m, self.d))
                signs = entry_sample(self.distribution, rng, (m, self.d))
                weights = signs * x[None, :]
                keys = (buckets + np.arange(m)[:, None] * b).ravel()
                sums_re = np.bincount(keys, weights=weights.real.ravel(), minlength=m * b)
                if np.iscomplexobj(weights):
                    sums_im = np.bincount(keys, weights=weights.imag.ravel(), minlength=m * b)
                    acc += (sums_re**2 + sums_im**2).reshape(m, b).sum(axis=1)
                else:
                    acc += (sums_re**2).reshape(m, b).sum(axis=1)
            out[done:done + m] = acc / self.zeta
            done += m
        return out


class SparseUniformTM(_SparseTM):
    """Exactly zeta nonzeros per row at positions sampled without replacement."""

    def __init__(self, d: int, k: int, zeta: int = 4, *, field: str = "real", seed: int = 0):
        if zeta < 1 or zeta > k:
            raise ValueError(f"need 1 <= zeta <= k, got zeta={zeta}, k={k}")
        super().__init__(d, k, field, seed)
        self.zeta = int(zeta)
        self._matrix_cache = None

    def _build(self) -> sp.csr_array:
        rng = self._rng("entries")
        cols = _sample_without_replacement(rng, self.d, self.zeta, self.k)
        cols.sort(axis=1)
        signs = rng.integers(0, 2, size=(self.d, self.zeta)) * 2.0 - 1.0
        indptr = np.arange(self.d + 1) * self.zeta
        values = (signs / np.sqrt(self.zeta)).astype(self.dtype).ravel()
        return sp.csr_array((values, cols.ravel(), indptr), shape=(self.d, self.k))

    def redraw(self, seed: int) -> "SparseUniformTM":
        return SparseUniformTM(self.d, self.k, self.zeta, field=self.field, seed=seed)

    def sample_adjoint_sqnorms(self, x, trials: int, seed: int) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        rng = self.redraw(seed)._rng("sqnorm-batch")
        out = np.empty(trials)
        k = self.k
        chunk = max(1, int(2_000_000 // max(1, self.d * self.zeta)))
        done = 0
        while done < trials:
            m = min(chunk, trials - done)
            cols = _sample_without_replacement(rng, m * self.d, self.zeta, k)
            signs = rng.integers(0, 2, size=(m * self.d, self.zeta)) * 2.0 - 1.0
            weights = signs * np.tile(x, m)[:, None]
            trial_of_row = np.repeat(np.arange(m), self.d)
            keys = (cols + trial_of_row[:, None] * k).ravel()
            sums_re = np.bincount(keys, weights=weights.real.ravel(), minlength=m * k)
            vals = sums_re**2
            if np.iscomplexobj(weights):
                sums_im = np.bincount(keys, weights=weights.imag.ravel(), minlength=m * k)
                vals = vals + sums_im**2
            out[done:done + m] = vals.reshape(m, k).sum(axis=1) / self.zeta
            done += m
        return out


class SparseIIDTM(_SparseTM):
    """Entries iid zeta^{-1/2} * sign * Bernoulli(zeta / k).

    The nonzero pattern is generated by geometric skipping over the
    Bernoulli gaps, so construction runs in O(d * zeta) expected time;
    storage is variable.
    """

    def __init__(self, d: int, k: int, zeta: float = 4.0, *, field: str = "real", seed: int = 0):
        if not (0.0 < zeta <= k):
            raise ValueError(f"expected row sparsity in (0, k], got {zeta}")
        super().__init__(d, k, field, seed)
        self.zeta = float(zeta)
        self._matrix_cache = None

    @staticmethod
    def _bernoulli_positions(rng, p: float, total: int) -> np.ndarray:
        """Indices of successes in `total` iid Bernoulli(p) trials, via geometric gaps."""
        if p >= 1.0:
            return np.arange(total)
        positions = []
        pos = -1
        expected = int(total * p * 1.2) + 16
        while True:
            gaps = rng.geometric(p, size=expected)
            steps = np.cumsum(gaps) + pos
            inside = steps[steps < total]
            positions.append(inside)
            if inside.size < steps.size:
                break
            pos = int(steps[-1])
        return np.concatenate(positions)

    def _build(self) -> sp.csr_array:
        rng = self._rng("entries")
        p = self.zeta / self.k
        flat = self._bernoulli_positions(rng, p, self.d * self.k)
        rows, cols = flat // self.k, flat % self.k
        signs = rng.integers(0, 2, size=flat.size) * 2.0 - 1.0
        values = (signs / np.sqrt(self.zeta)).astype(self.dtype)
        coo = sp.coo_array((values, (rows, cols)), shape=(self.d, self.k))
        mat = sp.csr_array(coo)
        mat.sort_indices()
        return mat

    def redraw(self, seed: int) -> "SparseIIDTM":
        return SparseIIDTM(self.d, self.k, self.zeta, field=self.field, seed=seed)

    def sample_adjoint_sqnorms(self, x, trials: int, seed: int) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        rng = self.redraw(seed)._rng("sqnorm-batch")
        out = np.empty(trials)
        k, d = self.k, self.d
        p = self.zeta / k
        chunk = max(1, int(4_000_000 // max(1, int(d * self.zeta))))
        done = 0
        while done < trials:
            m = min(chunk, trials - done)
            flat = self._bernoulli_positions(rng, p, m * d * k)
            signs = rng.integers(0, 2, size=flat.size) * 2.0 - 1.0
            trial = flat // (d * k)
            within = flat % (d * k)
            rows, cols = within // k, within % k
            weights = signs * x[rows]
            keys = trial * k + cols
            sums_re = np.bincount(keys, weights=weights.real, minlength=m * k)
            vals = sums_re**2
            if np.iscomplexobj(weights):
                sums_im = np.bincount(keys, weights=weights.imag, minlength=m * k)
                vals = vals + sums_im**2
            out[done:done + m] = vals.reshape(m, k).sum(axis=1) / self.zeta
            done += m
        return out


class SparseColTM(_SparseTM):
    """Column-sparse sampler: each column has xi nonzeros of value +-sqrt(d/xi)/sqrt(k)."""

    def __init__(self, d: int, k: int, xi: int = 8, *, field: str = "real", seed: int = 0):
        if xi < 1 or xi > d:
            raise ValueError(f"need 1 <= xi <= d, got xi={xi}, d={d}")
        super().__init__(d, k, field, seed)
        self.xi = int(xi)
        self._matrix_cache = None

    def _build(self) -> sp.csr_array:
        rng = self._rng("entries")
        rows = _sample_without_replacement(rng, self.k, self.xi, self.d)
        signs = rng.integers(0, 2, size=(self.k, self.xi)) * 2.0 - 1.0
        scale = np.sqrt(self.d / self.xi) / np.sqrt(self.k)
        cols = np.repeat(np.arange(self.k), self.xi)
        coo = sp.coo_array(
            ((signs.ravel() * scale).astype(self.dtype), (rows.ravel(), cols)),
            shape=(self.d, self.k),
        )
        mat = sp.csr_array(coo)
        mat.sort_indices()
        return mat

    def redraw(self, seed: int) -> "SparseColTM":
        return SparseColTM(self.d, self.k, self.xi, field=self.field, seed=seed)

    def sample_adjoint_sqnorms(self, x, trials: int, seed: int) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        rng = self.redraw(seed)._rng("sqnorm-batch")
        out = np.empty(trials)
        scale = self.d / self.xi / self.k
        chunk = max(1, int(4_000_000 // max(1, self.k * self.xi)))
        done = 0
        while done < trials:
            m = min(chunk, trials - done)
            rows = _sample_without_replacement(rng, m * self.k, self.xi, self.d)
            signs = rng.integers(0, 2, size=rows.shape) * 2.0 - 1.0
            sums = (signs * x[rows]).sum(axis=1)
            out[done:done + m] = scale * (np.abs(sums) ** 2).reshape(m, self.k).sum(axis=1)
            done += m
        return out
