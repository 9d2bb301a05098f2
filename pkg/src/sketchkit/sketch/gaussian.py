"""The Gaussian test matrix: the accuracy baseline for every experiment."""

from __future__ import annotations

import numpy as np

from .base import TestMatrix

__all__ = ["GaussianTM"]


class GaussianTM(TestMatrix):
    """Dense test matrix with iid N(0, 1/k) entries (complex: N_C(0, 1)/sqrt(k))."""

    def __init__(self, d: int, k: int, field: str = "real", seed: int = 0):
        super().__init__(d, k, field, seed)
        self._matrix: np.ndarray | None = None

    def materialize(self) -> np.ndarray:
        if self._matrix is None:
            rng = self._rng("entries")
            scale = 1.0 / np.sqrt(self.k)
            if self.field == "complex":
                z = rng.standard_normal((self.d, self.k)) + 1j * rng.standard_normal(
                    (self.d, self.k)
                )
                self._matrix = (z / np.sqrt(2.0)) * scale
            else:
                self._matrix = rng.standard_normal((self.d, self.k)) * scale
        return self._matrix

    def redraw(self, seed: int) -> "GaussianTM":
        return GaussianTM(self.d, self.k, self.field, seed)

    def sample_adjoint_sqnorms(self, x, trials: int, seed: int) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        out = np.empty(trials)
        chunk = max(1, int(2_000_000 // max(1, self.d * self.k)))
        rng = self.redraw(seed)._rng("sqnorm-batch")
        done = 0
        while done < trials:
            m = min(chunk, trials - done)
            if self.field == "complex":
                g = rng.standard_normal((self.d, m * self.k)) + 1j * rng.standard_normal(
                    (self.d, m * self.k)
                )
                g /= np.sqrt(2.0)
            else:
                g = rng.standard_normal((self.d, m * self.k))
            inner = x.conj() @ g
            vals = np.abs(inner.reshape(m, self.k)) ** 2
            out[done:done + m] = vals.sum(axis=1) / self.k
            done += m
        return out
