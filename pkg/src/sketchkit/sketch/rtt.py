"""Unitary trigonometric transforms and the SparseRTT test matrix.

The SparseRTT is Omega = D F S: a random unit-modulus diagonal D, a
unitary Walsh-Hadamard / cosine / Fourier transform F, and a SparseCol
sampling matrix S.  Applying it costs one fast transform plus an
O(k * xi) sampling step.
"""

from __future__ import annotations

import numpy as np
import scipy.fft
import scipy.sparse as sp

from .base import TestMatrix, entry_sample
from .sparse import SparseColTM, _sample_without_replacement

__all__ = ["wht", "dct2_ortho", "dft_unitary", "SparseRttTM", "TRANSFORMS"]


def _require_pow2(d: int) -> int:
    m = d.bit_length() - 1
    if d <= 0 or (1 << m) != d:
        raise ValueError(f"WHT requires a power-of-two length, got {d}")
    return m


def wht(x, axis: int = 0) -> np.ndarray:
    """Walsh-Hadamard transform with 1/sqrt(d) normalization (self-inverse)."""
    x = np.asarray(x, dtype=np.result_type(x, np.float64))
    d = x.shape[axis]
    _require_pow2(d)
    y = np.moveaxis(x.copy(), axis, 0)
    h = 1
    while h < d:
        # butterfly on adjacent blocks of height h
        y = y.reshape(d // (2 * h), 2, h, -1)
        top = y[:, 0] + y[:, 1]
        bot = y[:, 0] - y[:, 1]
        y = np.stack([top, bot], axis=1).reshape(d, -1)
        h *= 2
    y = y / np.sqrt(d)
    y = y.reshape((d,) + np.moveaxis(x, axis, 0).shape[1:])
    return np.moveaxis(y, 0, axis)


def dct2_ortho(x, axis: int = 0) -> np.ndarray:
    """Orthonormal type-II discrete cosine transform."""
    return scipy.fft.dct(np.asarray(x), type=2, norm="ortho", axis=axis)


def dft_unitary(x, axis: int = 0) -> np.ndarray:
    """Unitary discrete Fourier transform (1/sqrt(d) scaling)."""
    x = np.asarray(x)
    return np.fft.fft(x, axis=axis) / np.sqrt(x.shape[axis])


def _dct2_adjoint(x, axis: int = 0) -> np.ndarray:
    # DCT-II is real orthonormal: adjoint = inverse = DCT-III
    return scipy.fft.dct(np.asarray(x), type=3, norm="ortho", axis=axis)


def _dft_adjoint(x, axis: int = 0) -> np.ndarray:
    x = np.asarray(x)
    return np.fft.ifft(x, axis=axis) * np.sqrt(x.shape[axis])


TRANSFORMS = {
    "wht": (wht, wht, False),
    "dct": (dct2_ortho, _dct2_adjoint, False),
    "dft": (dft_unitary, _dft_adjoint, True),
}


class SparseRttTM(TestMatrix):
    """Sparse randomized trigonometric transform, Omega = D F S."""

    def __init__(
        self,
        d: int,
        k: int,
        xi: int | None = None,
        transform: str | None = None,
        *,
        diagonal: str | None = None,
        field: str = "real",
        seed: int = 0,
    ):
        super().__init__(d, k, field, seed)
        if xi is None:
            xi = int(np.ceil(1.5 * np.log(max(2, k))))
        if transform is None:
            transform = "dft" if field == "complex" else "dct"
        if transform not in TRANSFORMS:
            raise ValueError(f"unknown transform {transform!r}")
        if transform == "wht":
            _require_pow2(d)
        if transform == "dft" and field != "complex":
            raise ValueError("the DFT transform requires the complex field")
        if diagonal is None:
            diagonal = "real_rademacher"
        if diagonal not in ("real_rademacher", "uniform_symmetric", "steinhaus"):
            raise ValueError(f"unsupported diagonal distribution {diagonal!r}")
        if diagonal == "steinhaus" and field != "complex":
            raise ValueError("a Steinhaus diagonal requires the complex field")
        self.xi = int(xi)
        if not 1 <= self.xi <= d:
            raise ValueError(f"need 1 <= xi <= d, got xi={self.xi}")
        self.transform = transform
        self.diagonal = diagonal
        self._dvals: np.ndarray | None = None
        self._sampler: SparseColTM | None = None

    def _parts(self):
        if self._dvals is None:
            rng = self._rng("diagonal")
            self._dvals = entry_sample(self.diagonal, rng, self.d).astype(self.dtype)
            self._sampler = SparseColTM(
                self.d, self.k, self.xi, field=self.field, seed=self.seed
            )
        return self._dvals, self._sampler

    def materialize(self) -> np.ndarray:
        dvals, sampler = self._parts()
        fwd = TRANSFORMS[self.transform][0]
        fs = fwd(sampler.materialize(), axis=0)
        return (dvals[:, None] * fs).astype(self.dtype)

    def apply_right(self, a) -> np.ndarray:
        self._check_right(a)
        dvals, sampler = self._parts()
        fwd = TRANSFORMS[self.transform][0]
        ad = np.asarray(a.toarray() if hasattr(a, "toarray") else a) * dvals[None, :]
        # right multiplication M F applies F^T to each row; WHT and DFT
        # are symmetric, while the DCT-II transpose is the DCT-III
        if self.transform == "dct":
            adf = scipy.fft.dct(ad, type=3, norm="ortho", axis=1)
        else:
            adf = fwd(ad, axis=1)
        return np.asarray(adf @ sampler.matrix)

    def apply_adjoint(self, b) -> np.ndarray:
        if sp.issparse(b):
            b = b.toarray()
        b = np.asarray(b)
        squeeze = b.ndim == 1
        if squeeze:
            b = b[:, None]
        self._check_adjoint(b)
        dvals, sampler = self._parts()
        adj = TRANSFORMS[self.transform][1]
        w = np.conj(dvals)[:, None] * b
        out = np.asarray(sampler.matrix.conj().T @ adj(w, axis=0))
        return out[:, 0] if squeeze else out

    def redraw(self, seed: int) -> "SparseRttTM":
        return SparseRttTM(
            self.d,
            self.k,
            self.xi,
            self.transform,
            diagonal=self.diagonal,
            field=self.field,
            seed=seed,
        )

    def sample_adjoint_sqnorms(self, x, trials: int, seed: int) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        rng = self.redraw(seed)._rng("sqnorm-batch")
        adj = TRANSFORMS[self.transform][1]
        out = np.empty(trials)
        scale = self.d / self.xi / self.k
        chunk = max(1, int(2_000_000 // max(1, self.d)))
        done = 0
        while done < trials:
            m = min(chunk, trials - done)
            dvals = entry_sample(self.diagonal, rng, (m, self.d))
            z = adj(np.conj(dvals) * x[None, :], axis=1)
            rows = _sample_without_replacement(rng, m * self.k, self.xi, self.d)
            signs = rng.integers(0, 2, size=rows.shape) * 2.0 - 1.0
            trial_of = np.repeat(np.arange(m), self.k)
            gathered = z.reshape(-1)[trial_of[:, None] * self.d + rows]
            sums = (signs * gathered).sum(axis=1)
            out[done:done + m] = scale * (np.abs(sums) ** 2).reshape(m, self.k).sum(axis=1)
            done += m
        return out
