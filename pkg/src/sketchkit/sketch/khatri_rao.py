"""Khatri-Rao test matrices: columns are Kronecker products of iid factors.

The operator lives in F^{d0^ell x k} but is stored as ell factor blocks
of shape (d0, k), so applying it costs k Kronecker matvecs instead of a
dense product.  Seven isotropic base distributions are supported; the
spherical ones are normalized to length exactly sqrt(d0).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .base import TestMatrix, entry_sample

__all__ = ["KhatriRaoTM", "kron_inner", "KR_BASE_DISTRIBUTIONS", "kr_fourth_moment_constant"]

KR_BASE_DISTRIBUTIONS = {
    "real_gaussian": "real",
    "real_rademacher": "real",
    "real_spherical": "real",
    "complex_gaussian": "complex",
    "complex_rademacher": "complex",
    "steinhaus": "complex",
    "complex_spherical": "complex",
}


def kr_fourth_moment_constant(base: str, d0: int) -> float:
    """Exact sup of E|<nu, a>|^4 over unit vectors a, per base distribution."""
    if base == "real_gaussian":
        return 3.0
    if base == "real_rademacher":
        return 3.0 - 2.0 / d0
    if base == "real_spherical":
        return 3.0 - 6.0 / (d0 + 2)
    if base == "complex_gaussian":
        return 2.0
    if base in ("complex_rademacher", "steinhaus"):
        return 2.0 - 1.0 / d0
    if base == "complex_spherical":
        return 2.0 - 2.0 / (d0 + 1)
    raise ValueError(f"unknown base distribution {base!r}")


def _sample_factors(base: str, rng: np.random.Generator, d0: int, count: int) -> np.ndarray:
    """Sample `count` iid base-distribution vectors as a (d0, count) array."""
    if base in ("real_gaussian", "real_rademacher", "complex_gaussian",
                "complex_rademacher", "steinhaus"):
        return entry_sample(base, rng, (d0, count))
    if base == "real_spherical":
        g = rng.standard_normal((d0, count))
    elif base == "complex_spherical":
        g = rng.standard_normal((d0, count)) + 1j * rng.standard_normal((d0, count))
    else:
        raise ValueError(f"unknown base distribution {base!r}")
    norms = np.linalg.norm(g, axis=0)
    # d0 = 1 degenerates to a random sign (or phase)
    return g * (np.sqrt(d0) / norms)


def _contract(factors: np.ndarray, b: np.ndarray, conjugate: bool) -> np.ndarray:
    """Mode-by-mode contraction of (ell, d0, k) factors against b (d0^ell x m).

    Returns the (k, m) array of inner products of each Kronecker column
    with each column of b, without the 1/sqrt(k) scaling.
    """
    ell, d0, k = factors.shape
    m = b.shape[1]
    f = factors.conj() if conjugate else factors
    t = np.einsum("dk,dr->kr", f[0], b.reshape(d0, -1))
    for i in range(1, ell):
        t = np.einsum("dk,kdr->kr", f[i], t.reshape(k, d0, -1))
    return t.reshape(k, m)


def kron_inner(factors, v, conjugate: bool = True):
    """Inner product of a Kronecker-structured vector with a general vector.

    Computes <w1 (x) ... (x) wl, v> by successive mode contractions in
    O(d0^ell) arithmetic.  With `conjugate` the factors enter
    conjugated, matching the canonical inner product; for a Kronecker v
    = a1 (x) ... (x) al the result factorizes into prod_i <wi, ai>.
    """
    factors = [np.asarray(f) for f in factors]
    d0 = factors[0].shape[0]
    v = np.asarray(v)
    if any(f.shape != (d0,) for f in factors):
        raise ValueError("all factors must be vectors of the same length")
    if v.shape != (d0 ** len(factors),):
        raise ValueError(
            f"expected v of length {d0 ** len(factors)}, got {v.shape}"
        )
    t = v
    for f in factors:
        fc = np.conj(f) if conjugate else f
        t = fc @ t.reshape(d0, -1)
    return t.reshape(())[()]


class KhatriRaoTM(TestMatrix):
    """Khatri-Rao test matrix with base dimension d0 and tensor order ell."""

    def __init__(
        self,
        d0: int,
        ell: int,
        k: int,
        base: str = "complex_spherical",
        *,
        seed: int = 0,
    ):
        if base not in KR_BASE_DISTRIBUTIONS:
            raise ValueError(f"unknown base distribution {base!r}")
        if d0 < 1 or ell < 1:
            raise ValueError("need d0 >= 1 and ell >= 1")
        super().__init__(d0**ell, k, KR_BASE_DISTRIBUTIONS[base], seed)
        self.d0 = int(d0)
        self.ell = int(ell)
        self.base = base
        self._factors: np.ndarray | None = None

    @classmethod
    def from_factors(cls, factors, base: str = "real_gaussian") -> "KhatriRaoTM":
        """Test-fixture constructor from an explicit (ell, d0, k) factor array."""
        factors = np.asarray(factors)
        ell, d0, k = factors.shape
        tm = cls(d0, ell, k, base, seed=0)
        tm._factors = factors.astype(tm.dtype)
        return tm

    @property
    def factors(self) -> np.ndarray:
        if self._factors is None:
            rng = self._rng("factors")
            self._factors = np.stack(
                [_sample_factors(self.base, rng, self.d0, self.k) for _ in range(self.ell)]
            ).astype(self.dtype)
        return self._factors

    def materialize(self) -> np.ndarray:
        out = np.ones((1, self.k), dtype=self.dtype)
        for i in range(self.ell):
            out = (out[:, None, :] * self.factors[i][None, :, :]).reshape(-1, self.k)
        return out / np.sqrt(self.k)

    def apply_adjoint(self, b) -> np.ndarray:
        if sp.issparse(b):
            b = b.toarray()
        b = np.asarray(b)
        squeeze = b.ndim == 1
        if squeeze:
            b = b[:, None]
        self._check_adjoint(b)
        out = _contract(self.factors, b.astype(self.dtype, copy=False), True) / np.sqrt(self.k)
        return out[:, 0] if squeeze else out

    def apply_right(self, a) -> np.ndarray:
        if hasattr(a, "toarray"):
            a = a.toarray()
        a = np.asarray(a)
        self._check_right(a)
        out = _contract(self.factors, a.T.astype(self.dtype, copy=False), False)
        return out.T / np.sqrt(self.k)

    def redraw(self, seed: int) -> "KhatriRaoTM":
        return KhatriRaoTM(self.d0, self.ell, self.k, self.base, seed=seed)

    def sample_adjoint_sqnorms(self, x, trials: int, seed: int) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)[:, None]
        rng = self.redraw(seed)._rng("sqnorm-batch")
        out = np.empty(trials)
        chunk = max(1, int(2_000_000 // max(1, self.d * self.k)))
        done = 0
        while done < trials:
            m = min(chunk, trials - done)
            cols = m * self.k
            factors = np.stack(
                [_sample_factors(self.base, rng, self.d0, cols) for _ in range(self.ell)]
            ).astype(self.dtype)
            inner = _contract(factors, x, True)[:, 0]
            vals = (np.abs(inner) ** 2).reshape(m, self.k)
            out[done:done + m] = vals.sum(axis=1) / self.k
            done += m
        return out
