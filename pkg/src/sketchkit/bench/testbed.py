"""Synthetic diagonal test matrices with controlled spectral decay."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = ["TestbedSpectrum", "spectrum_values", "testbed_generate", "default_testbed"]

KINDS = ("low_rank_plus_noise", "poly_decay", "exp_decay")


@dataclass(frozen=True)
class TestbedSpectrum:
    """Diagonal spectrum descriptor: R leading ones plus a decaying tail."""

    kind: str
    rank: int = 10
    eps: float = 1e-2  # low_rank_plus_noise tail level
    p: float = 1.0  # poly_decay exponent
    q: float = 0.25  # exp_decay rate (powers of ten)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown testbed kind {self.kind!r}")
        if self.rank < 1:
            raise ValueError("rank must be positive")

    def label(self) -> str:
        if self.kind == "low_rank_plus_noise":
            return f"lrpn(R={self.rank},eps={self.eps:g})"
        if self.kind == "poly_decay":
            return f"poly(R={self.rank},p={self.p:g})"
        return f"exp(R={self.rank},q={self.q:g})"


def spectrum_values(spec: TestbedSpectrum, n: int) -> np.ndarray:
    """Diagonal entries: nonincreasing, positive, with R leading ones."""
    if n < spec.rank:
        raise ValueError(f"need n >= R, got n={n}, R={spec.rank}")
    vals = np.ones(n)
    tail = np.arange(spec.rank + 1, n + 1, dtype=np.float64)
    if spec.kind == "low_rank_plus_noise":
        if not 0 < spec.eps <= 1:
            raise ValueError("eps must be in (0, 1]")
        vals[spec.rank:] = spec.eps
    elif spec.kind == "poly_decay":
        if spec.p <= 0:
            raise ValueError("p must be positive")
        vals[spec.rank:] = (tail - spec.rank) ** (-spec.p)
    else:
        if spec.q <= 0:
            raise ValueError("q must be positive")
        vals[spec.rank:] = 10.0 ** (-spec.q * (tail - spec.rank))
    return vals


def testbed_generate(spec: TestbedSpectrum, n: int, *, sparse: bool = False):
    """Diagonal test matrix for the spectrum, dense by default."""
    vals = spectrum_values(spec, n)
    if sparse:
        return sp.csr_array(sp.diags_array(vals))
    return np.asfortranarray(np.diag(vals))


def default_testbed() -> list[TestbedSpectrum]:
    """The twelve-spectrum suite used by the error-ratio experiments."""
    specs = [TestbedSpectrum("low_rank_plus_noise", eps=e) for e in (1e-1, 1e-2, 1e-3, 1e-4)]
    specs += [TestbedSpectrum("poly_decay", p=p) for p in (0.5, 1.0, 2.0, 3.0)]
    specs += [TestbedSpectrum("exp_decay", q=q) for q in (0.1, 0.25, 0.5, 1.0)]
    return specs
