"""Structured random test matrices behind one sketching-operator interface."""

from .base import ExplicitTM, TestMatrix, entry_sample
from .gaussian import GaussianTM
from .khatri_rao import (
    KR_BASE_DISTRIBUTIONS,
    KhatriRaoTM,
    kr_fourth_moment_constant,
    kron_inner,
)
from .rtt import SparseRttTM, dct2_ortho, dft_unitary, wht
from .sparse import SparseColTM, SparseIIDTM, SparseStackTM, SparseUniformTM

__all__ = [
    "ExplicitTM",
    "TestMatrix",
    "entry_sample",
    "GaussianTM",
    "KR_BASE_DISTRIBUTIONS",
    "KhatriRaoTM",
    "kr_fourth_moment_constant",
    "kron_inner",
    "SparseRttTM",
    "dct2_ortho",
    "dft_unitary",
    "wht",
    "SparseColTM",
    "SparseIIDTM",
    "SparseStackTM",
    "SparseUniformTM",
]


def apply_right(tm: TestMatrix, a):
    """Functional form of tm.apply_right (A -> A Omega)."""
    return tm.apply_right(a)


def apply_adjoint(tm: TestMatrix, b):
    """Functional form of tm.apply_adjoint (B -> Omega* B)."""
    return tm.apply_adjoint(b)


def materialize(tm: TestMatrix):
    """Functional form of tm.materialize()."""
    return tm.materialize()
