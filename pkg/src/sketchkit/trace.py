"""Stochastic trace estimation and the quantum partition-function driver.

Implements the Girard-Hutchinson estimator, its variance-reduced
NA-Hutch++ refinement built on a generalized Nystrom approximation,
a sparse transverse-field Ising Hamiltonian, a Taylor-based matrix
exponential action, and the experiment loop that reproduces the
partition-function study at desk scale.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core.rng import RngStream, derive_seed
from .rand_nla import gen_nystrom_outer

__all__ = [
    "MatvecOracle",
    "girard_hutchinson",
    "na_hutch_pp",
    "TfimHamiltonian",
    "tfim_hamiltonian",
    "expm_matvec",
    "partition_function_experiment",
    "TRACE_CSV_SCHEMA",
]

TRACE_CSV_SCHEMA = (
    "estimator",
    "family",
    "ell",
    "h",
    "beta",
    "t",
    "trial",
    "estimate",
    "reference",
    "rel_error",
    "matvecs",
)


class MatvecOracle:
    """Matrix access through counted matrix-vector products.

    Wraps a pair of block-apply callables (forward and adjoint); the
    counter increments once per column applied and is lock-protected
    so trial workers can share an oracle safely.
    """

    def __init__(self, apply, apply_adjoint, shape):
        self._apply = apply
        self._apply_adjoint = apply_adjoint
        self.shape = tuple(shape)
        self._count = 0
        self._lock = threading.Lock()

    @classmethod
    def from_matrix(cls, a) -> "MatvecOracle":
        a = a if sp.issparse(a) else np.asarray(a)
        ah = a.conj().T
        return cls(lambda v: a @ v, lambda v: ah @ v, a.shape)

    @classmethod
    def from_eig(cls, u: np.ndarray, w: np.ndarray) -> "MatvecOracle":
        """Oracle for the self-adjoint matrix U diag(w) U*."""
        def apply(v):
            return u @ (w[:, None] * (u.conj().T @ np.atleast_2d(v.T).T))
        return cls(apply, apply, (u.shape[0], u.shape[0]))

    @property
    def n(self) -> int:
        return self.shape[0]

    @property
    def matvecs(self) -> int:
        return self._count

    def reset_matvecs(self) -> None:
        with self._lock:
            self._count = 0

    def _charge(self, v) -> int:
        cols = 1 if np.ndim(v) == 1 else np.shape(v)[1]
        with self._lock:
            self._count += cols
        return cols

    def matmat(self, v):
        self._charge(v)
        return np.asarray(self._apply(v))

    def adjoint_matmat(self, v):
        self._charge(v)
        return np.asarray(self._apply_adjoint(v))

    def adjoint(self) -> "MatvecOracle":
        """Adjoint view sharing this oracle's counter."""
        twin = MatvecOracle(self._apply_adjoint, self._apply, (self.shape[1], self.shape[0]))
        twin._lock = self._lock
        twin._charge = self._charge  # share the count
        return twin

    def verify_linearity(self, seed: int = 0, tol: float = 1e-10) -> None:
        """Check A(ax + by) = a Ax + b Ay on random triples."""
        rng = RngStream(seed, ("linearity",)).generator()
        n = self.shape[1]
        x, y = rng.standard_normal((2, n))
        a, b = rng.standard_normal(2)
        lhs = self._apply(a * x + b * y)
        rhs = a * np.asarray(self._apply(x)) + b * np.asarray(self._apply(y))
        scale = max(np.linalg.norm(rhs), 1e-300)
        if np.linalg.norm(np.asarray(lhs) - rhs) > tol * scale:
            raise ValueError("oracle fails the linearity check")


def _as_oracle(a) -> MatvecOracle:
    return a if isinstance(a, MatvecOracle) else MatvecOracle.from_matrix(a)


def girard_hutchinson(oracle, t: int, tm_factory, seed: int = 0) -> float:
    """Basic trace estimator tr(Omega* A Omega) with t matvecs.

    Unbiased for any isotropic test matrix; `tm_factory(d, k, seed)`
    supplies the probe operator.
    """
    if t <= 0:
        raise ValueError(f"need a positive probe count, got t={t}")
    oracle = _as_oracle(oracle)
    tm = tm_factory(oracle.n, t, seed)
    probes = tm.materialize()
    y = oracle.matmat(probes)
    return float(np.real(np.vdot(probes, y)))


def na_hutch_pp(oracle, t: int, tm_factory, seed: int = 0) -> float:
    """Variance-reduced trace estimation: tr(A_hat) + H_{t/2}(A - A_hat).

    A_hat is a rank-(t/6) generalized Nystrom approximation built from
    sketches of width t/6 and t/3; the remaining t/2 matvecs drive the
    residual Girard-Hutchinson correction, whose probes hit A once
    each and reuse the cached factors of A_hat.  Exactly t matvecs in
    total, and the estimate is unbiased.
    """
    oracle = _as_oracle(oracle)
    if t % 6:
        warnings.warn(f"t={t} is not divisible by 6; rounding sketch sizes down")
    k, p = t // 6, t // 3
    if k < 1:
        raise ValueError(f"need t >= 6, got t={t}")
    m = t - k - p
    n = oracle.n
    tm_omega = tm_factory(n, k, derive_seed(seed, 1))
    tm_psi = tm_factory(n, p, derive_seed(seed, 2))
    approx = gen_nystrom_outer(oracle, k, p, tm_omega, tm_psi)
    tm_resid = tm_factory(n, m, derive_seed(seed, 3))
    probes = tm_resid.materialize()
    y = oracle.matmat(probes)
    quad_full = np.vdot(probes, y)
    left = probes.conj().T @ approx.f  # m x r
    right = approx.g.conj().T @ probes  # r x m
    quad_low = np.einsum("ij,ji->", left, right)
    return float(np.real(approx.trace() + quad_full - quad_low))


@dataclass
class TfimHamiltonian:
    """Transverse-field Ising Hamiltonian on a periodic chain."""

    sites: int
    h: float
    matrix: sp.csr_array = field(repr=False)

    @property
    def dim(self) -> int:
        return 2**self.sites


def tfim_hamiltonian(ell: int, h: float) -> TfimHamiltonian:
    """Assemble H = -sum_i Z_i Z_{i+1} - h sum_i X_i with periodic boundary.

    Site 1 acts on the most significant qubit.  The ZZ terms give the
    diagonal; each X term couples bit-flip pairs with weight -h.
    """
    if not 2 <= ell <= 24:
        raise ValueError(f"site count must be in [2, 24], got {ell}")
    n = 2**ell
    idx = np.arange(n, dtype=np.int64)
    # spin on site i (1-based): +1 when the bit is 0
    spins = 1.0 - 2.0 * ((idx[:, None] >> (ell - 1 - np.arange(ell))[None, :]) & 1)
    diag = -(spins * np.roll(spins, -1, axis=1)).sum(axis=1)
    rows = [idx]
    cols = [idx]
    vals = [diag]
    if h != 0.0:
        for i in range(ell):
            mask = 1 << (ell - 1 - i)
            rows.append(idx)
            cols.append(idx ^ mask)
            vals.append(np.full(n, -float(h)))
    mat = sp.csr_array(
        sp.coo_array(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )
    )
    mat.sum_duplicates()
    mat.sort_indices()
    return TfimHamiltonian(sites=ell, h=float(h), matrix=mat)


def expm_matvec(h_mat, beta: float, shift: float, v, *, degree_cap: int = 2000):
    """Apply exp(-beta (H + shift I)) to a block of vectors.

    Uses a truncated Taylor expansion with scaling-and-squaring: the
    operator is split into 2^s substeps of 1-norm at most one, and each
    substep accumulates Taylor terms until they fall below roundoff.
    """
    if beta <= 0:
        raise ValueError(f"inverse temperature must be positive, got {beta}")
    v = np.asarray(v, dtype=np.result_type(v, np.float64))
    squeeze = v.ndim == 1
    if squeeze:
        v = v[:, None]
    n = h_mat.shape[0]
    if v.shape[0] != n:
        raise ValueError(f"block has {v.shape[0]} rows, expected {n}")

    scaled = beta * (h_mat + shift * sp.identity(n, format="csr"))
    norm1 = float(np.abs(scaled).sum(axis=0).max()) if scaled.nnz else 0.0
    steps = 1 << max(0, int(np.ceil(np.log2(norm1)))) if norm1 > 1.0 else 1
    sub = scaled * (1.0 / steps)

    out = v.astype(np.float64 if not np.iscomplexobj(v) else np.complex128, copy=True)
    for _ in range(steps):
        term = out.copy()
        acc = out
        for j in range(1, degree_cap + 1):
            term = -(sub @ term) / j
            acc = acc + term
            if np.linalg.norm(term) <= 1e-16 * np.linalg.norm(acc):
                break
        else:
            raise RuntimeError(f"Taylor series did not converge within degree {degree_cap}")
        out = acc
    return out[:, 0] if squeeze else out


def partition_function_experiment(
    ell: int,
    h: float,
    beta: float,
    t_grid,
    estimator: str,
    tm_factory,
    trials: int,
    seed: int = 0,
    family: str = "",
    expm_mode: str = "eig",
):
    """Estimate Z(beta) = tr exp(-beta H) for the TFIM and record errors.

    The reference Z comes from a full dense eigendecomposition (hence
    the ell <= 14 guard).  Estimators see the shifted psd operator
    exp(-beta (H + b I)) with b = (1 + h) * ell; the shift cancels in
    the relative error and is removed from the reported values as an
    exp(beta b) factor.  Rows with t <= 0 are emitted with NaN
    estimates as invalid markers.

    Returns a list of CSV-ready dicts following TRACE_CSV_SCHEMA.
    """
    if ell > 14:
        raise ValueError("exact reference requires ell <= 14")
    if estimator not in ("gh", "na-hutch++"):
        raise ValueError(f"unknown estimator {estimator!r}")
    if expm_mode not in ("eig", "taylor"):
        raise ValueError(f"unknown expm mode {expm_mode!r}")

    ham = tfim_hamiltonian(ell, h)
    b_shift = (1.0 + h) * ell
    w, u = np.linalg.eigh(ham.matrix.toarray())
    shifted_eigs = np.exp(-beta * (w + b_shift))
    reference_shifted = float(shifted_eigs.sum())
    unshift = np.exp(min(beta * b_shift, 709.0))

    rows = []
    for t in t_grid:
        for trial in range(trials):
            if t <= 0:
                rows.append(
                    {
                        "estimator": estimator,
                        "family": family,
                        "ell": ell,
                        "h": h,
                        "beta": beta,
                        "t": t,
                        "trial": trial,
                        "estimate": float("nan"),
                        "reference": reference_shifted * unshift,
                        "rel_error": float("nan"),
                        "matvecs": 0,
                    }
                )
                continue
            if expm_mode == "eig":
                oracle = MatvecOracle.from_eig(u, shifted_eigs)
            else:
                oracle = MatvecOracle(
                    lambda v: expm_matvec(ham.matrix, beta, b_shift, v),
                    lambda v: expm_matvec(ham.matrix, beta, b_shift, v),
                    (ham.dim, ham.dim),
                )
            trial_seed = derive_seed(seed, t, trial)
            if estimator == "gh":
                est = girard_hutchinson(oracle, t, tm_factory, trial_seed)
            else:
                est = na_hutch_pp(oracle, t, tm_factory, trial_seed)
            rows.append(
                {
                    "estimator": estimator,
                    "family": family,
                    "ell": ell,
                    "h": h,
                    "beta": beta,
                    "t": t,
                    "trial": trial,
                    "estimate": est * unshift,
                    "reference": reference_shifted * unshift,
                    "rel_error": abs(est - reference_shifted) / reference_shifted,
                    "matvecs": oracle.matvecs,
                }
            )
    return rows
