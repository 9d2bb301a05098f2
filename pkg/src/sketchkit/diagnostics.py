"""OSI measurement harness and brute-force moment oracles.

Estimates injectivity and dilation (the extreme squared singular
values of Omega* Q) for any test matrix against a chosen orthonormal
subspace, certifies an empirical injectivity level from repeated
trials, and validates the CountSketch / SparseCol moment computations
by exhaustive enumeration.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core.rng import RngStream, derive_seed
from .sketch.base import TestMatrix
from .sketch.khatri_rao import KhatriRaoTM

__all__ = [
    "injectivity_dilation",
    "adversarial_Q",
    "coherence",
    "kronecker_gaussian_subspace",
    "OsiReport",
    "osi_certify",
    "isotropy_mc",
    "IsotropyResult",
    "MomentOracleResult",
    "countsketch_moment_oracle",
    "sparsecol_moment_oracle",
    "collision_free_probability",
    "OSI_CSV_SCHEMA",
]

OSI_CSV_SCHEMA = ("family", "r", "k", "trial", "alpha", "beta")

_ENUMERATION_BUDGET = 10**7


def _check_orthonormal(q, tol: float = 1e-8) -> int:
    r = q.shape[1]
    gram = (q.conj().T @ q) - (sp.identity(r) if sp.issparse(q) else np.eye(r))
    defect = spla.norm(gram) if sp.issparse(gram) else np.linalg.norm(gram)
    if defect > tol * np.sqrt(max(r, 1)):
        raise ValueError(f"Q is not orthonormal: ||Q*Q - I||_F = {defect:.3e}")
    return r


def _sparse_extreme_eigs(gram: sp.csc_array, r: int) -> tuple[float, float, float]:
    """(lambda_min, lambda_max, trace) of a sparse psd Gram matrix.

    The smallest eigenvalue is found by shift-inverted Lanczos with a
    matrix-free conjugate-gradient solve, which avoids the fill-in of a
    direct factorization on large unstructured Gram matrices.
    """
    diag = gram.diagonal().real
    trace = float(diag.sum())
    if r <= 400:
        eigs = np.linalg.eigvalsh(gram.toarray())
        return float(eigs[0]), float(eigs[-1]), trace
    lam_max = float(spla.eigsh(gram, k=1, which="LA", return_eigenvectors=False)[0])
    sigma = -1e-4 * max(lam_max, 1.0)
    shifted = sp.csc_array(gram - sigma * sp.identity(r, format="csc"))

    def solve(b):
        x, info = spla.cg(shifted, b, rtol=1e-10, atol=0.0, maxiter=10 * r)
        if info != 0:
            x = spla.spsolve(shifted, b)
        return x

    op_inv = spla.LinearOperator((r, r), matvec=solve)
    lam_min = float(
        spla.eigsh(
            gram, k=1, sigma=sigma, which="LM", OPinv=op_inv, return_eigenvectors=False
        )[0]
    )
    return lam_min, lam_max, trace


def _subspace_spectrum(tm: TestMatrix, q) -> tuple[float, float, float]:
    """(alpha, beta, mean squared singular value) of Omega* Q."""
    r = _check_orthonormal(q)
    if sp.issparse(q):
        if not hasattr(tm, "matrix"):
            q = q.toarray()
        else:
            b = sp.csc_array(tm.matrix.conj().T @ q)
            gram = sp.csc_array(b.conj().T @ b)
            lam_min, lam_max, trace = _sparse_extreme_eigs(gram, r)
            return max(lam_min, 0.0), max(lam_max, 0.0), trace / r
    b = tm.apply_adjoint(np.asarray(q))
    svals = np.linalg.svd(b, compute_uv=False)
    alpha = float(svals[-1] ** 2) if svals.size >= r else 0.0
    beta = float(svals[0] ** 2) if svals.size else 0.0
    return alpha, beta, float((svals**2).sum()) / r


def injectivity_dilation(tm: TestMatrix, q) -> tuple[float, float]:
    """Injectivity and dilation samples for one draw of the test matrix.

    Returns the extreme squared singular values of the k-by-r matrix
    Omega* Q, computed by applying the adjoint to the columns of the
    orthonormal matrix Q.  Sparse Q with a sparse test matrix routes
    through the r-by-r Gram matrix so large adversarial subspaces stay
    tractable.
    """
    alpha, beta, _ = _subspace_spectrum(tm, q)
    return alpha, beta


def adversarial_Q(d: int, r: int, format: str = "dense"):
    """The coordinate subspace [e_1 ... e_r]: coherence 1, worst case for sparse maps."""
    if r > d:
        raise ValueError(f"need r <= d, got r={r}, d={d}")
    if format == "sparse":
        return sp.csc_array(sp.eye(d, r))
    return np.eye(d, r)


def coherence(q) -> float:
    """Maximum squared row norm of an orthonormal matrix, in [r/d, 1]."""
    _check_orthonormal(q)
    if sp.issparse(q):
        return float(abs(q).power(2).sum(axis=1).max())
    return float((np.abs(q) ** 2).sum(axis=1).max())


def kronecker_gaussian_subspace(d0: int, ell: int, r: int, seed: int = 0) -> np.ndarray:
    """Orthonormalized span of r Kronecker products of iid Gaussian factors."""
    tm = KhatriRaoTM(d0, ell, r, "real_gaussian", seed=seed)
    q, _ = np.linalg.qr(tm.materialize())
    return q


@dataclass
class IsotropyResult:
    mean: float
    stderr: float
    trials: int

    @property
    def zscore(self) -> float:
        return abs(self.mean - 1.0) / max(self.stderr, 1e-300)


def isotropy_mc(tm: TestMatrix, trials: int, seed: int = 0, x=None) -> IsotropyResult:
    """Monte Carlo check of E ||Omega* x||^2 = ||x||^2 at a fixed unit vector."""
    if x is None:
        rng = RngStream(derive_seed(seed, tm.d), ("isotropy-direction",)).generator()
        x = rng.standard_normal(tm.d)
        if tm.field == "complex":
            x = x + 1j * rng.standard_normal(tm.d)
        x = x / np.linalg.norm(x)
    samples = tm.sample_adjoint_sqnorms(x, trials, seed)
    return IsotropyResult(
        mean=float(samples.mean()),
        stderr=float(samples.std(ddof=1) / np.sqrt(trials)),
        trials=trials,
    )


@dataclass
class OsiReport:
    """Per-trial injectivity/dilation samples with summary quantiles."""

    family: str
    subspace: str
    r: int
    k: int
    seed: int
    alphas: np.ndarray = field(repr=False)
    betas: np.ndarray = field(repr=False)
    certified_alpha: float = 0.0
    failure_quantile: float = 0.05
    isotropy_mean: float = float("nan")
    isotropy_stderr: float = float("nan")

    @property
    def trials(self) -> int:
        return len(self.alphas)

    def quantiles(self, which: str = "alpha") -> tuple[float, float, float]:
        data = self.alphas if which == "alpha" else self.betas
        q10, q50, q90 = np.quantile(data, [0.10, 0.50, 0.90])
        return float(q10), float(q50), float(q90)

    def validate(self) -> None:
        if np.any(self.alphas < 0) or np.any(self.alphas > self.betas + 1e-12):
            raise ValueError("need 0 <= alpha <= beta per trial")

    def rows(self):
        """CSV records following OSI_CSV_SCHEMA."""
        return [
            {
                "family": self.family,
                "r": self.r,
                "k": self.k,
                "trial": t,
                "alpha": float(self.alphas[t]),
                "beta": float(self.betas[t]),
            }
            for t in range(self.trials)
        ]


def osi_certify(
    tm_factory,
    d: int,
    r: int,
    k: int,
    trials: int,
    failure_quantile: float = 1.0 / 20.0,
    subspace="adversarial",
    seed: int = 0,
    family: str = "",
    isotropy_trials: int = 2000,
) -> OsiReport:
    """Estimate an empirical OSI certificate over repeated draws.

    The certified injectivity is the empirical `failure_quantile`
    quantile of the per-trial alpha samples, mirroring the 19/20
    probability level of the definition.  Includes a Monte Carlo
    isotropy check of the family.
    """
    if trials < 20:
        raise ValueError(f"need at least 20 trials, got {trials}")
    if isinstance(subspace, str):
        if subspace == "adversarial":
            sparse_ok = hasattr(tm_factory(d, k, 0), "matrix") and r > 400
            q = adversarial_Q(d, r, format="sparse" if sparse_ok else "dense")
        elif subspace == "kron_gaussian":
            ell = int(round(math.log2(d)))
            if 2**ell != d:
                raise ValueError("kron_gaussian subspace needs d = 2^ell")
            q = kronecker_gaussian_subspace(2, ell, r, seed=derive_seed(seed, "subspace"))
        else:
            raise ValueError(f"unknown subspace {subspace!r}")
        subspace_name = subspace
    else:
        q = subspace
        subspace_name = "user"

    alphas = np.empty(trials)
    betas = np.empty(trials)
    for t in range(trials):
        tm = tm_factory(d, k, derive_seed(seed, "osi-trial", t))
        alphas[t], betas[t], _ = _subspace_spectrum(tm, q)
    iso = isotropy_mc(tm_factory(d, k, 0), isotropy_trials, seed=derive_seed(seed, "iso"))
    report = OsiReport(
        family=family or type(tm_factory(d, k, 0)).__name__,
        subspace=subspace_name,
        r=r,
        k=k,
        seed=seed,
        alphas=alphas,
        betas=betas,
        certified_alpha=float(np.quantile(alphas, failure_quantile)),
        failure_quantile=failure_quantile,
        isotropy_mean=iso.mean,
        isotropy_stderr=iso.stderr,
    )
    report.validate()
    return report


@dataclass
class MomentOracleResult:
    """Exact enumeration of E[(tr(W M))^2] plus the reference quantities."""

    mom: float
    first_moment: np.ndarray
    closed_form: float | None
    bound: float

    def first_moment_is_identity(self, tol: float = 1e-12) -> bool:
        d = self.first_moment.shape[0]
        return bool(np.abs(self.first_moment - np.eye(d)).max() <= tol)


def _check_self_adjoint(m) -> np.ndarray:
    m = np.asarray(m)
    if m.shape[0] != m.shape[1] or np.abs(m - m.conj().T).max() > 1e-12 * max(
        1.0, np.abs(m).max()
    ):
        raise ValueError("M must be self-adjoint")
    return m


def countsketch_moment_oracle(d: int, b: int, m) -> MomentOracleResult:
    """Exact CountSketch second moment E[(tr(M Phi Phi*))^2] by enumeration.

    Enumerates all (2b)^d sign/placement assignments and checks the
    identity E[Phi Phi*] = I together with the moment bound
    (tr M)^2 + (2/b) ||M||_F^2.
    """
    m = _check_self_adjoint(m)
    if (2 * b) ** d > _ENUMERATION_BUDGET:
        raise ValueError(f"enumeration budget exceeded: (2b)^d = {(2 * b) ** d}")
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=d)))
    first = np.zeros((d, d), dtype=m.dtype)
    total = 0.0
    count = 0
    for buckets in itertools.product(range(b), repeat=d):
        s = np.asarray(buckets)
        mask = (s[:, None] == s[None, :]).astype(float)
        masked = m * mask
        t = np.einsum("ri,ij,rj->r", signs, masked, signs)
        total += float(np.real(t @ t.conj())) / len(signs)
        count += 1
        for row in signs:
            first += np.outer(row, row) * mask / len(signs)
    mom = total / count
    first /= count
    bound = float(np.real(np.trace(m)) ** 2 + (2.0 / b) * np.linalg.norm(m, "fro") ** 2)
    if mom > bound + 1e-12 * max(1.0, bound):
        raise AssertionError(f"CountSketch moment {mom} violates the bound {bound}")
    return MomentOracleResult(mom=mom, first_moment=first, closed_form=None, bound=bound)


def sparsecol_closed_form(d: int, xi: int, m) -> float:
    """Closed-form second moment of the SparseCol vector at k = 1.

    Derived from the four sign-pairing cases of the moment expansion:
    (d/xi) sum_i M_ii^2 plus the distinct-position pairings weighted by
    d (xi - 1) / (xi (d - 1)).
    """
    m = _check_self_adjoint(m)
    diag = np.real(np.diag(m))
    sum_diag_sq = float((diag**2).sum())
    tr = float(diag.sum())
    off = m - np.diag(np.diag(m))
    cross_diag = tr**2 - sum_diag_sq  # sum_{i != j} M_ii M_jj
    off_sq = float(np.real((off**2).sum()))  # sum_{i != j} M_ij^2
    off_abs = float((np.abs(off) ** 2).sum())  # sum_{i != j} |M_ij|^2
    if xi == 1:
        return (d / xi) * sum_diag_sq
    coeff = d * (xi - 1) / (xi * (d - 1))
    return (d / xi) * sum_diag_sq + coeff * (cross_diag + off_sq + off_abs)


def sparsecol_moment_oracle(d: int, xi: int, m) -> MomentOracleResult:
    """Exact SparseCol second moment E[(w* M w)^2] by enumeration at k = 1.

    Enumerates all C(d, xi) * 2^xi placement/sign outcomes, checks
    E[w w*] = I, and asserts agreement with the closed form.
    """
    m = _check_self_adjoint(m)
    n_outcomes = math.comb(d, xi) * 2**xi
    if n_outcomes > _ENUMERATION_BUDGET:
        raise ValueError(f"enumeration budget exceeded: {n_outcomes} outcomes")
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=xi)))
    scale = d / xi
    total = 0.0
    first = np.zeros((d, d), dtype=m.dtype)
    count = 0
    for subset in itertools.combinations(range(d), xi):
        idx = np.asarray(subset)
        sub = m[np.ix_(idx, idx)]
        t = scale * np.einsum("ri,ij,rj->r", signs, sub, signs)
        total += float(np.real(t @ t.conj())) / len(signs)
        for row in signs:
            w = np.zeros(d)
            w[idx] = row
            first += scale * np.outer(w, w) / len(signs)
        count += 1
    mom = total / count
    first /= count
    closed = sparsecol_closed_form(d, xi, m)
    scale_ref = max(1.0, abs(closed))
    if abs(mom - closed) > 1e-12 * scale_ref:
        raise AssertionError(f"enumeration {mom} disagrees with closed form {closed}")
    tr = float(np.real(np.trace(m)))
    diag_sq = float((np.real(np.diag(m)) ** 2).sum())
    bound = (d / xi) * diag_sq + 2.0 * ((xi - 1) / xi) * tr**2 + 4.0 * (
        (xi - 1) / xi
    ) * float(np.linalg.norm(m, "fro") ** 2)
    if mom > bound + 1e-12 * max(1.0, bound):
        raise AssertionError(f"SparseCol moment {mom} violates the relaxed bound {bound}")
    return MomentOracleResult(mom=mom, first_moment=first, closed_form=closed, bound=bound)


def collision_free_probability(r: int, b: int) -> float:
    """P{no bucket collision among r rows of a CountSketch with b buckets}."""
    if r > b:
        return 0.0
    return float(np.prod(1.0 - np.arange(r) / b))
