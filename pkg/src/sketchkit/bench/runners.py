"""Experiment runners behind the CLI subcommands.

Each runner returns (rows, schema) ready for the CSV writer.  Rows are
generated in deterministic grid order with per-trial seeds derived
from the root seed, so identical configurations reproduce identical
output regardless of worker count.
"""

from __future__ import annotations

import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.sparse as sp

from ..core.io import read_matrix_market
from ..core.rng import RngStream, derive_seed
from ..diagnostics import adversarial_Q, injectivity_dilation, kronecker_gaussian_subspace
from ..rand_nla import (
    gen_nystrom_outer,
    gen_nystrom_svd,
    matrix_recovery,
    nystrom_psd,
    rsvd,
    sketch_and_solve,
)
from ..trace import TRACE_CSV_SCHEMA, partition_function_experiment
from .config import ConfigError, make_family_factory
from .testbed import TestbedSpectrum, default_testbed, spectrum_values, testbed_generate

__all__ = [
    "worker_count",
    "run_error_ratio",
    "run_timing",
    "run_lowrank",
    "run_lsq",
    "run_nystrom",
    "run_recover",
    "run_osi_diag",
    "run_trace",
    "run_testbed",
    "toeplitz_basis",
    "toeplitz_project",
    "ERROR_RATIO_SCHEMA",
    "TIMING_SCHEMA",
]

ERROR_RATIO_SCHEMA = (
    "matrix",
    "kind",
    "n",
    "k",
    "family",
    "trial",
    "err_structured",
    "err_gaussian",
    "ratio",
    "exact_floor",
)

TIMING_SCHEMA = ("family", "n", "k", "zeta", "xi", "reps", "median_seconds", "machine")

# both approximations at working precision: the ratio is 0/0, reported as 1
_RATIO_FLOOR = 1e-13


def worker_count() -> int:
    """Worker cap from SKETCHKIT_THREADS (default 1)."""
    raw = os.environ.get("SKETCHKIT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _pmap(fn, items):
    n_workers = worker_count()
    items = list(items)
    if n_workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(fn, items))


def _dense(a) -> np.ndarray:
    return a.toarray() if sp.issparse(a) else np.asarray(a)


def frobenius_error(a, approx: np.ndarray) -> float:
    """||A - A_hat||_F by direct dense difference."""
    return float(np.linalg.norm(_dense(a) - approx, "fro"))


def run_error_ratio(
    n: int,
    k_grid,
    trials: int,
    seed: int = 0,
    family: str = "sparsestack",
    family_kwargs: dict | None = None,
    spectra=None,
):
    """RSVD error ratio structured / Gaussian on the diagonal testbed.

    Paired design: each (spectrum, k, trial) cell fixes the input
    matrix and draws independent structured and Gaussian sketches from
    seeds derived off the same root.  When both errors sit at working
    precision the ratio is reported as 1 and flagged.
    """
    spectra = default_testbed() if spectra is None else spectra
    structured = make_family_factory(family, **(family_kwargs or {}))
    gaussian = make_family_factory("gaussian")

    cells = [
        (spec, k, trial) for spec in spectra for k in k_grid for trial in range(trials)
    ]

    def one(cell):
        spec, k, trial = cell
        a = testbed_generate(spec, n, sparse=True)
        a_dense = a.toarray()
        norm_a = np.linalg.norm(spectrum_values(spec, n))
        fac_s = rsvd(a, k, structured(n, k, derive_seed(seed, spec.label(), k, trial, 1)))
        fac_g = rsvd(a, k, gaussian(n, k, derive_seed(seed, spec.label(), k, trial, 2)))
        err_s = float(np.linalg.norm(a_dense - fac_s.matrix(), "fro"))
        err_g = float(np.linalg.norm(a_dense - fac_g.matrix(), "fro"))
        floor = _RATIO_FLOOR * max(norm_a, 1e-300)
        exact = err_s <= floor and err_g <= floor
        ratio = 1.0 if exact or norm_a == 0.0 else err_s / max(err_g, 1e-300)
        return {
            "matrix": spec.label(),
            "kind": spec.kind,
            "n": n,
            "k": k,
            "family": family,
            "trial": trial,
            "err_structured": err_s,
            "err_gaussian": err_g,
            "ratio": ratio,
            "exact_floor": int(exact),
        }

    return _pmap(one, cells), ERROR_RATIO_SCHEMA


def run_timing(
    n: int,
    k: int,
    families,
    reps: int = 10,
    warmup: int = 2,
    seed: int = 0,
    zeta: int = 4,
    xi: int | None = None,
):
    """Median wall-clock seconds to form A Omega for an n-by-n dense input."""
    if n < 1 or k < 1:
        raise ConfigError(f"timing needs positive sizes, got n={n}, k={k}")
    if reps < 10:
        raise ConfigError("timing uses at least 10 measured reps")
    machine = f"{platform.platform()}|numpy-{np.__version__}"
    rng = RngStream(seed, ("timing-input",)).generator()
    a = rng.standard_normal((n, n))
    rows = []
    for family in families:
        factory = make_family_factory(family, zeta=zeta, xi=xi)
        times = []
        for rep in range(warmup + reps):
            t0 = time.perf_counter()
            tm = factory(n, k, derive_seed(seed, family, rep))
            tm.apply_right(a)
            elapsed = time.perf_counter() - t0
            if rep >= warmup:
                times.append(elapsed)
        rows.append(
            {
                "family": family,
                "n": n,
                "k": k,
                "zeta": zeta,
                "xi": -1 if xi is None else xi,
                "reps": reps,
                "median_seconds": float(np.median(times)),
                "machine": machine,
            }
        )
    return rows, TIMING_SCHEMA


def _load_source(source: str, n: int, d: int):
    """Resolve an input matrix from 'file.mtx' or a synthetic spectrum name."""
    if source.endswith(".mtx"):
        return read_matrix_market(source), os.path.basename(source)
    for spec in default_testbed():
        if spec.label() == source or spec.kind == source:
            if n != d:
                raise ConfigError("synthetic testbed matrices are square; set n = d")
            return testbed_generate(spec, n, sparse=True), spec.label()
    raise ConfigError(f"unknown source {source!r}: give a .mtx path or a testbed kind")


def _pad_for_family(a, family: str, d0: int):
    """Zero-pad both dimensions to powers of d0 for Khatri-Rao sketches."""
    if family != "khatri-rao":
        return a, a.shape
    n, d = a.shape
    def up(v):
        ell = 1
        while d0**ell < v:
            ell += 1
        return d0**ell
    n2, d2 = up(n), up(d)
    if (n2, d2) == (n, d):
        return a, (n, d)
    if sp.issparse(a):
        out = sp.lil_array((n2, d2), dtype=a.dtype)
        out[:n, :d] = a.tolil()
        return sp.csr_array(out), (n, d)
    out = np.zeros((n2, d2), dtype=np.asarray(a).dtype)
    out[:n, :d] = a
    return out, (n, d)


LOWRANK_SCHEMA = (
    "source", "algo", "family", "n", "d", "k", "p", "trial",
    "err_fro", "err_rel", "seconds",
)


def run_lowrank(
    source: str,
    algo: str,
    k: int,
    p: int | None,
    trials: int,
    seed: int = 0,
    n: int = 1024,
    d: int | None = None,
    family: str = "gaussian",
    family_kwargs: dict | None = None,
):
    """Low-rank approximation error sweep for one input matrix."""
    if algo not in ("rsvd", "gn", "gnsvd"):
        raise ConfigError(f"unknown algo {algo!r}; choose rsvd, gn, or gnsvd")
    d = n if d is None else d
    a, label = _load_source(source, n, d)
    kwargs = dict(family_kwargs or {})
    d0 = kwargs.pop("d0", 2)
    padded, (n0, d0_shape) = _pad_for_family(a, family, d0)
    n_pad, d_pad = padded.shape
    factory = make_family_factory(family, d0=d0, **kwargs)
    gauss = make_family_factory("gaussian")
    if p is None:
        p_eff = int(np.ceil(1.5 * k))
        if family == "sparsestack":
            zeta = kwargs.get("zeta", 4)
            p_eff += (-p_eff) % zeta  # default left width must fit the block structure
    else:
        p_eff = p
    norm_a = float(np.linalg.norm(_dense(a)))

    rows = []
    for trial in range(trials):
        s1 = derive_seed(seed, "lowrank", trial, 1)
        s2 = derive_seed(seed, "lowrank", trial, 2)
        t0 = time.perf_counter()
        if algo == "rsvd":
            fac = rsvd(padded, k, factory(d_pad, k, s1))
        else:
            tm_o = factory(d_pad, k, s1)
            tm_p = gauss(n_pad, p_eff, s2) if family == "khatri-rao" else factory(n_pad, p_eff, s2)
            fn = gen_nystrom_outer if algo == "gn" else gen_nystrom_svd
            fac = fn(padded, k, p_eff, tm_o, tm_p)
        seconds = time.perf_counter() - t0
        approx = fac.matrix()[:n0, :d0_shape]
        err = frobenius_error(a, approx)
        rows.append(
            {
                "source": label,
                "algo": algo,
                "family": family,
                "n": n0,
                "d": d0_shape,
                "k": k,
                "p": p_eff if algo != "rsvd" else -1,
                "trial": trial,
                "err_fro": err,
                "err_rel": err / max(norm_a, 1e-300),
                "seconds": seconds,
            }
        )
    return rows, LOWRANK_SCHEMA


LSQ_SCHEMA = ("n", "d", "m", "p", "family", "trial", "residual", "optimal", "ratio")


def run_lsq(
    n: int,
    d: int,
    m: int,
    p: int,
    trials: int,
    noise: float = 0.1,
    seed: int = 0,
    family: str = "sparsestack",
    family_kwargs: dict | None = None,
):
    """Sketch-and-solve residual versus the exact least-squares optimum."""
    factory = make_family_factory(family, **(family_kwargs or {}))
    rows = []
    for trial in range(trials):
        rng = RngStream(derive_seed(seed, "lsq", trial), ("data",)).generator()
        a = rng.standard_normal((n, d))
        x0 = rng.standard_normal((d, m))
        b_clean = a @ x0
        q, _ = np.linalg.qr(a)
        e = rng.standard_normal((n, m))
        e -= q @ (q.T @ e)
        e *= noise * np.linalg.norm(b_clean) / max(np.linalg.norm(e), 1e-300)
        b = b_clean + e
        opt = float(np.linalg.norm(e))
        xs = sketch_and_solve(a, b, factory(n, p, derive_seed(seed, "lsq", trial, "tm")))
        res = float(np.linalg.norm(a @ xs - b))
        rows.append(
            {
                "n": n, "d": d, "m": m, "p": p, "family": family, "trial": trial,
                "residual": res, "optimal": opt,
                "ratio": res / max(opt, 1e-300),
            }
        )
    return rows, LSQ_SCHEMA


NYSTROM_SCHEMA = (
    "kind", "n", "k", "family", "trial", "err_nuclear", "err_fro", "opt_nuclear",
)


def run_nystrom(
    kind: str,
    n: int,
    k: int,
    trials: int,
    seed: int = 0,
    family: str = "sparsestack",
    family_kwargs: dict | None = None,
):
    """Psd Nystrom approximation error on a diagonal testbed spectrum."""
    spec = None
    for candidate in default_testbed():
        if candidate.label() == kind or candidate.kind == kind:
            spec = candidate
            break
    if spec is None:
        raise ConfigError(f"unknown spectrum kind {kind!r}")
    vals = spectrum_values(spec, n)
    a = sp.csr_array(sp.diags_array(vals))
    opt_nuclear = float(vals[k:].sum())
    factory = make_family_factory(family, **(family_kwargs or {}))
    rows = []
    for trial in range(trials):
        fac = nystrom_psd(a, k, factory(n, k, derive_seed(seed, "nystrom", trial)))
        diff = a.toarray() - fac.matrix()
        eigs = np.linalg.eigvalsh((diff + diff.T) / 2)
        rows.append(
            {
                "kind": spec.label(), "n": n, "k": k, "family": family, "trial": trial,
                "err_nuclear": float(np.abs(eigs).sum()),
                "err_fro": float(np.linalg.norm(diff, "fro")),
                "opt_nuclear": opt_nuclear,
            }
        )
    return rows, NYSTROM_SCHEMA


def toeplitz_basis(n: int) -> list[np.ndarray]:
    """Indicator-diagonal basis of the n x n Toeplitz family (d = 2n - 1)."""
    basis = []
    for offset in range(-(n - 1), n):
        basis.append(np.asfortranarray(np.eye(n, k=offset)))
    return basis


def toeplitz_project(b: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the Toeplitz family: average each diagonal."""
    n = b.shape[0]
    out = np.zeros_like(b)
    for offset in range(-(n - 1), n):
        mask = np.eye(n, k=offset, dtype=bool)
        out[mask] = b[mask].mean()
    return out


RECOVER_SCHEMA = ("n", "d", "p", "trial", "residual", "optimal", "ratio")


def run_recover(
    n: int,
    p: int,
    trials: int,
    noise: float = 0.1,
    seed: int = 0,
):
    """Toeplitz matrix recovery from bilinear queries, with planted optimum."""
    basis = toeplitz_basis(n)
    d = len(basis)
    rows = []
    for trial in range(trials):
        rng = RngStream(derive_seed(seed, "recover", trial), ("target",)).generator()
        coeffs = rng.standard_normal(d)
        target = sum(c * m for c, m in zip(coeffs, basis))
        pert = rng.standard_normal((n, n))
        pert -= toeplitz_project(pert)
        tnorm = np.linalg.norm(target)
        pert *= noise * tnorm / max(np.linalg.norm(pert), 1e-300)
        hidden = target + pert
        optimal = float(np.linalg.norm(pert))
        _, recovered = matrix_recovery(
            lambda x, y: y @ hidden @ x, basis, p,
            seed=derive_seed(seed, "recover", trial, "probes"),
        )
        res = float(np.linalg.norm(hidden - recovered))
        rows.append(
            {
                "n": n, "d": d, "p": p, "trial": trial,
                "residual": res, "optimal": optimal,
                "ratio": res / max(optimal, 1e-300),
            }
        )
    return rows, RECOVER_SCHEMA


OSI_SCHEMA = ("family", "r", "k", "trial", "alpha", "beta")


def run_osi_diag(
    family: str,
    r: int,
    k: int,
    trials: int,
    d: int | None = None,
    subspace: str = "adversarial",
    seed: int = 0,
    family_kwargs: dict | None = None,
):
    """Per-trial injectivity/dilation rows for one family configuration."""
    d = r if d is None else d
    if d < r:
        raise ConfigError(f"need d >= r, got d={d}, r={r}")
    factory = make_family_factory(family, **(family_kwargs or {}))
    use_sparse = hasattr(factory(d, k, 0), "matrix") and r > 400
    if subspace == "adversarial":
        q = adversarial_Q(d, r, format="sparse" if use_sparse else "dense")
    elif subspace == "kron_gaussian":
        ell = int(round(np.log2(d)))
        if 2**ell != d:
            raise ConfigError("kron_gaussian subspace needs d = 2^ell")
        q = kronecker_gaussian_subspace(2, ell, r, seed=derive_seed(seed, "sub"))
    else:
        raise ConfigError(f"unknown subspace {subspace!r}")

    def one(trial):
        tm = factory(d, k, derive_seed(seed, "osi", trial))
        alpha, beta = injectivity_dilation(tm, q)
        return {
            "family": family, "r": r, "k": k, "trial": trial,
            "alpha": alpha, "beta": beta,
        }

    return _pmap(one, range(trials)), OSI_SCHEMA


def run_trace(
    ell: int,
    h: float,
    beta: float,
    t_grid,
    estimators,
    trials: int,
    seed: int = 0,
    family: str = "khatri-rao",
    family_kwargs: dict | None = None,
    expm_mode: str = "eig",
):
    """Partition-function estimation error sweep."""
    kwargs = dict(family_kwargs or {})
    kwargs.setdefault("base", "real_spherical")
    factory = make_family_factory(family, **kwargs)
    rows = []
    for estimator in estimators:
        rows.extend(
            partition_function_experiment(
                ell, h, beta, t_grid, estimator, factory, trials,
                seed=derive_seed(seed, estimator), family=family,
                expm_mode=expm_mode,
            )
        )
    return rows, TRACE_CSV_SCHEMA


TESTBED_SCHEMA = ("kind", "label", "n", "index", "value")


def run_testbed(n: int):
    """Diagonal entries of the default twelve-spectrum testbed."""
    rows = []
    for spec in default_testbed():
        vals = spectrum_values(spec, n)
        for i, v in enumerate(vals):
            rows.append(
                {"kind": spec.kind, "label": spec.label(), "n": n, "index": i, "value": float(v)}
            )
    return rows, TESTBED_SCHEMA
