"""OSI harness, coherence, certification, and enumeration oracles."""

import numpy as np
import pytest

from sketchkit.diagnostics import (
    adversarial_Q,
    coherence,
    collision_free_probability,
    countsketch_moment_oracle,
    injectivity_dilation,
    isotropy_mc,
    kronecker_gaussian_subspace,
    osi_certify,
    sparsecol_closed_form,
    sparsecol_moment_oracle,
)
from sketchkit.core import write_csv
from sketchkit.sketch import ExplicitTM, GaussianTM, KhatriRaoTM, SparseStackTM, wht


class TestInjectivityDilation:
    def test_identity_embedding(self):
        rng = np.random.default_rng(0)
        q, _ = np.linalg.qr(rng.standard_normal((15, 6)))
        alpha, beta = injectivity_dilation(ExplicitTM(q), q)
        assert alpha == pytest.approx(1.0, abs=1e-10)
        assert beta == pytest.approx(1.0, abs=1e-10)

    def test_zero_block_annihilates(self):
        q = adversarial_Q(10, 3)
        omega = np.zeros((10, 5))
        omega[5:, :] = np.random.default_rng(1).standard_normal((5, 5))
        alpha, beta = injectivity_dilation(ExplicitTM(omega), q)
        assert alpha == 0.0

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError, match="orthonormal"):
            injectivity_dilation(GaussianTM(8, 4, seed=0), np.ones((8, 2)))

    def test_sparse_path_matches_dense(self):
        tm = SparseStackTM(600, 4, 250, seed=5)  # k = 1000
        q_sparse = adversarial_Q(600, 500, format="sparse")
        q_dense = adversarial_Q(600, 500)
        a_sparse, b_sparse = injectivity_dilation(tm, q_sparse)
        svals = np.linalg.svd(tm.apply_adjoint(q_dense), compute_uv=False)
        assert a_sparse == pytest.approx(float(svals[-1] ** 2), abs=1e-8)
        assert b_sparse == pytest.approx(float(svals[0] ** 2), abs=1e-8)


class TestAdversarialQ:
    def test_basis_columns(self):
        q = adversarial_Q(3, 2)
        assert np.array_equal(q, np.eye(3)[:, :2])

    def test_maximal_coherence(self):
        assert coherence(adversarial_Q(9, 4)) == 1.0

    def test_countsketch_collision_probability(self):
        # injectivity of a CountSketch collapses exactly when two of the
        # first r rows share a bucket; compare with the product formula
        r, b, trials = 16, 64, 400
        q = adversarial_Q(r, r)
        hits = 0
        for t in range(trials):
            tm = SparseStackTM(r, zeta=1, block_size=b, seed=t)
            alpha, _ = injectivity_dilation(tm, q)
            hits += alpha > 0.0
        p_free = collision_free_probability(r, b)
        sigma = np.sqrt(p_free * (1 - p_free) / trials)
        assert abs(hits / trials - p_free) <= 4 * sigma

    def test_r_larger_than_d_rejected(self):
        with pytest.raises(ValueError, match="r <= d"):
            adversarial_Q(3, 4)


class TestCoherence:
    def test_wht_columns_are_flat(self):
        q = wht(np.eye(16))[:, :5]
        assert coherence(q) == pytest.approx(5 / 16, abs=1e-12)

    def test_random_orthonormal_matches_row_scan(self):
        rng = np.random.default_rng(2)
        q, _ = np.linalg.qr(rng.standard_normal((256, 16)))
        value = coherence(q)
        direct = max(np.linalg.norm(q[i]) ** 2 for i in range(256))
        assert value == pytest.approx(direct, abs=1e-12)
        assert 16 / 256 < value < 1.0


class TestOsiCertify:
    def test_gaussian_certificate(self):
        report = osi_certify(
            lambda d, k, seed: GaussianTM(d, k, seed=seed), d=50, r=50, k=200,
            trials=100, seed=3, family="gaussian",
        )
        assert report.certified_alpha >= 0.2
        assert abs(report.isotropy_mean - 1.0) <= 4 * report.isotropy_stderr
        q10, q50, q90 = report.quantiles("alpha")
        assert q10 <= q50 <= q90

    def test_sparsestack_certificate_positive(self):
        report = osi_certify(
            lambda d, k, seed: SparseStackTM(d, 4, k // 4, seed=seed), d=100, r=100, k=200,
            trials=40, seed=4, family="sparsestack",
        )
        assert report.certified_alpha > 0.0

    def test_degenerate_k_below_r(self):
        report = osi_certify(
            lambda d, k, seed: GaussianTM(d, k, seed=seed), d=30, r=20, k=10,
            trials=20, seed=5,
        )
        assert report.certified_alpha == 0.0

    def test_requires_twenty_trials(self):
        with pytest.raises(ValueError, match="20 trials"):
            osi_certify(lambda d, k, seed: GaussianTM(d, k, seed=seed), 10, 5, 8, trials=10)

    def test_rows_serialize(self, tmp_path):
        report = osi_certify(
            lambda d, k, seed: GaussianTM(d, k, seed=seed), d=20, r=10, k=30,
            trials=20, seed=6, family="gaussian",
        )
        rows = report.rows()
        assert len(rows) == 20
        write_csv(rows, ("family", "r", "k", "trial", "alpha", "beta"), tmp_path / "r.csv")
        assert (tmp_path / "r.csv").read_text().count("\n") == 21


class TestIsotropyMc:
    def test_gaussian_isotropy(self):
        res = isotropy_mc(GaussianTM(64, 8, seed=7), trials=20000, seed=8)
        assert res.zscore <= 4.0


class TestMomentOracles:
    def test_countsketch_first_moment_identity(self):
        res = countsketch_moment_oracle(2, 1, np.eye(2))
        assert res.first_moment_is_identity()
        assert res.mom == pytest.approx(4.0, abs=1e-12)

    def test_countsketch_identity_bound(self):
        res = countsketch_moment_oracle(2, 2, np.eye(2))
        assert res.mom == pytest.approx(4.0, abs=1e-12)
        assert res.bound == pytest.approx(6.0, abs=1e-12)

    def test_countsketch_zero(self):
        assert countsketch_moment_oracle(2, 2, np.zeros((2, 2))).mom == 0.0

    def test_sparsecol_examples(self):
        res1 = sparsecol_moment_oracle(2, 1, np.eye(2))
        assert res1.mom == pytest.approx(4.0, abs=1e-12)
        assert res1.closed_form == pytest.approx(4.0, abs=1e-12)
        # at d = 2, xi = 2 the vector is (+-1, +-1): the quadratic form is
        # constantly 2 for M = I, so the exact moment is 4 (the printed
        # relaxed bound evaluates to 10 and must dominate)
        res2 = sparsecol_moment_oracle(2, 2, np.eye(2))
        assert res2.mom == pytest.approx(4.0, abs=1e-12)
        assert res2.bound == pytest.approx(10.0, abs=1e-12)
        assert res2.mom <= res2.bound

    def test_sparsecol_zero(self):
        assert sparsecol_moment_oracle(3, 2, np.zeros((3, 3))).mom == 0.0

    def test_first_moments_are_identity_everywhere(self):
        for d in (2, 3):
            for xi in range(1, d + 1):
                res = sparsecol_moment_oracle(d, xi, np.eye(d))
                assert res.first_moment_is_identity(tol=1e-12)
            for b in (1, 2):
                res = countsketch_moment_oracle(d, b, np.eye(d))
                assert res.first_moment_is_identity(tol=1e-12)

    def test_closed_form_matches_enumeration_random(self):
        rng = np.random.default_rng(9)
        for d in (2, 3, 4):
            for xi in range(1, min(d, 3) + 1):
                m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                m = (m + m.conj().T) / 2
                res = sparsecol_moment_oracle(d, xi, m)  # raises on mismatch
                assert res.closed_form == pytest.approx(res.mom, abs=1e-12 * max(1, abs(res.mom)))

    def test_budget_guard(self):
        with pytest.raises(ValueError, match="budget"):
            countsketch_moment_oracle(20, 3, np.eye(20))

    def test_rejects_non_self_adjoint(self):
        with pytest.raises(ValueError, match="self-adjoint"):
            sparsecol_closed_form(2, 1, np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestKhatriRaoOrdering:
    def test_fourth_moment_ordering_on_kron_gaussian_subspace(self):
        # smaller fourth-moment constant should give larger injectivity:
        # complex spherical (4/3) >= complex Rademacher (1.5) >= real Gaussian (3)
        d0, ell, r, k, trials = 2, 10, 50, 400, 100
        q = kronecker_gaussian_subspace(d0, ell, r, seed=10)
        medians = {}
        for base in ("complex_spherical", "complex_rademacher", "real_gaussian"):
            alphas = [
                injectivity_dilation(KhatriRaoTM(d0, ell, k, base, seed=1000 + t), q)[0]
                for t in range(trials)
            ]
            medians[base] = np.median(alphas)
        assert medians["complex_spherical"] >= medians["complex_rademacher"]
        assert medians["complex_rademacher"] >= medians["real_gaussian"]

    def test_real_rademacher_annihilates_wht_columns(self):
        # on Kronecker-structured (WHT) subspaces the real Rademacher
        # base collapses: median sigma_min stays exactly zero up to k = 20 r
        r, ell = 50, 10
        q = wht(np.eye(2**ell))[:, :r]
        k = 20 * r
        sigmins = []
        for t in range(21):
            tm = KhatriRaoTM(2, ell, k, "real_rademacher", seed=t)
            svals = np.linalg.svd(tm.apply_adjoint(q), compute_uv=False)
            sigmins.append(svals[-1])
        assert np.median(sigmins) == 0.0
