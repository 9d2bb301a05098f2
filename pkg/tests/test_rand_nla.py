"""Sketching algorithms: exactness, stability, and statistical contracts."""

import numpy as np
import pytest

from sketchkit.core import PositiveDefinitenessError, orth
from sketchkit.rand_nla import (
    gen_nystrom_outer,
    gen_nystrom_svd,
    matrix_recovery,
    nystrom_psd,
    osi_orthogonality_statistic,
    rsvd,
    sketch_and_solve,
)
from sketchkit.sketch import ExplicitTM, GaussianTM, SparseStackTM


def _planted(rng, n, d, r):
    return rng.standard_normal((n, r)) @ rng.standard_normal((r, d))


class TestRsvd:
    def test_rank_one_exact(self):
        rng = np.random.default_rng(0)
        a = np.outer(rng.standard_normal(25), rng.standard_normal(18))
        fac = rsvd(a, 2, GaussianTM(18, 2, seed=1))
        assert np.linalg.norm(a - fac.matrix()) <= 1e-10 * np.linalg.norm(a)

    def test_zero_matrix(self):
        fac = rsvd(np.zeros((9, 7)), 3, GaussianTM(7, 3, seed=2))
        assert fac.rank == 0
        assert np.linalg.norm(fac.matrix()) == 0.0

    def test_noisy_spikes_near_optimal(self):
        # diag(1 x 10, eps x 90): best rank-10 error^2 is (d - R) eps^2;
        # factor 3 covers the randomized overhead
        d, big, eps, k = 100, 10, 1e-3, 20
        a = np.diag(np.concatenate([np.ones(big), np.full(d - big, eps)]))
        errs = []
        for trial in range(50):
            fac = rsvd(a, k, GaussianTM(d, k, seed=trial))
            errs.append(np.linalg.norm(a - fac.matrix()) ** 2)
        assert np.median(errs) <= 3 * (d - big) * eps**2

    def test_projection_idempotence(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((30, 20))
        tm = GaussianTM(20, 8, seed=4)
        q = orth(tm.apply_right(a))
        approx = rsvd(a, 8, tm).matrix()
        assert np.linalg.norm(q @ (q.conj().T @ approx) - approx) <= 1e-10 * np.linalg.norm(approx)

    def test_oversampling_monotonicity(self):
        # median error nonincreasing in k (100 trials per k)
        n = 256
        vals = np.ones(n)
        vals[10:] = (np.arange(11, n + 1) - 10.0) ** -1.0
        a = np.diag(vals)
        medians = []
        for k in (10, 20, 40):
            errs = [
                np.linalg.norm(a - rsvd(a, k, GaussianTM(n, k, seed=100 * k + t)).matrix())
                for t in range(100)
            ]
            medians.append(np.median(errs))
        assert medians[0] >= medians[1] >= medians[2]


class TestNystromPsd:
    def test_exact_rank(self):
        rng = np.random.default_rng(5)
        q, _ = np.linalg.qr(rng.standard_normal((40, 5)))
        a = q @ np.diag([5.0, 4.0, 3.0, 2.0, 1.0]) @ q.T
        fac = nystrom_psd(a, 8, GaussianTM(40, 8, seed=6))
        fac.validate()
        err = np.abs(np.linalg.eigvalsh(a - fac.matrix())).sum()
        assert err <= 1e-8 * np.abs(np.linalg.eigvalsh(a)).sum()

    def test_identity_full_rank(self):
        fac = nystrom_psd(np.eye(12), 12, GaussianTM(12, 12, seed=7))
        assert np.linalg.norm(np.eye(12) - fac.matrix()) <= 1e-8

    def test_gram_correspondence(self):
        # nuclear-norm Nystrom error on A equals the squared Frobenius
        # projection error on sqrt(A) with the same sketch
        rng = np.random.default_rng(8)
        g = rng.standard_normal((200, 200))
        a = g @ g.T / 200
        tm = GaussianTM(200, 30, seed=9)
        fac = nystrom_psd(a, 30, tm)
        nuc = np.abs(np.linalg.eigvalsh(a - fac.matrix())).sum()
        w, u = np.linalg.eigh(a)
        root = (u * np.sqrt(np.maximum(w, 0.0))) @ u.T
        q = orth(root @ tm.materialize())
        frob = np.linalg.norm(root - q @ (q.T @ root)) ** 2
        assert abs(nuc - frob) <= 1e-6 * np.trace(a)

    def test_psd_output_always(self):
        rng = np.random.default_rng(10)
        g = rng.standard_normal((50, 20))
        a = g @ g.T / 20
        fac = nystrom_psd(a, 10, SparseStackTM(50, 2, 5, seed=11))
        assert np.all(fac.lam >= 0)
        probes = rng.standard_normal((50, 100))
        approx = fac.matrix()
        quads = np.einsum("ij,ij->j", probes, approx @ probes)
        norm_a = np.linalg.norm(a, 2)
        assert np.all(quads >= -1e-10 * norm_a * (np.linalg.norm(probes, axis=0) ** 2))

    def test_rejects_indefinite(self):
        a = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(ValueError, match="psd"):
            nystrom_psd(a, 2, GaussianTM(3, 2, seed=12))

    def test_zero_matrix_via_shift_retry(self):
        fac = nystrom_psd(np.zeros((10, 10)), 3, GaussianTM(10, 3, seed=13))
        assert np.linalg.norm(fac.matrix()) <= 1e-12


class TestGenNystrom:
    def test_exact_rank_outer(self):
        rng = np.random.default_rng(14)
        a = _planted(rng, 40, 25, 6)
        fac = gen_nystrom_outer(a, 8, 12, GaussianTM(25, 8, seed=15), GaussianTM(40, 12, seed=16))
        assert np.linalg.norm(a - fac.matrix()) <= 1e-9 * np.linalg.norm(a)

    def test_zero_matrix_rank_zero(self):
        fac = gen_nystrom_outer(
            np.zeros((20, 15)), 4, 6, GaussianTM(15, 4, seed=17), GaussianTM(20, 6, seed=18)
        )
        assert fac.rank == 0

    def test_exponential_spectrum_quality(self):
        # error within 4x of the best rank-20 approximation, median of 50
        rng = np.random.default_rng(19)
        u, _ = np.linalg.qr(rng.standard_normal((300, 60)))
        v, _ = np.linalg.qr(rng.standard_normal((200, 60)))
        sigma = 10.0 ** (-np.arange(60) / 5.0)
        a = (u * sigma) @ v.T
        opt20 = np.linalg.norm(sigma[20:])
        ratios = []
        for trial in range(50):
            fac = gen_nystrom_outer(
                a, 40, 60, GaussianTM(200, 40, seed=500 + trial), GaussianTM(300, 60, seed=900 + trial)
            )
            ratios.append(np.linalg.norm(a - fac.matrix()) / opt20)
        assert np.median(ratios) <= 4.0

    def test_form_agreement(self):
        rng = np.random.default_rng(20)
        a = rng.standard_normal((45, 30)) * np.logspace(0, -6, 30)[None, :]
        tmo = SparseStackTM(30, 2, 6, seed=21)
        tmp = GaussianTM(45, 18, seed=22)
        outer = gen_nystrom_outer(a, 12, 18, tmo, tmp)
        svd_form = gen_nystrom_svd(a, 12, 18, tmo, tmp)
        svd_form.validate()
        diff = np.linalg.norm(outer.matrix() - svd_form.matrix())
        assert diff <= 1e-8 * np.linalg.norm(outer.matrix())

    def test_svd_form_orthonormal_on_planted(self):
        rng = np.random.default_rng(23)
        a = _planted(rng, 35, 28, 5)
        fac = gen_nystrom_svd(a, 7, 11, GaussianTM(28, 7, seed=24), GaussianTM(35, 11, seed=25))
        fac.validate()
        assert np.linalg.norm(a - fac.matrix()) <= 1e-9 * np.linalg.norm(a)

    def test_wide_input_transposed_internally(self):
        rng = np.random.default_rng(26)
        a = _planted(rng, 20, 50, 4)  # wide
        fac = gen_nystrom_outer(a, 6, 9, GaussianTM(50, 6, seed=27), GaussianTM(20, 9, seed=28))
        assert fac.matrix().shape == (20, 50)
        assert np.linalg.norm(a - fac.matrix()) <= 1e-9 * np.linalg.norm(a)
        fac2 = gen_nystrom_svd(a, 6, 9, GaussianTM(50, 6, seed=27), GaussianTM(20, 9, seed=28))
        assert np.linalg.norm(fac.matrix() - fac2.matrix()) <= 1e-8 * np.linalg.norm(fac.matrix())

    def test_dimension_preconditions(self):
        a = np.zeros((10, 8))
        with pytest.raises(ValueError, match="k <= p"):
            gen_nystrom_outer(a, 6, 4, GaussianTM(8, 6, seed=0), GaussianTM(10, 4, seed=1))


class TestSketchAndSolve:
    def test_consistent_system(self):
        rng = np.random.default_rng(29)
        a = rng.standard_normal((100, 10))
        x0 = rng.standard_normal((10, 3))
        xs = sketch_and_solve(a, a @ x0, GaussianTM(100, 20, seed=30))
        assert np.linalg.norm(xs - x0) <= 1e-8 * np.linalg.norm(x0)

    def test_square_identity_design(self):
        rng = np.random.default_rng(31)
        b = rng.standard_normal((12, 2))
        xs = sketch_and_solve(np.eye(12), b, GaussianTM(12, 12, seed=32))
        assert np.linalg.norm(xs - b) <= 1e-12 * np.linalg.norm(b)

    def test_orthogonal_noise_residual_bound(self):
        # residual <= sqrt(10) rho in at least 95% of 200 trials at p = 4d
        rng = np.random.default_rng(33)
        n, d, p = 500, 20, 80
        a = rng.standard_normal((n, d))
        x0 = rng.standard_normal((d, 1))
        q, _ = np.linalg.qr(a)
        noise = rng.standard_normal((n, 1))
        noise -= q @ (q.T @ noise)
        rho = 0.37
        noise *= rho / np.linalg.norm(noise)
        b = a @ x0 + noise
        hits = 0
        for trial in range(200):
            xs = sketch_and_solve(a, b, GaussianTM(n, p, seed=4000 + trial))
            if np.linalg.norm(a @ xs - b) <= np.sqrt(10) * rho:
                hits += 1
        assert hits >= 190


class TestMatrixRecovery:
    def test_one_dimensional_family(self):
        target = 3.0 * np.eye(6)
        coeffs, rec = matrix_recovery(lambda x, y: y @ target @ x, [np.eye(6)], 4, seed=34)
        assert abs(coeffs[0] - 3.0) <= 1e-10
        assert np.linalg.norm(rec - target) <= 1e-10

    def test_exact_membership_toeplitz(self):
        from sketchkit.bench.runners import toeplitz_basis

        rng = np.random.default_rng(35)
        n = 16
        basis = toeplitz_basis(n)
        d = len(basis)
        target = sum(c * m for c, m in zip(rng.standard_normal(d), basis))
        _, rec = matrix_recovery(lambda x, y: y @ target @ x, basis, 3 * d, seed=36)
        assert np.linalg.norm(rec - target) <= 1e-8 * np.linalg.norm(target)

    def test_query_count_is_exact(self):
        calls = []

        def query(x, y):
            calls.append(1)
            return y @ x

        matrix_recovery(query, [np.eye(5)], 9, seed=37)
        assert len(calls) == 9

    def test_deficient_basis_warns(self):
        basis = [np.eye(4), 2.0 * np.eye(4)]
        with pytest.warns(UserWarning, match="rank-deficient"):
            matrix_recovery(lambda x, y: y @ x, basis, 6, seed=38)

    def test_perturbed_target_near_projection(self):
        from sketchkit.bench.runners import toeplitz_basis, toeplitz_project

        rng = np.random.default_rng(39)
        n = 16
        basis = toeplitz_basis(n)
        d = len(basis)
        ratios = []
        for trial in range(100):
            trng = np.random.default_rng(1000 + trial)
            target = sum(c * m for c, m in zip(trng.standard_normal(d), basis))
            pert = trng.standard_normal((n, n))
            pert -= toeplitz_project(pert)
            rho = 0.25 * np.linalg.norm(target)
            pert *= rho / np.linalg.norm(pert)
            hidden = target + pert
            _, rec = matrix_recovery(
                lambda x, y: y @ hidden @ x, basis, 6 * d, seed=2000 + trial
            )
            ratios.append(np.linalg.norm(hidden - rec) / rho)
        assert np.median(ratios) <= 4.0


class TestOrthogonalityStatistic:
    def _split(self, rng, n, r, s):
        q, _ = np.linalg.qr(rng.standard_normal((n, r + s)))
        return q[:, :r], q[:, r:]

    def test_zero_b(self):
        rng = np.random.default_rng(40)
        q, qp = self._split(rng, 30, 8, 4)
        stat = osi_orthogonality_statistic(np.zeros((3, 4)), q, qp, GaussianTM(30, 20, seed=41))
        assert stat.value == 0.0 and not stat.rank_deficient

    def test_identity_core(self):
        rng = np.random.default_rng(42)
        q, qp = self._split(rng, 25, 6, 5)
        omega = np.hstack([q, np.zeros((25, 2))])
        b = rng.standard_normal((4, 5))
        stat = osi_orthogonality_statistic(b, q, qp, ExplicitTM(omega))
        expected = np.linalg.norm(b @ (qp.conj().T @ omega)) ** 2
        assert abs(stat.value - expected) <= 1e-10 * max(expected, 1.0)

    def test_rank_deficient_flag(self):
        rng = np.random.default_rng(43)
        q, qp = self._split(rng, 20, 5, 3)
        omega = np.zeros((20, 6))
        stat = osi_orthogonality_statistic(np.ones((2, 3)), q, qp, ExplicitTM(omega))
        assert stat.rank_deficient and np.isinf(stat.value)

    def test_monte_carlo_median_bound(self):
        # r=10, k=30, B=I: median over 500 Gaussian trials below 10 ||B||_F^2
        rng = np.random.default_rng(44)
        q, qp = self._split(rng, 60, 10, 5)
        b = np.eye(5)
        values = [
            osi_orthogonality_statistic(b, q, qp, GaussianTM(60, 30, seed=t)).value
            for t in range(500)
        ]
        assert np.median(values) <= 10 * np.linalg.norm(b) ** 2

    def test_non_orthogonal_inputs_rejected(self):
        rng = np.random.default_rng(45)
        q, _ = np.linalg.qr(rng.standard_normal((20, 4)))
        with pytest.raises(ValueError, match="orthogonal"):
            osi_orthogonality_statistic(np.ones((2, 4)), q, q, GaussianTM(20, 10, seed=0))
