"""CRB, group-lasso baseline, and experiment metrics."""

import numpy as np
import pytest

from mmvspec.baselines import (
    CrbInput,
    fisher_crb,
    freq_mse,
    freq_success,
    group_lasso_dft,
    normalized_error,
    per_vector_mse,
    signal_success,
)
from mmvspec.errors import DomainError, IllPosedError
from mmvspec.model import ObservationMask, rng_from_seed, synthesize

# Frozen regression values: 50-digit direct summation of the information
# matrix at n=14, c=(1,1), f=(0.1,0.6), sigma=0.3, L=1.
CRB_DIAG_14 = 1.9728403545743652613e-5
CRB_OFF_14 = 2.1920448384159614014e-6


class TestFisherCrb:
    def test_quadratic_coefficient_scaling(self):
        inp = CrbInput((0.1, 0.35), np.array([[1.0 + 1j], [0.5]]), 0.2, 16)
        inp2 = CrbInput((0.1, 0.35), 2.0 * np.array([[1.0 + 1j], [0.5]]), 0.2, 16)
        assert np.allclose(fisher_crb(inp2), fisher_crb(inp) / 4.0, rtol=1e-12)

    def test_replicated_columns_shrink_bound(self):
        c = np.array([[1.0 + 0.3j], [0.7 - 0.2j]])
        base = fisher_crb(CrbInput((0.12, 0.4), c, 0.3, 12))
        for L in (2, 5):
            rep = fisher_crb(CrbInput((0.12, 0.4), np.tile(c, (1, L)), 0.3, 12))
            assert np.allclose(rep, base / L, rtol=1e-12)

    def test_matches_high_precision_oracle(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 50
        n, f1, f2, sigma = 14, 0.1, 0.6, 0.3
        crb = fisher_crb(CrbInput((f1, f2), np.array([[1.0], [1.0]]), sigma, n))
        s_i2 = mp.fsum(mp.mpf(i) ** 2 for i in range(n))
        cross = mp.fsum(mp.mpf(i) ** 2 * mp.cos(2 * mp.pi * (f1 - f2) * i)
                        for i in range(n))
        scale = 8 * mp.pi**2 / (n * mp.mpf(sigma) ** 2)
        J11 = scale * s_i2
        J12 = scale * cross
        det = J11 * J11 - J12 * J12
        assert crb[0, 0] == pytest.approx(float(J11 / det), abs=1e-10)
        assert crb[1, 1] == pytest.approx(float(J11 / det), abs=1e-10)
        assert crb[0, 1] == pytest.approx(float(-J12 / det), abs=1e-10)

    def test_frozen_regression_values(self):
        crb = fisher_crb(CrbInput((0.1, 0.6), np.array([[1.0], [1.0]]), 0.3, 14))
        assert crb[0, 0] == pytest.approx(CRB_DIAG_14, rel=1e-12)
        assert crb[0, 1] == pytest.approx(CRB_OFF_14, rel=1e-12)

    def test_positive_definite_off_coincidence(self):
        rng = rng_from_seed(90)
        for _ in range(10):
            f = np.sort(rng.random(2))
            if f[1] - f[0] < 1e-3:
                continue
            C = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
            crb = fisher_crb(CrbInput((f[0], f[1]), C, 0.5, 20))
            w = np.linalg.eigvalsh(crb)
            assert w.min() > 0

    def test_singular_information_raises(self):
        with pytest.raises(IllPosedError):
            fisher_crb(CrbInput((0.2, 0.2), np.array([[1.0], [1.0]]), 0.1, 8))

    def test_input_validation(self):
        with pytest.raises(DomainError):
            CrbInput((0.1, 0.2, 0.3), np.ones((3, 1)), 0.1, 8)
        with pytest.raises(DomainError):
            CrbInput((0.1, 0.2), np.ones((2, 1)), 0.0, 8)


class TestGroupLasso:
    def test_huge_mu_kills_everything(self):
        rng = rng_from_seed(91)
        n, L = 16, 2
        Z = rng.standard_normal((n, L)) + 1j * rng.standard_normal((n, L))
        res = group_lasso_dft(Z, ObservationMask.full(n, L), mu=1e6)
        assert np.all(res.coeffs == 0.0)
        assert res.converged

    def test_on_grid_single_frequency_concentrates(self):
        n, L, ov = 32, 2, 4
        k0 = 17
        f0 = k0 / (ov * n)
        C = np.array([[1.0, 0.5 - 0.5j]])
        Z = synthesize([f0], C, n).data
        res = group_lasso_dft(Z, ObservationMask.full(n, L), oversampling=ov, mu=1e-4)
        norms = np.linalg.norm(res.coeffs, axis=1)
        assert norms[k0] >= 0.99 * norms.sum()

    def test_off_grid_frequency_spreads(self):
        n, L, ov = 32, 2, 4
        f0 = (17 + 0.5) / (ov * n)  # exactly between grid points
        C = np.array([[1.0, 0.5 - 0.5j]])
        Z = synthesize([f0], C, n).data
        res = group_lasso_dft(Z, ObservationMask.full(n, L), oversampling=ov, mu=1e-4)
        norms = np.linalg.norm(res.coeffs, axis=1)
        order = np.argsort(norms)[::-1]
        assert norms[order[1]] >= 0.05 * norms[order[0]]
        assert abs(order[0] - order[1]) == 1

    def test_objective_monotone(self):
        rng = rng_from_seed(92)
        n, L = 24, 3
        Z = rng.standard_normal((n, L)) + 1j * rng.standard_normal((n, L))
        mask = ObservationMask.common_rows(sorted(rng.choice(n, 12, replace=False).tolist()), n, L)
        objs = []
        for iters in (1, 5, 25, 125, 600):
            res = group_lasso_dft(np.where(mask.bool_array(), Z, 0), mask,
                                  mu=0.05, max_iters=iters)
            objs.append(res.objective)
        assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))

    def test_parameter_validation(self):
        Z = np.zeros((8, 1))
        with pytest.raises(DomainError):
            group_lasso_dft(Z, ObservationMask.full(8, 1), oversampling=0)
        with pytest.raises(DomainError):
            group_lasso_dft(Z, ObservationMask.full(8, 1), mu=0.0)


class TestMetrics:
    def test_exact_recovery_scores_zero(self):
        rng = rng_from_seed(93)
        X = rng.standard_normal((16, 3)) + 1j * rng.standard_normal((16, 3))
        assert normalized_error(X, X) == 0.0
        assert per_vector_mse(X, X) == 0.0
        assert signal_success(X, X)

    def test_freq_mse_arithmetic(self):
        f_star = [0.2, 0.6]
        f_hat = [0.203, 0.603]
        assert freq_mse(f_hat, f_star) == pytest.approx(9e-6, rel=1e-10)
        assert freq_success(f_hat, f_star)
        assert not freq_success([0.21, 0.61], f_star)

    def test_permutation_invariant_matching(self):
        rng = rng_from_seed(94)
        f_star = np.sort(rng.random(5))
        noise = 1e-3 * rng.standard_normal(5)
        f_hat = (f_star + noise) % 1.0
        perm = rng.permutation(5)
        assert freq_mse(f_hat[perm], f_star) == pytest.approx(
            freq_mse(f_hat, f_star), rel=1e-12)

    def test_global_shift_invariance(self):
        f_star = np.array([0.1, 0.5, 0.9])
        f_hat = np.array([0.102, 0.495, 0.905])
        for shift in (0.3, 0.77):
            shifted = freq_mse((f_hat + shift) % 1.0, (f_star + shift) % 1.0)
            assert shifted == pytest.approx(freq_mse(f_hat, f_star), rel=1e-9)

    def test_cardinality_mismatch_is_failure(self):
        assert freq_mse([0.1, 0.2], [0.1]) == np.inf
        assert not freq_success([0.1, 0.2], [0.1])

    def test_wraparound_matching(self):
        # 0.999 matches 0.001 across the seam, not 0.5
        assert freq_mse([0.999], [0.001]) == pytest.approx(4e-6, rel=1e-9)

    def test_per_vector_mse_definition(self):
        X = np.zeros((4, 5), dtype=complex)
        Y = np.ones((4, 5), dtype=complex)
        assert per_vector_mse(X, Y) == pytest.approx(4.0, rel=1e-12)

    def test_zero_reference(self):
        Z = np.zeros((3, 2))
        assert normalized_error(Z, Z) == 0.0
        assert normalized_error(np.ones((3, 2)), Z) == np.inf

    def test_success_threshold_strictness(self):
        X = np.ones((4, 1), dtype=complex)
        X_close = X * (1.0 + 1e-5)  # error exactly at threshold
        assert normalized_error(X_close, X) == pytest.approx(1e-5, rel=1e-9)
        assert not signal_success(X_close, X)
