"""Sample covariance, Toeplitz fitting, regularization weights."""

import numpy as np
import pytest

from mmvspec.covariance import (
    CovarianceSample,
    StreamingCovariance,
    covariance_exact,
    effective_rank,
    estimate_toeplitz,
    lambda_heuristic,
    lambda_oracle,
    sample_covariance,
)
from mmvspec.errors import DomainError
from mmvspec.model import (
    ObservationMask,
    atom,
    is_complete_sparse_ruler,
    rng_from_seed,
    steering_matrix,
    toeplitz_embed,
)

# Frozen regression value: 50-digit evaluation of 2.5e-3 / ((ln 400)^2 ln 8).
LAMBDA_400_8 = 3.3490937535998718662e-5


def exact_sample(freqs, variances, n, omega, L=1):
    """CovarianceSample holding the exact covariance restricted to omega."""
    Sig = toeplitz_embed(covariance_exact(freqs, variances, n).u)
    mask = ObservationMask.common_rows(omega, n, L)
    return CovarianceSample(Sig[np.ix_(list(omega), list(omega))], mask, L)


class TestSampleCovariance:
    def test_single_snapshot_outer_product(self):
        rng = rng_from_seed(60)
        m, n = 5, 12
        rows = sorted(rng.choice(n, size=m, replace=False).tolist())
        x = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        S = sample_covariance(x, ObservationMask.common_rows(rows, n, 1))
        assert np.max(np.abs(S.sigma - np.outer(x, x.conj()))) < 1e-14

    def test_zero_data_gives_zero(self):
        mask = ObservationMask.common_rows([0, 2, 4], 8, 7)
        S = sample_covariance(np.zeros((3, 7)), mask)
        assert np.all(S.sigma == 0.0)
        assert S.L == 7

    def test_streaming_equals_batch(self):
        rng = rng_from_seed(61)
        n, m, L = 16, 6, 100
        rows = sorted(rng.choice(n, size=m, replace=False).tolist())
        X = rng.standard_normal((m, L)) + 1j * rng.standard_normal((m, L))
        acc = StreamingCovariance(ObservationMask.common_rows(rows, n, 1))
        for l in range(L):
            acc.add(X[:, l])
        S_stream = acc.finalize()
        S_batch = sample_covariance(X, ObservationMask.common_rows(rows, n, L))
        assert np.max(np.abs(S_stream.sigma - S_batch.sigma)) < 1e-12
        assert S_stream.L == L

    def test_rejects_entrywise_mask(self):
        with pytest.raises(DomainError):
            sample_covariance(np.zeros((2, 3)),
                              ObservationMask.entrywise([(0, 0), (1, 1)], 4, 3))

    def test_sample_is_validated(self):
        mask = ObservationMask.common_rows([0, 1], 4, 1)
        with pytest.raises(DomainError):
            CovarianceSample(np.array([[1.0, 2.0], [3.0, 4.0]]), mask, 1)
        with pytest.raises(DomainError):
            CovarianceSample(-np.eye(2), mask, 1)


class TestLambdaWeights:
    def test_heuristic_decreasing(self):
        assert lambda_heuristic(100, 8) > lambda_heuristic(1000, 8)
        assert lambda_heuristic(100, 8) > lambda_heuristic(100, 16)

    def test_heuristic_closed_form_point(self):
        e = np.e
        assert lambda_heuristic(e * e, e) == pytest.approx(2.5e-3 / 4.0, rel=1e-14)

    def test_heuristic_frozen_constant(self):
        assert lambda_heuristic(400, 8) == pytest.approx(LAMBDA_400_8, rel=1e-12)

    def test_heuristic_domain(self):
        with pytest.raises(DomainError):
            lambda_heuristic(1, 8)
        with pytest.raises(DomainError):
            lambda_heuristic(100, 1)

    def test_oracle_linear_in_spectral_norm(self):
        rng = rng_from_seed(62)
        A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        S = A @ A.conj().T
        assert lambda_oracle(3.0 * S, 500, 32) == pytest.approx(
            3.0 * lambda_oracle(S, 500, 32), rel=1e-12)

    def test_oracle_branch_switch(self):
        # small L: the linear branch dominates; large L: the sqrt branch
        S = np.eye(4)
        reff, n = 4.0, 32
        for L in (2, 100_000):
            t = reff * np.log(L * n) / L
            expected = max(np.sqrt(t), t) * 1.0
            assert lambda_oracle(S, L, n) == pytest.approx(expected, rel=1e-12)
        assert 4.0 * np.log(2 * 32) / 2 > 1.0          # linear branch active
        assert 4.0 * np.log(100_000 * 32) / 100_000 < 1.0  # sqrt branch active

    def test_oracle_matches_recomputation(self):
        n, L = 32, 1000
        Sig = toeplitz_embed(covariance_exact([0.2, 0.6], [1.0, 2.0], n).u)
        omega = list(range(0, n, 4))
        S = Sig[np.ix_(omega, omega)]
        val = lambda_oracle(S, L, n, C=1.0)
        w = np.linalg.eigvalsh(S)
        reff = w.sum() / w.max()
        t = reff * np.log(L * n) / L
        assert val == pytest.approx(max(np.sqrt(t), t) * w.max(), rel=1e-10)


class TestEffectiveRank:
    def test_identity(self):
        assert effective_rank(np.eye(7)) == pytest.approx(7.0, abs=1e-12)

    def test_rank_one(self):
        v = np.array([1.0, 2.0, -1.0]) + 1j * np.array([0.5, 0.0, 1.0])
        assert effective_rank(np.outer(v, v.conj())) == pytest.approx(1.0, abs=1e-12)

    def test_matches_eigensolver_oracle(self):
        rng = rng_from_seed(63)
        A = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        S = A @ A.conj().T
        w = np.linalg.eigvalsh(S)
        assert effective_rank(S) == pytest.approx(w.sum() / w.max(), rel=1e-12)

    def test_zero_rejected(self):
        with pytest.raises(DomainError):
            effective_rank(np.zeros((3, 3)))


class TestEstimateToeplitz:
    def test_full_observation_toeplitz_fixed_point(self):
        n = 12
        u_true = covariance_exact([0.1, 0.55, 0.8], [1.0, 0.5, 2.0], n).u
        S = exact_sample([0.1, 0.55, 0.8], [1.0, 0.5, 2.0], n, range(n))
        est = estimate_toeplitz(S, 0.0)
        assert est.converged
        assert np.max(np.abs(est.u_hat.u - u_true)) < 1e-8

    def test_huge_lambda_shrinks_to_zero(self):
        S = exact_sample([0.3], [1.0], 10, [0, 2, 5, 9])
        est = estimate_toeplitz(S, 1e6)
        assert np.max(np.abs(est.u_hat.u)) < 1e-6

    def test_sparse_ruler_exact_recovery(self):
        n, omega = 6, (0, 1, 2, 5)
        assert is_complete_sparse_ruler(omega, n)
        u_true = covariance_exact([0.15, 0.62], [1.0, 0.7], n).u
        S = exact_sample([0.15, 0.62], [1.0, 0.7], n, omega)
        est = estimate_toeplitz(S, 1e-8)
        err = np.linalg.norm(est.u_hat.u - u_true) / np.linalg.norm(u_true)
        assert err <= 1e-3

    def test_negative_lambda_rejected(self):
        S = exact_sample([0.3], [1.0], 8, [0, 1, 5])
        with pytest.raises(DomainError):
            estimate_toeplitz(S, -1e-6)

    def test_fit_monotone_in_lambda(self):
        rng = rng_from_seed(64)
        n, m, r, L = 32, 10, 3, 50
        rows = sorted(rng.choice(n, size=m, replace=False).tolist())
        fs = [0.1, 0.42, 0.77]
        V = steering_matrix(fs, n)[rows, :]
        C = (rng.standard_normal((r, L)) + 1j * rng.standard_normal((r, L))) / np.sqrt(2)
        S = sample_covariance(V @ C, ObservationMask.common_rows(rows, n, L))
        fits, traces = [], []
        for lam in (1e-6, 1e-4, 1e-2, 1.0):
            est = estimate_toeplitz(S, lam)
            fits.append(est.fit_residual)
            traces.append(est.trace)
        slack = 1e-8 * max(1.0, max(fits))
        assert all(b >= a - slack for a, b in zip(fits, fits[1:]))
        assert all(b <= a + slack for a, b in zip(traces, traces[1:]))

    def test_solution_psd(self):
        rng = rng_from_seed(65)
        n, m, L = 24, 8, 30
        rows = sorted(rng.choice(n, size=m, replace=False).tolist())
        V = steering_matrix([0.2, 0.5], n)[rows, :]
        C = (rng.standard_normal((2, L)) + 1j * rng.standard_normal((2, L))) / np.sqrt(2)
        S = sample_covariance(V @ C, ObservationMask.common_rows(rows, n, L))
        est = estimate_toeplitz(S, lambda_heuristic(L, m))
        w = np.linalg.eigvalsh(toeplitz_embed(est.u_hat.u))
        assert w.min() >= -1e-8
        assert est.trace == pytest.approx(n * est.u_hat.u[0].real, rel=1e-12)

    def test_error_decreases_with_snapshots(self):
        # longer averaging gives a strictly better median fit of the true lags
        n, m, r = 64, 15, 4
        seeds = range(20)
        medians = []
        for L in (20, 500, 5000):
            errs = []
            for seed in seeds:
                rng = rng_from_seed(seed)
                fs = np.sort(rng.random(r))
                u_true = covariance_exact(fs, np.ones(r), n).u
                rows = sorted(rng.choice(n, size=m, replace=False).tolist())
                V = steering_matrix(fs, n)[rows, :]
                C = (rng.standard_normal((r, L)) + 1j * rng.standard_normal((r, L))) / np.sqrt(2)
                S = sample_covariance(V @ C, ObservationMask.common_rows(rows, n, L))
                est = estimate_toeplitz(S, lambda_heuristic(L, m))
                errs.append(np.linalg.norm(est.u_hat.u - u_true) / np.linalg.norm(u_true))
            medians.append(np.median(errs))
        assert medians[0] > medians[1] > medians[2]


class TestCovarianceExact:
    def test_dc_atom_gives_all_ones(self):
        n = 9
        u = covariance_exact([0.0], [float(n)], n).u
        assert np.max(np.abs(u - np.ones(n))) < 1e-14

    def test_empty_set_gives_zero(self):
        u = covariance_exact([], [], 7).u
        assert np.all(u == 0.0)

    def test_matches_outer_product_oracle(self):
        rng = rng_from_seed(66)
        n, r = 14, 3
        fs = np.sort(rng.random(r))
        var = rng.random(r) + 0.5
        T = toeplitz_embed(covariance_exact(fs, var, n).u)
        oracle = np.zeros((n, n), dtype=complex)
        for f, v in zip(fs, var):
            a = atom(f, n)
            oracle += v * np.outer(a, a.conj())
        assert np.max(np.abs(T - oracle)) < 1e-12
        assert np.linalg.matrix_rank(T, tol=1e-9) == r

    def test_negative_variance_rejected(self):
        with pytest.raises(DomainError):
            covariance_exact([0.1], [-1.0], 8)
