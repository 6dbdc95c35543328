import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from qcs.linalg import mat, ve
from qcs.models import (
    LowRankModel,
    SparseModel,
    atomic_norm,
    in_antisparse,
    project_box,
    project_l2_ball,
    project_l4_with_multiplier,
    project_lp_ball,
    prox_atomic,
    sup_correlation,
    width_estimate,
)


def chi_mean(dim: int) -> float:
    """E||g||_2 for g ~ N(0, I_dim) by numerical integration of the chi density."""
    log_norm = (1 - dim / 2) * math.log(2) - math.lgamma(dim / 2)

    def integrand(x):
        return x * math.exp(log_norm + (dim - 1) * math.log(x) - x * x / 2)

    value, err = quad(integrand, 0, np.inf)
    assert err < 1e-8
    return value


class TestAtomicNorm:
    def test_l1(self):
        model = SparseModel(dim=3, k=1)
        assert atomic_norm(np.array([1.0, -2.0, 0.0]), model) == 3.0

    def test_nuclear_identity(self):
        assert atomic_norm(np.eye(2), LowRankModel(side=2, rank=1)) == pytest.approx(2.0)

    def test_nuclear_diagonal_signs(self):
        u = np.diag([3.0, -4.0])
        assert atomic_norm(u, LowRankModel(side=2, rank=2)) == pytest.approx(7.0)

    def test_accepts_vectorized_matrix(self):
        u = np.diag([3.0, -4.0])
        model = LowRankModel(side=2, rank=2)
        assert atomic_norm(ve(u), model) == pytest.approx(atomic_norm(u, model))

    def test_model_validation(self):
        with pytest.raises(ValueError):
            SparseModel(dim=4, k=0)
        with pytest.raises(ValueError):
            LowRankModel(side=3, rank=4)
        assert SparseModel(dim=9, k=4).radius == 2.0
        assert LowRankModel(side=5, rank=4).radius == 2.0


class TestProx:
    def test_soft_threshold(self):
        model = SparseModel(dim=2, k=1)
        np.testing.assert_allclose(prox_atomic(np.array([2.0, -0.5]), 1.0, model), [1.0, 0.0])

    def test_tau_zero_is_identity(self):
        model = SparseModel(dim=4, k=2)
        u = np.array([0.3, -1.2, 0.0, 5.0])
        np.testing.assert_array_equal(prox_atomic(u, 0.0, model), u)

    def test_svt_diagonal(self):
        model = LowRankModel(side=2, rank=1)
        out = prox_atomic(np.diag([3.0, 1.0]), 2.0, model)
        np.testing.assert_allclose(out, np.diag([1.0, 0.0]), atol=1e-12)

    def test_svt_equals_vector_shrinkage_on_diagonals(self):
        rng = np.random.default_rng(0)
        model = LowRankModel(side=5, rank=1)
        for _ in range(25):
            d = rng.standard_normal(5) * 2
            tau = rng.uniform(0, 2)
            out = prox_atomic(np.diag(d), tau, model)
            expected = np.diag(np.sign(d) * np.maximum(np.abs(d) - tau, 0.0))
            np.testing.assert_allclose(out, expected, atol=1e-10)

    def test_l1_subgradient_conditions(self):
        rng = np.random.default_rng(42)
        model = SparseModel(dim=50, k=5)
        for _ in range(200):
            u = rng.standard_normal(50) * rng.uniform(0.1, 3)
            tau = rng.uniform(0, 2)
            z = prox_atomic(u, tau, model)
            on = z != 0
            np.testing.assert_allclose(u[on] - z[on], tau * np.sign(z[on]), atol=1e-12)
            assert np.all(np.abs(u[~on]) <= tau + 1e-12)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_prox_never_increases_magnitude(self, seed):
        rng = np.random.default_rng(seed)
        u = rng.standard_normal(8)
        tau = rng.uniform(0, 2)
        z = prox_atomic(u, tau, SparseModel(dim=8, k=2))
        assert np.all(np.abs(z) <= np.abs(u) + 1e-15)


class TestProjections:
    def test_l2_inside(self):
        u = np.array([0.3, 0.4])
        np.testing.assert_array_equal(project_l2_ball(u, 1.0), u)

    def test_l2_boundary(self):
        np.testing.assert_allclose(project_l2_ball(np.array([3.0, 4.0]), 1.0), [0.6, 0.8])

    def test_box_clamp(self):
        np.testing.assert_array_equal(
            project_box(np.array([2.0, -3.0]), -1.0, 1.0), [1.0, -1.0]
        )

    def test_box_asymmetric_membership(self):
        rng = np.random.default_rng(1)
        lo = rng.standard_normal(10)
        hi = lo + rng.uniform(0.1, 2, 10)
        u = rng.standard_normal(10) * 3
        out = project_box(u, lo, hi)
        assert np.all(out >= lo) and np.all(out <= hi)

    def test_box_empty(self):
        with pytest.raises(ValueError):
            project_box(np.zeros(2), np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    def test_idempotent_and_nonexpansive(self):
        rng = np.random.default_rng(5)
        projections = [
            lambda v: project_l2_ball(v, 1.0),
            lambda v: project_box(v, -0.5, 0.7),
            lambda v: project_lp_ball(v, 1.0),
        ]
        for proj in projections:
            for _ in range(100):
                x = rng.standard_normal(12) * rng.uniform(0.1, 4)
                y = rng.standard_normal(12) * rng.uniform(0.1, 4)
                px, py = proj(x), proj(y)
                assert np.linalg.norm(proj(px) - px) <= 1e-10
                assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-10


class TestL4Projection:
    def test_interior_point_unchanged(self):
        v = np.array([0.3, -0.2, 0.1])
        np.testing.assert_array_equal(project_lp_ball(v, 1.0), v)

    def test_single_axis(self):
        np.testing.assert_allclose(project_lp_ball(np.array([2.0, 0.0]), 1.0), [1.0, 0.0],
                                   atol=1e-12)

    def test_kkt_residuals(self):
        rng = np.random.default_rng(9)
        for _ in range(300):
            v = rng.standard_normal(10) * rng.uniform(0.5, 4)
            z, mu = project_l4_with_multiplier(v, 1.0)
            if np.sum(v**4) ** 0.25 <= 1.0:
                assert mu == 0.0
                continue
            assert mu >= 0.0
            assert abs(np.sum(z**4) ** 0.25 - 1.0) <= 1e-8
            assert np.max(np.abs(z - v + 4 * mu * z**3)) <= 1e-8

    def test_warm_start_hint_matches_cold(self):
        rng = np.random.default_rng(10)
        v = rng.standard_normal(20) * 2
        z_cold, mu = project_l4_with_multiplier(v, 1.0)
        z_warm, _ = project_l4_with_multiplier(v, 1.0, mu_hint=mu)
        np.testing.assert_allclose(z_warm, z_cold, atol=1e-12)

    def test_only_p4(self):
        with pytest.raises(ValueError):
            project_lp_ball(np.ones(3), 1.0, p=2)


class TestSupCorrelation:
    def test_sparse_best_coordinate(self):
        model = SparseModel(dim=3, k=1)
        assert sup_correlation(np.array([3.0, -4.0, 1.0]), model) == 4.0

    def test_sparse_full_ball(self):
        g = np.random.default_rng(0).standard_normal(16)
        model = SparseModel(dim=16, k=16)
        assert sup_correlation(g, model) == pytest.approx(np.linalg.norm(g))

    def test_lowrank_full_rank_is_frobenius(self):
        g = np.random.default_rng(1).standard_normal(64)
        model = LowRankModel(side=8, rank=8)
        assert sup_correlation(g, model) == pytest.approx(np.linalg.norm(g))

    def test_lowrank_rank_one_is_operator_norm(self):
        g = np.random.default_rng(2).standard_normal(16)
        model = LowRankModel(side=4, rank=1)
        top = np.linalg.svd(mat(g, 4), compute_uv=False)[0]
        assert sup_correlation(g, model) == pytest.approx(top)


class TestWidthEstimate:
    def test_full_ball_matches_chi_integral(self):
        model = SparseModel(dim=16, k=16)
        est = width_estimate(model, n_samples=10_000, seed=0)
        assert abs(est.mean - chi_mean(16)) <= 3 * est.std_error

    def test_lowrank_full_rank_equals_sparse_full_ball(self):
        sparse_est = width_estimate(SparseModel(dim=64, k=64), 2000, seed=5)
        lowrank_est = width_estimate(LowRankModel(side=8, rank=8), 2000, seed=5)
        assert sparse_est.mean == pytest.approx(lowrank_est.mean)

    def test_rank_one_width_bound(self):
        est = width_estimate(LowRankModel(side=32, rank=1), 10_000, seed=1)
        assert est.mean**2 <= 4 * 32 * 1

    def test_monotone_in_k(self):
        prev = 0.0
        for k in (1, 2, 4, 8, 16):
            est = width_estimate(SparseModel(dim=64, k=k), 500, seed=9)
            assert est.mean >= prev
            prev = est.mean

    @pytest.mark.parametrize("n,k", [(256, 4), (1024, 16)])
    def test_sparse_width_upper_check(self, n, k):
        est = width_estimate(SparseModel(dim=n, k=k), 10_000, seed=3)
        assert est.mean**2 <= 2 * k * np.log(2 * n / k) + 5 * k

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            width_estimate(SparseModel(dim=4, k=1), 1, seed=0)


class TestAntisparse:
    def test_flat_vector_equality_case(self):
        n = 8
        assert in_antisparse(np.ones(n), float(n))

    def test_one_sparse_excluded(self):
        u = np.zeros(6)
        u[2] = 3.0
        assert not in_antisparse(u, 2.0)

    def test_k0_zero_vacuous(self):
        assert in_antisparse(np.random.default_rng(0).standard_normal(5), 0.0)
