import numpy as np
import pytest

from qcs.linalg import (
    IdentityMap,
    MatrixMap,
    StackedMap,
    mat,
    operator_norm,
    svd,
    ve,
)


def gram_eigenvalues_3x3(a):
    """Eigenvalues of A^T A via characteristic-polynomial root finding.

    Independent of any SVD path: the cubic det(G - t I) = 0 is built
    from trace, principal 2-minors and determinant, then solved with
    np.roots (companion-matrix eigenvalues).
    """
    g = a.T @ a
    tr = np.trace(g)
    minors = (
        g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        + g[0, 0] * g[2, 2] - g[0, 2] * g[2, 0]
        + g[1, 1] * g[2, 2] - g[1, 2] * g[2, 1]
    )
    det = np.linalg.det(g)
    roots = np.roots([1.0, -tr, minors, -det])
    return np.sort(np.real(roots))[::-1]


class TestSvd:
    def test_identity(self):
        res = svd(np.eye(2))
        np.testing.assert_allclose(res.sigma, [1.0, 1.0])

    def test_diagonal_with_signs(self):
        res = svd(np.diag([3.0, -4.0]))
        np.testing.assert_allclose(res.sigma, [4.0, 3.0])

    def test_sigma_squared_matches_gram_eigenvalues(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a = rng.standard_normal((3, 3))
            res = svd(a)
            np.testing.assert_allclose(res.sigma**2, gram_eigenvalues_3x3(a), atol=1e-8)

    @pytest.mark.parametrize("shape", [(2, 2), (5, 3), (3, 5), (17, 17), (64, 64)])
    def test_reconstruction_and_orthonormality(self, shape):
        rng = np.random.default_rng(hash(shape) % 2**32)
        a = rng.standard_normal(shape)
        res = svd(a)
        err = np.linalg.norm(res.reconstruct() - a) / np.linalg.norm(a)
        assert err <= 1e-10
        k = min(shape)
        assert np.max(np.abs(res.u.T @ res.u - np.eye(k))) <= 1e-10
        assert np.max(np.abs(res.v.T @ res.v - np.eye(k))) <= 1e-10
        assert np.all(np.diff(res.sigma) <= 0)
        assert np.all(res.sigma >= 0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            svd(np.array([[1.0, np.nan], [0.0, 1.0]]))


class TestVectorization:
    def test_column_stacking(self):
        u = np.array([[1.0, 3.0], [2.0, 4.0]])
        np.testing.assert_array_equal(ve(u), [1.0, 2.0, 3.0, 4.0])
        np.testing.assert_array_equal(mat(ve(u)), u)

    def test_norm_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            u = rng.standard_normal((6, 6))
            assert np.linalg.norm(ve(u)) == np.linalg.norm(u)

    def test_mat_rejects_non_square_length(self):
        with pytest.raises(ValueError):
            mat(np.arange(5.0))


class TestOperatorNorm:
    def test_diagonal(self):
        assert operator_norm(MatrixMap(np.diag([1.0, 2.0]))) == pytest.approx(2.0, abs=1e-6)

    def test_stacked_identities_and_matrix(self):
        rng = np.random.default_rng(11)
        phi = rng.standard_normal((30, 20))
        n = phi.shape[1]
        stacked = StackedMap([IdentityMap(n), IdentityMap(n), IdentityMap(n), MatrixMap(phi)])
        expected = np.sqrt(3.0 + np.linalg.svd(phi, compute_uv=False)[0] ** 2)
        assert operator_norm(stacked) == pytest.approx(expected, abs=1e-4)

    def test_matches_svd_on_random_matrix(self):
        rng = np.random.default_rng(5)
        phi = rng.standard_normal((20, 10))
        top = np.linalg.svd(phi, compute_uv=False)[0]
        est = operator_norm(MatrixMap(phi))
        assert est == pytest.approx(top, rel=1e-6)
        assert est <= top * (1 + 1e-6)

    def test_never_exceeds_true_norm(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            a = rng.standard_normal((12, 8))
            assert operator_norm(MatrixMap(a)) <= np.linalg.svd(a, compute_uv=False)[0] * (1 + 1e-6)

    def test_deterministic(self):
        phi = np.random.default_rng(2).standard_normal((15, 7))
        assert operator_norm(MatrixMap(phi)) == operator_norm(MatrixMap(phi))

    def test_inconsistent_adjoint_rejected(self):
        class BadMap:
            shape = (4, 4)

            def apply(self, x):
                return 2.0 * x

            def adjoint(self, y):
                return 3.0 * y

        with pytest.raises(ValueError, match="adjoint"):
            operator_norm(BadMap())

    def test_warning_on_slow_convergence(self):
        # near-degenerate top of the spectrum: the 1e-9 relative-change
        # stop cannot trigger within the iteration cap
        a = np.diag([1.0, 1.0 - 1e-4] + [0.5] * 6)
        with pytest.warns(RuntimeWarning, match="did not converge"):
            est = operator_norm(MatrixMap(a))
        assert est >= (1 - 1e-3) * 1.0

    def test_zero_map(self):
        assert operator_norm(MatrixMap(np.zeros((3, 3)))) == 0.0
