import numpy as np
import pytest

from fedt.errors import ContractError
from fedt.pca import pca_apply, pca_fit


class TestPcaFit:
    def test_line_in_3d_gives_one_component(self):
        rng = np.random.default_rng(50)
        t = rng.normal(0, 1, 200)
        X = np.outer(t, [1.0, -2.0, 0.5]) + 3.0
        proj = pca_fit(X, 0.95)
        assert proj.output_dim == 1

    def test_full_fraction_keeps_full_rank(self):
        rng = np.random.default_rng(51)
        X = rng.normal(0, 1, (100, 6))
        proj = pca_fit(X, 1.0)
        assert proj.output_dim == 6

    def test_rows_orthonormal(self):
        rng = np.random.default_rng(52)
        X = rng.normal(0, 1, (80, 10)) @ rng.normal(0, 1, (10, 10))
        proj = pca_fit(X, 0.9)
        gram = proj.components @ proj.components.T
        np.testing.assert_allclose(gram, np.eye(proj.output_dim), atol=1e-8)

    def test_retained_at_least_requested(self):
        rng = np.random.default_rng(53)
        for frac in (0.5, 0.8, 0.95, 1.0):
            X = rng.normal(0, 1, (60, 8)) * rng.uniform(0.1, 5, 8)
            proj = pca_fit(X, frac)
            assert proj.retained_variance >= frac - 1e-12

    def test_zero_variance_columns_dropped(self):
        rng = np.random.default_rng(54)
        X = rng.normal(0, 1, (50, 4))
        X[:, 2] = 7.0
        proj = pca_fit(X, 0.95)
        assert 2 not in proj.kept_columns.tolist()
        out = pca_apply(proj, X)
        assert out.shape[0] == 50

    def test_too_few_samples(self):
        with pytest.raises(ContractError):
            pca_fit(np.ones((1, 3)), 0.95)

    def test_bad_fraction(self):
        with pytest.raises(ContractError):
            pca_fit(np.random.default_rng(0).normal(0, 1, (10, 3)), 0.0)

    def test_reconstruction_error_equals_dropped_eigenvalue_mass(self):
        """Mean squared reconstruction residual (covariance normalization)
        equals the dropped eigenvalue sum, checked against a direct
        eigendecomposition oracle."""
        rng = np.random.default_rng(55)
        X = rng.normal(0, 1, (120, 12)) @ rng.normal(0, 1, (12, 12))
        proj = pca_fit(X, 0.8)
        Z = (X[:, proj.kept_columns] - proj.mean) / proj.scale
        reduced = pca_apply(proj, X)
        reconstructed = reduced @ proj.components
        residual = ((Z - reconstructed) ** 2).sum() / (len(X) - 1)
        # independent oracle: eigenvalues of the standardized covariance
        cov = Z.T @ Z / (len(X) - 1)
        eigenvalues = np.sort(np.linalg.eigvalsh(cov))[::-1]
        dropped = eigenvalues[proj.output_dim :].sum()
        assert residual == pytest.approx(dropped, rel=1e-8, abs=1e-10)


class TestPcaApply:
    def test_affine(self):
        rng = np.random.default_rng(56)
        X = rng.normal(0, 2, (60, 7))
        proj = pca_fit(X, 0.9)
        x, y = rng.normal(0, 2, (2, 7))
        for a in (0.0, 0.3, 1.0, 1.7, -0.4):
            left = pca_apply(proj, a * x + (1 - a) * y)
            right = a * pca_apply(proj, x) + (1 - a) * pca_apply(proj, y)
            np.testing.assert_allclose(left, right, atol=1e-9)

    def test_single_vector_matches_matrix_row(self):
        rng = np.random.default_rng(57)
        X = rng.normal(0, 1, (30, 5))
        proj = pca_fit(X, 0.95)
        batch = pca_apply(proj, X)
        for i in range(5):
            np.testing.assert_allclose(pca_apply(proj, X[i]), batch[i], rtol=1e-12)

    def test_projection_fingerprint_depends_on_source(self):
        rng = np.random.default_rng(58)
        X = rng.normal(0, 1, (40, 4))
        a = pca_fit(X, 0.9, source_fingerprint="one")
        b = pca_fit(X, 0.9, source_fingerprint="two")
        assert a.fingerprint != b.fingerprint
