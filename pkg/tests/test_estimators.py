import numpy as np
import pytest

from idsketch.estimators import (
    est_spectral_norm,
    id_residual_operator,
    matrix_operator,
)
from idsketch.linalg import svd_values
from idsketch.matrix_id import countsketch_id


class TestEstSpectralNorm:
    def test_known_spectrum(self):
        apply, adjoint = matrix_operator(np.diag([3.0, 1.0, 0.5]))
        est = est_spectral_norm(apply, adjoint, cols=3, iters=20, probes=3, seed=0)
        assert 2.999 <= est.value <= 3.0
        assert est.iterations == 20 and est.probes == 3

    def test_zero_operator(self):
        apply, adjoint = matrix_operator(np.zeros((4, 3)))
        assert est_spectral_norm(apply, adjoint, cols=3, seed=1).value == 0.0

    def test_never_exceeds_true_norm(self):
        rng = np.random.default_rng(2)
        for trial in range(50):
            a = rng.standard_normal((rng.integers(5, 40), rng.integers(5, 40)))
            apply, adjoint = matrix_operator(a)
            est = est_spectral_norm(
                apply, adjoint, cols=a.shape[1], iters=8, probes=2, seed=trial
            )
            assert est.value <= svd_values(a)[0] + 1e-10

    def test_rarely_far_below(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((100, 60))
        sigma1 = svd_values(a)[0]
        apply, adjoint = matrix_operator(a)
        hits = sum(
            est_spectral_norm(
                apply, adjoint, cols=60, iters=10, probes=2, seed=s
            ).value
            >= sigma1 / 100.0
            for s in range(200)
        )
        assert hits >= 198

    def test_monotone_in_iterations(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((30, 20))
        apply, adjoint = matrix_operator(a)
        prev = -np.inf
        for iters in (1, 2, 4, 8, 16):
            est = est_spectral_norm(
                apply, adjoint, cols=20, iters=iters, probes=2, seed=7
            )
            assert est.value >= prev - 1e-12
            prev = est.value

    def test_adjoint_mismatch_rejected(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((10, 8))
        b = rng.standard_normal((10, 8))
        apply, _ = matrix_operator(a)
        _, wrong_adjoint = matrix_operator(b)
        with pytest.raises(ValueError, match="adjoint"):
            est_spectral_norm(apply, wrong_adjoint, cols=8, seed=0)

    def test_parameter_validation(self):
        apply, adjoint = matrix_operator(np.eye(3))
        with pytest.raises(ValueError):
            est_spectral_norm(apply, adjoint, cols=0)
        with pytest.raises(ValueError):
            est_spectral_norm(apply, adjoint, cols=3, probes=0)


class TestIdResidualOperator:
    def test_matches_explicit_residual(self):
        import scipy.sparse as sp

        rng = np.random.default_rng(6)
        a = sp.random_array((60, 25), density=0.2, rng=rng, format="csc")
        decomp = countsketch_id(a, 8, seed=3)
        apply, adjoint = id_residual_operator(a, decomp)
        residual = a.toarray()[:, decomp.cols] @ decomp.coeffs - a.toarray()
        x = rng.standard_normal(25)
        y = rng.standard_normal(60)
        assert np.abs(apply(x) - residual @ x).max() <= 1e-10
        assert np.abs(adjoint(y) - residual.T @ y).max() <= 1e-10

    def test_estimates_residual_norm(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((50, 6)) @ rng.standard_normal((6, 30))
        a += 1e-3 * rng.standard_normal((50, 30))
        decomp = countsketch_id(a, 6, seed=1)
        apply, adjoint = id_residual_operator(a, decomp)
        est = est_spectral_norm(apply, adjoint, cols=30, iters=15, probes=3, seed=2)
        true = np.linalg.norm(a[:, decomp.cols] @ decomp.coeffs - a, 2)
        assert est.value <= true + 1e-10
        assert est.value >= true / 2.0
