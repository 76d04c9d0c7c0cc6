import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

import oracles
from prigsl.exceptions import InvalidScale, NonConvergence, NonFiniteValue
from prigsl.graph import complete_graph, laplacian, random_graph
from prigsl.spectral import (
    ChebyshevFilter,
    EigenDecomposition,
    apply_spectral_function,
    chebyshev_heat_filter,
    eig_symmetric,
    jacobi_eigh,
    lambda_max_estimate,
)


def check_decomposition(m, ed):
    n = m.shape[0]
    assert np.max(np.abs(ed.eigvecs.T @ ed.eigvecs - np.eye(n))) <= 1e-7
    assert np.max(np.abs(ed.reconstruct() - m)) <= 1e-6 * max(1.0, np.max(np.abs(m)))
    assert np.all(np.diff(ed.eigvals) >= 0)


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
class TestEigSymmetric:
    def test_identity(self, method):
        assert np.allclose(eig_symmetric(np.eye(4), method).eigvals, 1.0)

    def test_diagonal(self, method):
        ed = eig_symmetric(np.diag([3.0, 1.0, 2.0]), method)
        assert np.allclose(ed.eigvals, [1, 2, 3])
        assert np.allclose(np.abs(ed.eigvecs), np.eye(3)[:, [1, 2, 0]])

    def test_k3_laplacian(self, method):
        assert np.allclose(eig_symmetric(laplacian(complete_graph(3)), method).eigvals, [0, 3, 3])

    def test_symmetrizes_input(self, method):
        m = np.array([[2.0, 1.0 + 1e-10], [1.0, 2.0]])
        check_decomposition(0.5 * (m + m.T), eig_symmetric(m, method))

    def test_rejects_non_finite(self, method):
        with pytest.raises(NonFiniteValue):
            eig_symmetric(np.array([[np.nan, 0], [0, 1.0]]), method)


@given(st.integers(2, 25), st.integers(0, 2**31 - 1))
def test_jacobi_matches_lapack(n, seed):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((n, n))
    m = b + b.T
    ed = eig_symmetric(m, "jacobi")
    check_decomposition(m, ed)
    assert np.allclose(ed.eigvals, sla.eigh(m, eigvals_only=True), atol=1e-10)


def test_jacobi_on_psd_laplacian_nonnegative():
    lap = laplacian(random_graph(30, 0.3, seed=5, weighted=True))
    vals, _ = jacobi_eigh(lap)
    assert vals.min() >= -1e-8


def test_jacobi_sweep_cap():
    rng = np.random.default_rng(0)
    b = rng.standard_normal((8, 8))
    with pytest.raises(NonConvergence):
        jacobi_eigh(b + b.T, tol=0.0, max_sweeps=1)


class TestSpectralFunction:
    def test_identity_function_reconstructs(self):
        m = laplacian(random_graph(9, 0.5, seed=1))
        assert np.allclose(apply_spectral_function(eig_symmetric(m), lambda x: x), m, atol=1e-12)

    def test_constant_one_gives_identity(self):
        ed = eig_symmetric(laplacian(random_graph(7, 0.5, seed=2)))
        assert np.allclose(apply_spectral_function(ed, lambda x: np.exp(-0 * x)), np.eye(7))

    def test_k2_heat_closed_form(self):
        ed = eig_symmetric(laplacian(complete_graph(2)))
        e = np.exp(-2.0)
        expected = np.array([[1 + e, 1 - e], [1 - e, 1 + e]]) / 2
        assert np.allclose(apply_spectral_function(ed, lambda x: np.exp(-x)), expected, atol=1e-14)

    def test_non_finite_output(self):
        ed = EigenDecomposition(np.array([0.0, 1.0]), np.eye(2))
        with pytest.raises(NonFiniteValue):
            apply_spectral_function(ed, lambda x: np.where(x > 0, 1.0, np.inf))

    @given(st.integers(2, 12), st.integers(0, 1000), st.floats(0.0, 5.0))
    def test_heat_rows_sum_to_one(self, n, seed, s):
        adj = oracles.random_weighted_adjacency(n, 0.5, seed)
        psi = apply_spectral_function(eig_symmetric(oracles.laplacian(adj)), lambda x: np.exp(-s * x))
        assert np.allclose(psi.sum(axis=1), 1.0, atol=1e-7)
        assert np.allclose(psi, oracles.heat_kernel(adj, s), atol=1e-9)


class TestLambdaMax:
    def test_identity(self):
        assert lambda_max_estimate(np.eye(5)) == pytest.approx(1.01, abs=1e-6)

    def test_k2(self):
        assert lambda_max_estimate(laplacian(complete_graph(2))) == pytest.approx(2.02, abs=1e-4)

    def test_zero(self):
        assert lambda_max_estimate(np.zeros((4, 4))) == 0.0

    def test_upper_bound_on_random_laplacians(self):
        for seed in range(5):
            lap = laplacian(random_graph(30, 0.2, seed=seed, weighted=True))
            true = np.linalg.eigvalsh(lap).max()
            est = lambda_max_estimate(lap)
            assert true <= est <= 1.02 * true

    def test_iteration_cap(self):
        lap = laplacian(random_graph(30, 0.2, seed=1))
        with pytest.raises(NonConvergence):
            lambda_max_estimate(lap, iters=2, tol=1e-14)


class TestChebyshev:
    @pytest.mark.parametrize("s,lmax", [(0.3, 4.0), (1.0, 2.02), (2.5, 10.0)])
    def test_coefficients_match_bessel_series(self, s, lmax):
        filt = ChebyshevFilter.fit(lambda lam: np.exp(-s * lam), 10, lmax)
        assert np.allclose(filt.coefficients, oracles.heat_chebyshev_coefficients(s, lmax, 10),
                           atol=1e-12)

    def test_evaluate_close_to_function(self):
        filt = ChebyshevFilter.fit(lambda lam: np.exp(-0.7 * lam), 12, 5.0)
        lam = np.linspace(0, 5, 50)
        assert np.allclose(filt.evaluate(lam), np.exp(-0.7 * lam), atol=1e-8)

    @pytest.mark.parametrize("order", [1, 5, 10])
    def test_zero_scale_identity(self, order):
        lap = laplacian(random_graph(8, 0.5, seed=0))
        assert np.allclose(chebyshev_heat_filter(lap, 0.0, order), np.eye(8), atol=1e-6)

    def test_k2_matches_exact(self):
        lap = laplacian(complete_graph(2))
        approx = chebyshev_heat_filter(lap, 1.0, 10)
        assert np.max(np.abs(approx - oracles.heat_kernel(complete_graph(2).adjacency, 1.0))) <= 1e-6

    def test_k10_matches_exact(self):
        g = complete_graph(10)
        approx = chebyshev_heat_filter(laplacian(g), 0.5, 10)
        assert np.max(np.abs(approx - oracles.heat_kernel(g.adjacency, 0.5))) <= 1e-5

    def test_error_nonincreasing_in_order(self):
        g = random_graph(20, 0.3, seed=4, weighted=True)
        lap = laplacian(g)
        exact = oracles.heat_kernel(g.adjacency, 1.0)
        lmax = lambda_max_estimate(lap)
        errs = [np.max(np.abs(chebyshev_heat_filter(lap, 1.0, k, lmax) - exact))
                for k in (2, 4, 6, 8, 10)]
        assert all(b <= a for a, b in zip(errs, errs[1:]))

    def test_apply_to_signal(self):
        lap = laplacian(random_graph(10, 0.4, seed=3))
        filt = ChebyshevFilter.fit(lambda lam: np.exp(-0.4 * lam), 10, lambda_max_estimate(lap))
        x = np.random.default_rng(0).standard_normal((10, 2))
        assert np.allclose(filt.apply(lap, x), filt.apply(lap) @ x, atol=1e-12)

    def test_negative_scale(self):
        with pytest.raises(InvalidScale):
            chebyshev_heat_filter(np.eye(2), -0.1)

    def test_invalid_filter(self):
        with pytest.raises(ValueError):
            ChebyshevFilter(np.array([1.0]), 1.0)
        with pytest.raises(ValueError):
            ChebyshevFilter(np.array([1.0, 0.5]), 0.0)
