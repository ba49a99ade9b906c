"""Gaussian kernel banks: activations, bounds, and analytic gradients."""

import numpy as np
import pytest

from functensor import (
    DomainError,
    GaussianBasis,
    ShapeError,
    UnivariateRbfBank,
    basis_backward,
    basis_row,
    basis_rows,
    gaussian_activation,
    rbf_univariate,
)
from functensor.basis import EXPONENT_CLAMP

from conftest import assert_grad_close, central_difference


def random_basis(rng, rank, c, free_precision=False, spread=0.6):
    centers = rng.normal(size=(rank, c))
    factors = np.broadcast_to(np.eye(c), (rank, c, c)).copy()
    factors += spread * rng.normal(size=(rank, c, c))
    return GaussianBasis(centers=centers, shape_factors=factors,
                         free_precision=free_precision)


class TestRbfUnivariate:
    def test_at_center(self):
        for gamma in (0.0, 0.5, 10.0):
            assert rbf_univariate(1.3, 1.3, gamma) == 1.0

    def test_unit_distance(self):
        assert rbf_univariate(1.0, 0.0, 1.0) == pytest.approx(np.exp(-1), abs=1e-12)

    def test_two_sigma(self):
        assert rbf_univariate(2.0, 0.0, 0.5) == pytest.approx(np.exp(-2), abs=1e-12)

    def test_bounded(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            v, mu = rng.normal(size=2) * 10
            gamma = rng.uniform(0, 5)
            a = rbf_univariate(v, mu, gamma)
            assert 0.0 < a <= 1.0

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            rbf_univariate(np.nan, 0.0, 1.0)
        with pytest.raises(DomainError):
            rbf_univariate(0.0, np.inf, 1.0)

    def test_rejects_negative_width(self):
        with pytest.raises(DomainError):
            rbf_univariate(0.0, 0.0, -1.0)


class TestGaussianActivation:
    def test_at_center(self):
        rng = np.random.default_rng(1)
        basis = random_basis(rng, 3, 2)
        for r in range(3):
            assert gaussian_activation(basis.centers[r], basis, r) == 1.0

    def test_identity_factors_unit_offset(self):
        basis = GaussianBasis.identity_init(np.zeros((1, 3)))
        x = np.array([1.0, 0.0, 0.0])
        assert gaussian_activation(x, basis, 0) == pytest.approx(np.exp(-1), abs=1e-15)

    def test_one_dim_reduces_to_univariate(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            mu = rng.normal()
            gamma = rng.uniform(0, 4)
            v = rng.normal() * 2
            basis = GaussianBasis(
                centers=np.array([[mu]]),
                shape_factors=np.array([[[np.sqrt(gamma)]]]),
            )
            assert gaussian_activation(np.array([v]), basis, 0) == pytest.approx(
                rbf_univariate(v, mu, gamma), abs=1e-15
            )

    def test_univariate_bank_equivalence(self):
        rng = np.random.default_rng(3)
        mus = rng.normal(size=4)
        gammas = rng.uniform(0, 3, size=4)
        bank = UnivariateRbfBank(centers=mus, widths=gammas)
        basis = GaussianBasis(
            centers=mus[:, None],
            shape_factors=np.sqrt(gammas)[:, None, None],
        )
        for v in rng.normal(size=10) * 3:
            np.testing.assert_allclose(
                bank.activations(v), basis_row(np.array([v]), basis), atol=1e-15
            )

    def test_bounded_and_monotone_in_quadratic_form(self):
        basis = GaussianBasis.identity_init(np.zeros((1, 1)))
        xs = np.linspace(0, 12, 200)
        acts = np.array([gaussian_activation(np.array([x]), basis, 0) for x in xs])
        assert np.all(acts > 0) and np.all(acts <= 1.0)
        assert np.all(np.diff(acts) <= 0)

    def test_isotropic_symmetry(self):
        basis = GaussianBasis.identity_init(np.array([[0.5, -0.2]]))
        delta = np.array([0.3, 0.7])
        a_plus = gaussian_activation(basis.centers[0] + delta, basis, 0)
        a_minus = gaussian_activation(basis.centers[0] - delta, basis, 0)
        assert a_plus == pytest.approx(a_minus, abs=1e-15)

    def test_clamp_keeps_activation_positive(self):
        basis = GaussianBasis.identity_init(np.zeros((1, 1)))
        a = gaussian_activation(np.array([1e4]), basis, 0)
        assert a == pytest.approx(np.exp(-EXPONENT_CLAMP))

    def test_shape_errors(self):
        basis = GaussianBasis.identity_init(np.zeros((2, 2)))
        with pytest.raises(ShapeError):
            gaussian_activation(np.zeros(3), basis, 0)
        with pytest.raises(ShapeError):
            gaussian_activation(np.zeros(2), basis, 5)


class TestBasisRow:
    def test_center_hits_one(self):
        basis = GaussianBasis.identity_init(np.array([[0.0], [1.0], [2.0]]))
        row = basis_row(np.array([0.0]), basis)
        assert row[0] == 1.0
        assert np.all((row[1:] > 0) & (row[1:] < 1))

    def test_identical_kernels_identical_entries(self):
        basis = GaussianBasis.identity_init(np.ones((4, 2)) * 0.3)
        row = basis_row(np.array([1.0, -0.5]), basis)
        assert np.all(row == row[0])

    def test_matches_per_entry_activation(self):
        rng = np.random.default_rng(4)
        basis = random_basis(rng, 5, 3)
        x = rng.normal(size=3)
        row = basis_row(x, basis)
        for r in range(5):
            assert row[r] == pytest.approx(
                gaussian_activation(x, basis, r), abs=1e-15
            )

    def test_batch_matches_single(self):
        rng = np.random.default_rng(5)
        basis = random_basis(rng, 4, 2, free_precision=True)
        X = rng.normal(size=(6, 2))
        rows = basis_rows(X, basis)
        for i in range(6):
            np.testing.assert_allclose(rows[i], basis_row(X[i], basis), atol=1e-15)


class TestBasisBackward:
    def test_zero_at_centers(self):
        basis = GaussianBasis.identity_init(np.zeros((3, 2)))
        g = basis_backward(np.zeros(2), basis, np.ones(3))
        np.testing.assert_array_equal(g.d_mu, 0.0)

    def test_zero_upstream(self):
        rng = np.random.default_rng(6)
        basis = random_basis(rng, 3, 2)
        g = basis_backward(rng.normal(size=2), basis, np.zeros(3))
        np.testing.assert_array_equal(g.d_mu, 0.0)
        np.testing.assert_array_equal(g.d_factors, 0.0)

    @pytest.mark.parametrize("free_precision", [False, True])
    def test_matches_finite_differences(self, free_precision):
        rng = np.random.default_rng(7)
        for _ in range(30):
            c = int(rng.integers(1, 4))
            rank = int(rng.integers(1, 5))
            basis = random_basis(rng, rank, c, free_precision=free_precision)
            x = rng.normal(size=c)
            upstream = rng.normal(size=rank) + np.sign(rng.normal(size=rank)) * 0.5
            analytic = basis_backward(x, basis, upstream)

            def f():
                return float(upstream @ basis_row(x, basis))

            num_mu, s1 = central_difference(f, basis.centers)
            num_L, s2 = central_difference(f, basis.shape_factors)
            scale = max(s1, s2)
            assert_grad_close(analytic.d_mu, num_mu, scale, rtol=1e-5)
            assert_grad_close(analytic.d_factors, num_L, scale, rtol=1e-5)

    def test_clamped_kernels_get_zero_gradient(self):
        basis = GaussianBasis.identity_init(np.array([[0.0], [100.0]]))
        g = basis_backward(np.array([0.0]), basis, np.ones(2))
        # kernel 1 sits 100 away: quadratic form far past the clamp
        np.testing.assert_array_equal(g.d_mu[1], 0.0)
        np.testing.assert_array_equal(g.d_factors[1], 0.0)

    def test_shape_error(self):
        basis = GaussianBasis.identity_init(np.zeros((2, 2)))
        with pytest.raises(ShapeError):
            basis_backward(np.zeros(2), basis, np.ones(3))


class TestFreePrecision:
    def test_matches_factored_at_identity(self):
        centers = np.array([[0.1, -0.4], [1.0, 0.2]])
        factored = GaussianBasis.identity_init(centers)
        free = GaussianBasis.identity_init(centers, free_precision=True)
        x = np.array([0.5, 0.5])
        np.testing.assert_allclose(
            basis_row(x, factored), basis_row(x, free), atol=1e-15
        )

    def test_negative_form_is_clamped(self):
        # an indefinite D can push the form negative; activation must stay finite
        basis = GaussianBasis(
            centers=np.zeros((1, 1)),
            shape_factors=np.array([[[-1.0]]]),
            free_precision=True,
        )
        a = gaussian_activation(np.array([100.0]), basis, 0)
        assert a == pytest.approx(np.exp(EXPONENT_CLAMP))
        g = basis_backward(np.array([100.0]), basis, np.ones(1))
        np.testing.assert_array_equal(g.d_mu, 0.0)
