"""Learnable factor maps from continuous inputs to latent mode rows.

A bank of Gaussian kernels turns a c-dimensional input into a vector of
activations, one per latent component; those vectors are the factor rows
consumed by the tensor kernels.  Gradients with respect to the kernel
parameters (centers and distance-weighting factors) are analytic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError

# exp(-50) ~ 2e-22 is numerically zero here; clamping the quadratic form
# avoids denormals and, with free_precision, overflow.  Gradients through
# clamped activations are zeroed.
EXPONENT_CLAMP = 50.0


def rbf_univariate(v: float, mu: float, gamma: float) -> float:
    """Gaussian bump exp(-gamma * (mu - v)^2); always in (0, 1]."""
    if not (np.isfinite(v) and np.isfinite(mu) and np.isfinite(gamma)):
        raise DomainError("rbf_univariate requires finite inputs")
    if gamma < 0:
        raise DomainError(f"width must be >= 0, got {gamma}")
    q = gamma * (mu - v) ** 2
    return float(np.exp(-min(q, EXPONENT_CLAMP)))


@dataclass
class UnivariateRbfBank:
    """A bank of 1-d Gaussian bumps: centers and inverse squared widths."""

    centers: np.ndarray  # (rank,)
    widths: np.ndarray  # (rank,), gamma >= 0

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.float64).reshape(-1)
        self.widths = np.asarray(self.widths, dtype=np.float64).reshape(-1)
        if self.centers.shape != self.widths.shape:
            raise ShapeError("centers and widths must have equal length")
        if np.any(self.widths < 0):
            raise DomainError("all widths must be >= 0")

    @property
    def rank(self) -> int:
        return self.centers.size

    def activations(self, v: float) -> np.ndarray:
        q = np.minimum(self.widths * (self.centers - v) ** 2, EXPONENT_CLAMP)
        return np.exp(-q)


@dataclass
class GaussianBasis:
    """A bank of multivariate Gaussian kernels over a c-dimensional input.

    Kernel r activates as exp(-(mu_r - x)^T D_r (mu_r - x)).  By default
    D_r = L_r @ L_r.T with ``shape_factors`` holding the L_r, which keeps
    the quadratic form nonnegative and the activation in (0, 1].  With
    ``free_precision=True`` the stored matrices are D_r itself,
    unconstrained, and only the exponent clamp bounds the activation.
    """

    centers: np.ndarray  # (rank, c)
    shape_factors: np.ndarray = field(repr=False)  # (rank, c, c): L_r, or D_r if free
    free_precision: bool = False

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        self.shape_factors = np.asarray(self.shape_factors, dtype=np.float64)
        r, c = self.centers.shape
        if self.shape_factors.shape != (r, c, c):
            raise ShapeError(
                f"shape_factors must be ({r}, {c}, {c}), "
                f"got {self.shape_factors.shape}"
            )

    @property
    def rank(self) -> int:
        return self.centers.shape[0]

    @property
    def input_dim(self) -> int:
        return self.centers.shape[1]

    @classmethod
    def identity_init(
        cls, centers: np.ndarray, free_precision: bool = False
    ) -> "GaussianBasis":
        """Bank with the given centers and every D_r the identity matrix."""
        centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        r, c = centers.shape
        factors = np.broadcast_to(np.eye(c), (r, c, c)).copy()
        return cls(centers=centers.copy(), shape_factors=factors,
                   free_precision=free_precision)

    def copy(self) -> "GaussianBasis":
        return GaussianBasis(self.centers.copy(), self.shape_factors.copy(),
                             self.free_precision)

    def quadratic_forms(self, x: np.ndarray) -> np.ndarray:
        """Unclamped (mu_r - x)^T D_r (mu_r - x) for every kernel, shape (rank,)."""
        x = _check_input(x, self.input_dim)
        diff = self.centers - x[None, :]
        if self.free_precision:
            return np.einsum("rc,rcd,rd->r", diff, self.shape_factors, diff)
        z = np.einsum("rc,rcd->rd", diff, self.shape_factors)
        return np.einsum("rd,rd->r", z, z)

    def _clamp(self, q: np.ndarray) -> np.ndarray:
        lo = -EXPONENT_CLAMP if self.free_precision else 0.0
        return np.clip(q, lo, EXPONENT_CLAMP)


@dataclass
class BasisGradient:
    """Gradients of a scalar loss w.r.t. one bank's parameters."""

    d_mu: np.ndarray  # (rank, c)
    d_factors: np.ndarray  # (rank, c, c): w.r.t. L, or D if free_precision


def _check_input(x: np.ndarray, c: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != c:
        raise ShapeError(f"input has dimension {x.size}, basis expects {c}")
    return x


def gaussian_activation(x: np.ndarray, basis: GaussianBasis, r: int) -> float:
    """Activation of kernel ``r`` at ``x``; quadratic form clamped before exp."""
    x = _check_input(x, basis.input_dim)
    if not 0 <= r < basis.rank:
        raise ShapeError(f"kernel index {r} out of range for rank {basis.rank}")
    diff = basis.centers[r] - x
    mat = basis.shape_factors[r]
    if basis.free_precision:
        q = float(diff @ mat @ diff)
    else:
        q = float(np.sum((diff @ mat) ** 2))
    return float(np.exp(-basis._clamp(np.asarray(q))))


def basis_row(x: np.ndarray, basis: GaussianBasis) -> np.ndarray:
    """All kernel activations at ``x`` as one factor row of length rank."""
    return np.exp(-basis._clamp(basis.quadratic_forms(x)))


def basis_rows(X: np.ndarray, basis: GaussianBasis) -> np.ndarray:
    """Batched factor rows: (n, c) inputs -> (n, rank) activations."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != basis.input_dim:
        raise ShapeError(
            f"inputs have dimension {X.shape[1]}, basis expects {basis.input_dim}"
        )
    diff = basis.centers[None, :, :] - X[:, None, :]  # (n, rank, c)
    if basis.free_precision:
        q = np.einsum("nrc,rcd,nrd->nr", diff, basis.shape_factors, diff)
    else:
        z = np.einsum("nrc,rcd->nrd", diff, basis.shape_factors)
        q = np.einsum("nrd,nrd->nr", z, z)
    return np.exp(-basis._clamp(q))


def basis_backward(
    x: np.ndarray, basis: GaussianBasis, upstream: np.ndarray
) -> BasisGradient:
    """Gradient of sum_r upstream[r] * activation_r(x) w.r.t. the parameters.

    Kernels whose quadratic form hit the clamp contribute zero gradient.
    """
    upstream = np.asarray(upstream, dtype=np.float64).reshape(-1)
    if upstream.size != basis.rank:
        raise ShapeError(
            f"upstream has length {upstream.size}, basis rank is {basis.rank}"
        )
    x = _check_input(x, basis.input_dim)
    return basis_backward_batch(x[None, :], basis, upstream[None, :])


def basis_backward_batch(
    X: np.ndarray, basis: GaussianBasis, upstream: np.ndarray
) -> BasisGradient:
    """Batched ``basis_backward``: gradients summed over the n rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    upstream = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
    if upstream.shape != (X.shape[0], basis.rank):
        raise ShapeError(
            f"upstream must be ({X.shape[0]}, {basis.rank}), got {upstream.shape}"
        )
    diff = basis.centers[None, :, :] - X[:, None, :]  # (n, rank, c)
    mats = basis.shape_factors
    if basis.free_precision:
        q = np.einsum("nrc,rcd,nrd->nr", diff, mats, diff)
        live = (q > -EXPONENT_CLAMP) & (q < EXPONENT_CLAMP)
    else:
        z = np.einsum("nrc,rcd->nrd", diff, mats)
        q = np.einsum("nrd,nrd->nr", z, z)
        live = q < EXPONENT_CLAMP
    a = np.exp(-basis._clamp(q))
    # d activation / d theta = -a * d q / d theta, zeroed where clamped
    coef = upstream * a * live  # (n, rank)
    if basis.free_precision:
        dq_dmu = np.einsum("rcd,nrd->nrc", mats, diff) + np.einsum(
            "rdc,nrd->nrc", mats, diff
        )
        d_factors = -np.einsum("nr,nrc,nrd->rcd", coef, diff, diff)
    else:
        dq_dmu = 2.0 * np.einsum("rcd,nrd->nrc", mats, z)
        d_factors = -2.0 * np.einsum("nr,nrc,nrd->rcd", coef, diff, z)
    d_mu = -np.einsum("nr,nrc->rc", coef, dq_dmu)
    return BasisGradient(d_mu=d_mu, d_factors=d_factors)
