"""Comparison models on the concatenated input [positions, velocities,
accelerations]: ordinary (ridge-stabilized) linear regression and a
multi-output RBF network trained by mini-batch Adam.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import EXPONENT_CLAMP
from .errors import NumericalError, ShapeError
from .optim import TrainConfig, TrainHistory, fit_minibatch, kmeans

DEFAULT_RIDGE = 1e-8


@dataclass
class LinearModel:
    W: np.ndarray  # (C, d)
    b: np.ndarray  # (C,)

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.W.shape[0]


@dataclass
class RbfNetwork:
    """y_ch = sum_i weights[i, ch] * exp(-widths[i] * ||x - centers[i]||^2)."""

    centers: np.ndarray  # (r, d)
    widths: np.ndarray  # (r,), >= 0; trained through a squared parameter
    weights: np.ndarray  # (r, C)

    @property
    def input_dim(self) -> int:
        return self.centers.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.weights.shape[1]


def fit_linear(X: np.ndarray, Y: np.ndarray, ridge: float = DEFAULT_RIDGE) -> LinearModel:
    """Least squares with a bias column; the ridge penalty applies to the
    weights only.  Solved through an orthogonal factorization of the
    (ridge-augmented) design matrix, never the explicit normal matrix.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != X.shape[0]:
        raise ShapeError(f"{X.shape[0]} inputs but {Y.shape[0]} targets")
    if ridge < 0:
        raise ShapeError("ridge must be >= 0")
    n, d = X.shape
    A = np.hstack([X, np.ones((n, 1))])
    B = Y
    if ridge > 0:
        A = np.vstack([A, np.sqrt(ridge) * np.eye(d + 1, d + 1)[:d]])
        B = np.vstack([Y, np.zeros((d, Y.shape[1]))])
    sol, _, rank, _ = np.linalg.lstsq(A, B, rcond=None)
    if ridge == 0 and rank < d + 1:
        raise NumericalError(
            "design matrix is rank deficient; pass ridge > 0 to regularize"
        )
    return LinearModel(W=sol[:d].T.copy(), b=sol[d].copy())


def predict_linear(model: LinearModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.input_dim:
        raise ShapeError(f"expected {model.input_dim} inputs, got {X.shape[1]}")
    return X @ model.W.T + model.b


def rbf_activations(centers: np.ndarray, widths: np.ndarray, X: np.ndarray) -> np.ndarray:
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)  # (n, r)
    return np.exp(-np.minimum(widths[None, :] * d2, EXPONENT_CLAMP))


def predict_rbf(model: RbfNetwork, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.input_dim:
        raise ShapeError(f"expected {model.input_dim} inputs, got {X.shape[1]}")
    return rbf_activations(model.centers, model.widths, X) @ model.weights


def predict_baseline(model: LinearModel | RbfNetwork, x: np.ndarray) -> np.ndarray:
    """Predict the output vector for a single input of length d."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if isinstance(model, LinearModel):
        return predict_linear(model, x)[0]
    return predict_rbf(model, x)[0]


WEIGHT_INIT_STD = 0.05


def fit_rbf_network(
    train_X: np.ndarray,
    train_Y: np.ndarray,
    val_X: np.ndarray,
    val_Y: np.ndarray,
    n_units: int,
    cfg: TrainConfig,
) -> tuple[RbfNetwork, TrainHistory]:
    """Fit an RBF network: centers seeded by k-means on the training inputs,
    unit widths, small random output weights; then centers, widths, and
    weights are all trained on the squared error.

    Widths stay nonnegative by optimizing their square roots.  Early
    stopping tracks the mean per-channel validation nMSE.
    """
    X = np.atleast_2d(np.asarray(train_X, dtype=np.float64))
    Y = np.asarray(train_Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    Xv = np.atleast_2d(np.asarray(val_X, dtype=np.float64))
    Yv = np.asarray(val_Y, dtype=np.float64)
    if Yv.ndim == 1:
        Yv = Yv[:, None]

    streams = np.random.SeedSequence([cfg.seed, 4]).spawn(3)
    centers = kmeans(X, n_units, seed=np.random.default_rng(streams[0]))
    root_widths = np.ones(n_units)
    weights = np.random.default_rng(streams[1]).normal(
        0.0, WEIGHT_INIT_STD, (n_units, Y.shape[1])
    )
    params = [centers, root_widths, weights]
    train_var = Y.var(axis=0)

    def batch_cost_grads(idx: np.ndarray):
        Xb, Yb = X[idx], Y[idx]
        diff = Xb[:, None, :] - centers[None, :, :]  # (b, r, d)
        d2 = (diff**2).sum(axis=2)
        q = root_widths[None, :] ** 2 * d2
        live = q < EXPONENT_CLAMP
        a = np.exp(-np.minimum(q, EXPONENT_CLAMP))
        resid = Yb - a @ weights  # (b, C)
        d_weights = -2.0 * (a.T @ resid)
        d_a = -2.0 * (resid @ weights.T)  # (b, r)
        coef = d_a * a * live
        d_roots = (coef * d2).sum(axis=0) * (-2.0 * root_widths)
        d_centers = 2.0 * root_widths[:, None] ** 2 * np.einsum(
            "br,brd->rd", coef, diff
        )
        return float((resid**2).sum()), [d_centers, d_roots, d_weights]

    def validation_metric() -> float:
        resid = Yv - rbf_activations(centers, root_widths**2, Xv) @ weights
        return float(((resid**2).mean(axis=0) / train_var).mean())

    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 5]))
    history = fit_minibatch(
        params, X.shape[0], batch_cost_grads, validation_metric, cfg, rng
    )
    model = RbfNetwork(centers=centers, widths=root_widths**2, weights=weights)
    return model, history
