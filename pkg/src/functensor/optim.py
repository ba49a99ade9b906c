"""Training machinery shared by every trainable model in the library.

Holds the run configuration, the Adam update rule, k-means clustering
(used to place kernel centers), and a generic mini-batch loop with
early stopping on a validation metric.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, ShapeError


@dataclass
class TrainConfig:
    """Hyperparameters for gradient-based fitting.

    ``patience`` counts consecutive epochs without validation improvement
    before stopping; 0 stops right after the first non-improving epoch.
    """

    rank: int
    learning_rate: float = 1e-3
    batch_size: int = 128
    max_epochs: int = 2000
    patience: int = 50
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.rank < 1:
            raise ConfigError(f"rank must be >= 1, got {self.rank}")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.patience < 0:
            raise ConfigError("patience must be >= 0")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ConfigError("adam betas must lie in (0, 1)")
        if self.adam_eps <= 0:
            raise ConfigError("adam_eps must be > 0")


@dataclass
class AdamState:
    """First/second moment accumulators, one per parameter array."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    cfg: TrainConfig,
) -> tuple[Sequence[np.ndarray], AdamState]:
    """One Adam update; parameter and state arrays are updated in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params, grads and state must have matching lengths")
    state.t += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps)
    return params, state


# --------------------------------------------------------------------------
# k-means (Lloyd's algorithm with k-means++ seeding)
# --------------------------------------------------------------------------

KMEANS_MAX_ITER = 100


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # (n, k) squared Euclidean distances
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _kmeanspp_seed(
    points: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray:
    n = points.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            # all remaining mass on duplicates of chosen points
            unchosen = np.setdiff1d(np.arange(n), chosen[:j])
            idx = rng.choice(unchosen)
        chosen[j] = idx
        d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(axis=1))
    return points[chosen].astype(np.float64, copy=True)


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int | np.random.Generator = 0,
    return_history: bool = False,
):
    """Cluster ``points`` (n, c) into ``k`` centers.

    Deterministic k-means++ seeding from ``seed``, then Lloyd iterations
    until the assignment is an exact fixed point (at most 100 iterations).
    Empty clusters are re-seeded to the point currently farthest from its
    assigned center.  Returns the (k, c) centers, plus the per-iteration
    objective (sum of min squared distances) if ``return_history``.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if k > n:
        raise ConfigError(f"cannot place {k} centers on {n} points")
    rng = np.random.default_rng(seed)

    centers = _kmeanspp_seed(points, k, rng)
    labels = None
    objective: list[float] = []
    for _ in range(KMEANS_MAX_ITER):
        d2 = _sq_dists(points, centers)
        new_labels = d2.argmin(axis=1)
        objective.append(float(d2[np.arange(n), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels

        counts = np.bincount(labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            # steal the point farthest from its current center
            worst = d2[np.arange(n), labels].argmax()
            labels[worst] = empty
            counts[empty] = 1
            d2[worst, :] = 0.0  # don't steal the same point twice
        for j in range(k):
            centers[j] = points[labels == j].mean(axis=0)

    if return_history:
        return centers, objective
    return centers


# --------------------------------------------------------------------------
# Generic mini-batch training loop
# --------------------------------------------------------------------------


@dataclass
class TrainHistory:
    """Per-epoch record of a fit: one entry of each list per completed epoch.

    ``train_cost`` is the mean squared error per training sample seen that
    epoch; ``val_metric`` is the validation nMSE; ``seconds`` the epoch
    wall time.  ``best_epoch`` is the 1-based epoch whose parameters the
    fit returned.
    """

    train_cost: list[float] = field(default_factory=list)
    val_metric: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    best_epoch: int = 0

    def __len__(self) -> int:
        return len(self.train_cost)


def fit_minibatch(
    params: list[np.ndarray],
    n_train: int,
    batch_cost_grads: Callable[[np.ndarray], tuple[float, list[np.ndarray]]],
    validation_metric: Callable[[], float],
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> TrainHistory:
    """Adam over seeded-shuffled mini-batches with early stopping.

    ``batch_cost_grads(indices)`` must return the summed squared error of
    the batch and gradients of that sum; the step uses the batch mean so
    the learning rate is batch-size-invariant.  The parameter arrays are
    updated in place; on return they hold the snapshot from the epoch
    with the best validation metric.
    """
    if cfg.batch_size > n_train:
        raise ConfigError(
            f"batch_size {cfg.batch_size} exceeds training set size {n_train}"
        )
    state = AdamState.for_params(params)
    history = TrainHistory()
    best_val = np.inf
    best_params = [p.copy() for p in params]
    stale = 0
    for epoch in range(1, cfg.max_epochs + 1):
        tic = time.perf_counter()
        order = rng.permutation(n_train)
        epoch_cost = 0.0
        for start in range(0, n_train, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            cost, grads = batch_cost_grads(idx)
            epoch_cost += cost
            scale = 1.0 / idx.size
            adam_step(params, [g * scale for g in grads], state, cfg)
        val = validation_metric()
        history.train_cost.append(epoch_cost / n_train)
        history.val_metric.append(float(val))
        history.seconds.append(time.perf_counter() - tic)
        if val < best_val:
            best_val = val
            best_params = [p.copy() for p in params]
            history.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale > cfg.patience:
                break
    for p, best in zip(params, best_params):
        p[...] = best
    return history
