"""Functional Tucker and PARAFAC regression models.

A model predicts one torque channel from three continuous input blocks
(positions, velocities, accelerations).  Each block is mapped to a latent
row by its own Gaussian kernel bank and the rows are combined through a
dense core tensor (Tucker) or a weight vector (PARAFAC).  All parameters
— kernel centers, shape factors, and the core — are trained jointly by
mini-batch Adam on the squared-error cost.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .basis import BasisGradient, GaussianBasis, basis_row, basis_rows, basis_backward_batch
from .errors import ConfigError, ShapeError
from .optim import TrainConfig, TrainHistory, fit_minibatch, kmeans
from .tensor_core import DenseTensor, parafac_eval, tucker_eval

# A supervised batch for one torque channel: three (n, c) input blocks and
# an (n,) target vector.
Batch = tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]


@dataclass
class FunctionalTuckerModel:
    core: DenseTensor  # (rank, rank, rank)
    bases: tuple[GaussianBasis, GaussianBasis, GaussianBasis]
    rank: int
    dof_index: int = 0

    def __post_init__(self):
        if self.core.dims != (self.rank,) * 3:
            raise ShapeError(
                f"core dims {self.core.dims} do not match rank {self.rank}"
            )
        _check_bases(self.bases, self.rank)

    @property
    def kind(self) -> str:
        return "tucker"

    @property
    def input_dim(self) -> int:
        return self.bases[0].input_dim


@dataclass
class FunctionalParafacModel:
    weights: np.ndarray  # (rank,)
    bases: tuple[GaussianBasis, GaussianBasis, GaussianBasis]
    rank: int
    dof_index: int = 0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if self.weights.size != self.rank:
            raise ShapeError(
                f"weight count {self.weights.size} does not match rank {self.rank}"
            )
        _check_bases(self.bases, self.rank)

    @property
    def kind(self) -> str:
        return "parafac"

    @property
    def input_dim(self) -> int:
        return self.bases[0].input_dim


FunctionalModel = FunctionalTuckerModel | FunctionalParafacModel


def _check_bases(bases, rank: int):
    if len(bases) != 3:
        raise ShapeError("exactly three basis banks are required")
    for b in bases:
        if b.rank != rank:
            raise ShapeError(f"basis rank {b.rank} does not match model rank {rank}")
        if b.input_dim != bases[0].input_dim:
            raise ShapeError("all basis banks must share one input dimension")


@dataclass
class FunctionalGradients:
    """Gradients of the summed squared-error cost over a batch."""

    d_core: np.ndarray | None  # (rank, rank, rank) for Tucker models
    d_weights: np.ndarray | None  # (rank,) for PARAFAC models
    d_bases: tuple[BasisGradient, BasisGradient, BasisGradient]


# --------------------------------------------------------------------------
# Construction
# --------------------------------------------------------------------------

CORE_INIT_STD = 0.05


def init_model(
    train_inputs: tuple[np.ndarray, np.ndarray, np.ndarray],
    cfg: TrainConfig,
    kind: str,
    dof_index: int = 0,
    free_precision: bool = False,
) -> FunctionalModel:
    """Build a fresh model: kernel centers from k-means on each input block,
    identity shape factors, and core/weights drawn from N(0, 0.05^2).

    Deterministic given ``cfg.seed`` and ``dof_index``; different DoF models
    get independent streams.
    """
    if kind not in ("tucker", "parafac"):
        raise ConfigError(f"kind must be 'tucker' or 'parafac', got {kind!r}")
    x1, x2, x3 = (np.atleast_2d(np.asarray(x, dtype=np.float64)) for x in train_inputs)
    if cfg.rank > x1.shape[0]:
        raise ConfigError(
            f"rank {cfg.rank} exceeds the {x1.shape[0]} training samples"
        )
    streams = np.random.SeedSequence([cfg.seed, dof_index]).spawn(4)
    bases = tuple(
        GaussianBasis.identity_init(
            kmeans(x, cfg.rank, seed=np.random.default_rng(s)),
            free_precision=free_precision,
        )
        for x, s in zip((x1, x2, x3), streams[:3])
    )
    rng = np.random.default_rng(streams[3])
    if kind == "tucker":
        core = DenseTensor(
            dims=(cfg.rank,) * 3,
            values=rng.normal(0.0, CORE_INIT_STD, cfg.rank**3),
        )
        return FunctionalTuckerModel(core=core, bases=bases, rank=cfg.rank,
                                     dof_index=dof_index)
    weights = rng.normal(0.0, CORE_INIT_STD, cfg.rank)
    return FunctionalParafacModel(weights=weights, bases=bases, rank=cfg.rank,
                                  dof_index=dof_index)


def clone_model(model: FunctionalModel) -> FunctionalModel:
    return copy.deepcopy(model)


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


def forward(model: FunctionalModel, x1, x2, x3) -> float:
    """Predict one sample: combine the three factor rows through the core."""
    rows = [basis_row(x, b) for x, b in zip((x1, x2, x3), model.bases)]
    if isinstance(model, FunctionalTuckerModel):
        return tucker_eval(model.core, rows)
    return parafac_eval(model.weights, rows)


PREDICT_CHUNK = 4096


def predict(model: FunctionalModel, X1, X2, X3) -> np.ndarray:
    """Vectorized forward pass over (n, c) input blocks; returns (n,)."""
    X1, X2, X3 = (np.atleast_2d(np.asarray(x, dtype=np.float64)) for x in (X1, X2, X3))
    n = X1.shape[0]
    out = np.empty(n)
    for start in range(0, n, PREDICT_CHUNK):
        sl = slice(start, min(start + PREDICT_CHUNK, n))
        rows = [basis_rows(X[sl], b) for X, b in zip((X1, X2, X3), model.bases)]
        out[sl] = _combine_rows(model, rows)
    return out


def _combine_rows(model: FunctionalModel, rows: list[np.ndarray]) -> np.ndarray:
    a1, a2, a3 = rows
    if isinstance(model, FunctionalTuckerModel):
        partial = np.einsum("ni,ijk->njk", a1, model.core.array)
        return np.einsum("njk,nj,nk->n", partial, a2, a3)
    return np.einsum("r,nr,nr,nr->n", model.weights, a1, a2, a3)


def cost(model: FunctionalModel, batch: Batch) -> float:
    """Summed squared error of the model over the batch."""
    x1, x2, x3, y = batch
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    residual = y - predict(model, x1, x2, x3)
    return float(residual @ residual)


def gradients(model: FunctionalModel, batch: Batch) -> FunctionalGradients:
    """Analytic gradients of ``cost`` w.r.t. every trainable parameter."""
    x1, x2, x3, y = batch
    X = [np.atleast_2d(np.asarray(x, dtype=np.float64)) for x in (x1, x2, x3)]
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size == 0:
        raise ShapeError("batch must be non-empty")
    rows = [basis_rows(Xi, b) for Xi, b in zip(X, model.bases)]
    a1, a2, a3 = rows

    if isinstance(model, FunctionalTuckerModel):
        core = model.core.array
        # partial contractions reused for the prediction and all upstreams
        p1 = np.einsum("ni,ijk->njk", a1, core)  # core with mode-1 row folded in
        yhat = np.einsum("njk,nj,nk->n", p1, a2, a3)
        w = -2.0 * (y - yhat)  # d cost / d prediction
        d_core = np.einsum("n,ni,nj,nk->ijk", w, a1, a2, a3)
        q3 = np.einsum("ijk,nk->nij", core, a3)
        u1 = np.einsum("nij,nj->ni", q3, a2)
        u2 = np.einsum("njk,nk->nj", p1, a3)
        u3 = np.einsum("njk,nj->nk", p1, a2)
        d_weights = None
    else:
        g = model.weights
        prod = a1 * a2 * a3
        yhat = prod @ g
        w = -2.0 * (y - yhat)
        d_weights = w @ prod
        u1 = (a2 * a3) * g[None, :]
        u2 = (a1 * a3) * g[None, :]
        u3 = (a1 * a2) * g[None, :]
        d_core = None

    d_bases = tuple(
        basis_backward_batch(Xi, b, w[:, None] * u)
        for Xi, b, u in zip(X, model.bases, (u1, u2, u3))
    )
    return FunctionalGradients(d_core=d_core, d_weights=d_weights, d_bases=d_bases)


# --------------------------------------------------------------------------
# Training
# --------------------------------------------------------------------------


def _trainable_arrays(model: FunctionalModel) -> list[np.ndarray]:
    head = model.core.values if isinstance(model, FunctionalTuckerModel) else model.weights
    arrays = [head]
    for b in model.bases:
        arrays.extend((b.centers, b.shape_factors))
    return arrays


def _gradient_arrays(model: FunctionalModel, g: FunctionalGradients) -> list[np.ndarray]:
    head = g.d_core.reshape(-1) if g.d_core is not None else g.d_weights
    arrays = [head]
    for bg in g.d_bases:
        arrays.extend((bg.d_mu, bg.d_factors))
    return arrays


def train(
    model: FunctionalModel,
    train_data: Batch,
    val_data: Batch,
    cfg: TrainConfig,
) -> tuple[FunctionalModel, TrainHistory]:
    """Fit a copy of ``model`` on ``train_data`` with early stopping on the
    validation nMSE; the returned model holds the best-validation snapshot.

    The validation metric divides by the training-target variance, so it is
    comparable across epochs and reruns.
    """
    x1, x2, x3, y = (np.asarray(a, dtype=np.float64) for a in train_data)
    y = y.reshape(-1)
    xv1, xv2, xv3, yv = (np.asarray(a, dtype=np.float64) for a in val_data)
    yv = yv.reshape(-1)
    train_var = float(y.var())
    if train_var <= 0:
        raise ConfigError("training targets have zero variance")

    m = clone_model(model)
    params = _trainable_arrays(m)

    def batch_cost_grads(idx: np.ndarray):
        batch = (x1[idx], x2[idx], x3[idx], y[idx])
        g = gradients(m, batch)
        c = cost(m, batch)
        return c, _gradient_arrays(m, g)

    def validation_metric() -> float:
        resid = yv - predict(m, xv1, xv2, xv3)
        return float(resid @ resid) / yv.size / train_var

    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, m.dof_index, 1]))
    history = fit_minibatch(
        params, y.size, batch_cost_grads, validation_metric, cfg, rng
    )
    return m, history


def train_all_dofs(
    train_inputs: tuple[np.ndarray, np.ndarray, np.ndarray],
    train_targets: np.ndarray,
    val_inputs: tuple[np.ndarray, np.ndarray, np.ndarray],
    val_targets: np.ndarray,
    cfg: TrainConfig,
    kind: str,
    free_precision: bool = False,
) -> tuple[list[FunctionalModel], list[TrainHistory]]:
    """One independent model per torque channel (column of the targets).

    Inits and shuffles derive from (seed, dof_index), so the result does not
    depend on the order the channels are trained in.
    """
    Y = np.atleast_2d(np.asarray(train_targets, dtype=np.float64))
    Yv = np.atleast_2d(np.asarray(val_targets, dtype=np.float64))
    models, histories = [], []
    for dof in range(Y.shape[1]):
        m0 = init_model(train_inputs, cfg, kind, dof_index=dof,
                        free_precision=free_precision)
        m, h = train(m0, (*train_inputs, Y[:, dof]), (*val_inputs, Yv[:, dof]), cfg)
        models.append(m)
        histories.append(h)
    return models, histories
