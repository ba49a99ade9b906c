"""Regression over discrete input tuples via sparse-tensor factorization.

Training tuples are cells of a huge, mostly-unknown tensor; a PARAFAC
decomposition is fitted to the observed cells only, and predictions
reconstruct single cells on demand from the per-variable embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

from .errors import ConfigError, DataFormatError, ShapeError, UnknownCategoryError
from .optim import TrainConfig, TrainHistory, fit_minibatch
from .tensor_core import parafac_eval

RawTuple = tuple[Hashable, ...]


@dataclass(frozen=True)
class DiscreteSample:
    """One observed tensor cell: category indices per variable plus target."""

    values: tuple[int, ...]
    target: float


@dataclass
class DiscreteModel:
    """Per-variable embedding matrices, PARAFAC weights, and vocabularies."""

    embeddings: list[np.ndarray]  # variable i: (F_i, rank)
    weights: np.ndarray  # (rank,)
    vocab: list[dict[Hashable, int]]

    @property
    def rank(self) -> int:
        return self.weights.size

    @property
    def n_variables(self) -> int:
        return len(self.embeddings)


def build_vocab(raw_tuples: Sequence[RawTuple]) -> list[dict[Hashable, int]]:
    """Label-to-index maps per variable, indices in first-occurrence order."""
    if not raw_tuples:
        raise ConfigError("cannot build a vocabulary from zero samples")
    n_vars = len(raw_tuples[0])
    vocab: list[dict[Hashable, int]] = [dict() for _ in range(n_vars)]
    for t in raw_tuples:
        if len(t) != n_vars:
            raise ShapeError(
                f"tuple {t!r} has {len(t)} variables, expected {n_vars}"
            )
        for i, label in enumerate(t):
            vocab[i].setdefault(label, len(vocab[i]))
    return vocab


def encode_samples(
    raw_tuples: Sequence[RawTuple],
    targets: Sequence[float],
    vocab: list[dict[Hashable, int]],
) -> list[DiscreteSample]:
    samples = []
    for t, y in zip(raw_tuples, targets):
        idx = tuple(_lookup(vocab, i, label) for i, label in enumerate(t))
        samples.append(DiscreteSample(values=idx, target=float(y)))
    return samples


def _lookup(vocab, variable: int, label: Hashable) -> int:
    try:
        return vocab[variable][label]
    except KeyError:
        raise UnknownCategoryError(variable, label) from None


EMBEDDING_INIT_STD = 0.05


def fit_discrete(
    samples: Sequence[DiscreteSample],
    rank: int,
    cfg: TrainConfig,
    vocab: list[dict[Hashable, int]] | None = None,
) -> tuple[DiscreteModel, TrainHistory]:
    """Fit embeddings and weights by mini-batch Adam on the squared error
    over the observed cells only; unobserved cells never enter the loss.

    The history's validation column tracks the full training loss (there
    is no held-out set at this level).
    """
    if rank < 1:
        raise ConfigError(f"rank must be >= 1, got {rank}")
    if not samples:
        raise ConfigError("need at least one sample")
    n_vars = len(samples[0].values)
    idx = np.array([s.values for s in samples], dtype=np.int64)  # (n, S)
    y = np.array([s.target for s in samples], dtype=np.float64)
    if vocab is not None and len(vocab) != n_vars:
        raise ShapeError("vocabulary count does not match sample arity")
    sizes = [
        len(vocab[i]) if vocab is not None else int(idx[:, i].max()) + 1
        for i in range(n_vars)
    ]
    for i, f in enumerate(sizes):
        if idx[:, i].min() < 0 or idx[:, i].max() >= f:
            raise ShapeError(f"variable {i} has an index outside 0..{f - 1}")

    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))
    embeddings = [rng.normal(0.0, EMBEDDING_INIT_STD, (f, rank)) for f in sizes]
    weights = rng.normal(0.0, EMBEDDING_INIT_STD, rank)
    params = [weights] + embeddings

    def batch_cost_grads(batch_idx: np.ndarray):
        rows = [emb[idx[batch_idx, i]] for i, emb in enumerate(embeddings)]  # (b, rank)
        prod = np.prod(rows, axis=0)
        yhat = prod @ weights
        resid = y[batch_idx] - yhat
        w = -2.0 * resid  # (b,)
        d_weights = w @ prod
        grads = [d_weights]
        for i, emb in enumerate(embeddings):
            others = weights[None, :].repeat(batch_idx.size, axis=0)
            for j, r in enumerate(rows):
                if j != i:
                    others = others * r
            contrib = w[:, None] * others  # (b, rank)
            d_emb = np.zeros_like(emb)
            np.add.at(d_emb, idx[batch_idx, i], contrib)
            grads.append(d_emb)
        return float(resid @ resid), grads

    def training_loss() -> float:
        rows = [emb[idx[:, i]] for i, emb in enumerate(embeddings)]
        resid = y - np.prod(rows, axis=0) @ weights
        return float(resid @ resid) / y.size

    cfg = TrainConfig(**{**cfg.__dict__, "rank": rank})
    rng_shuffle = np.random.default_rng(np.random.SeedSequence([cfg.seed, 3]))
    history = fit_minibatch(
        params, y.size, batch_cost_grads, training_loss, cfg, rng_shuffle
    )
    model = DiscreteModel(
        embeddings=embeddings,
        weights=weights,
        vocab=vocab if vocab is not None else [
            {i: i for i in range(f)} for f in sizes
        ],
    )
    return model, history


def predict_discrete(model: DiscreteModel, raw: RawTuple) -> float:
    """Reconstruct one tensor cell from the indexed embedding rows."""
    if len(raw) != model.n_variables:
        raise ShapeError(
            f"tuple has {len(raw)} variables, model expects {model.n_variables}"
        )
    rows = [
        model.embeddings[i][_lookup(model.vocab, i, label)]
        for i, label in enumerate(raw)
    ]
    return parafac_eval(model.weights, rows)


def read_discrete_table(path: str | Path) -> tuple[list[RawTuple], np.ndarray]:
    """Parse a delimiter-separated table of S label columns + 1 numeric target.

    Accepts comma- or whitespace-separated lines; '#' starts a comment.
    """
    raw_tuples: list[RawTuple] = []
    targets: list[float] = []
    arity = None
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in (line.split(",") if "," in line else line.split())]
        if arity is None:
            arity = len(parts) - 1
            if arity < 1:
                raise DataFormatError(
                    f"line {lineno}: need at least one label column and a target"
                )
        if len(parts) != arity + 1:
            raise DataFormatError(
                f"line {lineno}: expected {arity + 1} columns, got {len(parts)}"
            )
        try:
            targets.append(float(parts[-1]))
        except ValueError:
            raise DataFormatError(
                f"line {lineno}: target {parts[-1]!r} is not numeric"
            ) from None
        raw_tuples.append(tuple(parts[:-1]))
    if not raw_tuples:
        raise DataFormatError(f"{path}: no samples found")
    return raw_tuples, np.array(targets)
