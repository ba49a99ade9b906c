"""Versioned on-disk model format.

Model files are JSON with explicit field names, self-contained for
prediction: decomposition parameters, kernel banks, the input
standardizer, target statistics, and a provenance manifest.  The same
family covers the functional kinds ('tucker', 'parafac') and the
baselines ('linear', 'rbf-net').
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np

from .baselines import LinearModel, RbfNetwork
from .basis import GaussianBasis
from .data import Standardizer
from .errors import DataFormatError
from .fileio import atomic_write_text
from .functional import FunctionalParafacModel, FunctionalTuckerModel
from .optim import TrainHistory
from .tensor_core import DenseTensor

FORMAT_NAME = "functensor-model"
FORMAT_VERSION = 1

AnyModel = FunctionalTuckerModel | FunctionalParafacModel | LinearModel | RbfNetwork


def standardizer_digest(std: Standardizer) -> str:
    h = hashlib.sha256()
    for arr in (std.mean, std.std, std.target_variance, std.target_mean):
        h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    h.update(b"enabled" if std.enabled else b"raw")
    return h.hexdigest()[:16]


def _standardizer_to_json(std: Standardizer) -> dict:
    return {
        "mean": std.mean.tolist(),
        "std": std.std.tolist(),
        "target_variance": std.target_variance.tolist(),
        "target_mean": std.target_mean.tolist(),
        "enabled": std.enabled,
    }


def _standardizer_from_json(obj: dict) -> Standardizer:
    return Standardizer(
        mean=np.array(obj["mean"], dtype=np.float64),
        std=np.array(obj["std"], dtype=np.float64),
        target_variance=np.array(obj["target_variance"], dtype=np.float64),
        target_mean=np.array(obj["target_mean"], dtype=np.float64),
        enabled=bool(obj["enabled"]),
    )


def _basis_to_json(b: GaussianBasis) -> dict:
    return {
        "centers": b.centers.tolist(),
        "shape_factors": b.shape_factors.tolist(),
        "free_precision": b.free_precision,
    }


def _basis_from_json(obj: dict) -> GaussianBasis:
    return GaussianBasis(
        centers=np.array(obj["centers"], dtype=np.float64),
        shape_factors=np.array(obj["shape_factors"], dtype=np.float64),
        free_precision=bool(obj["free_precision"]),
    )


def model_kind(model: AnyModel) -> str:
    if isinstance(model, (FunctionalTuckerModel, FunctionalParafacModel)):
        return model.kind
    if isinstance(model, LinearModel):
        return "linear"
    if isinstance(model, RbfNetwork):
        return "rbf-net"
    raise TypeError(f"not a saveable model: {type(model).__name__}")


def save_model(
    path: str | Path,
    model: AnyModel,
    standardizer: Standardizer,
    manifest: dict[str, Any] | None = None,
):
    """Write a model file atomically (temp file + rename)."""
    kind = model_kind(model)
    doc: dict[str, Any] = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": kind,
        "standardizer": _standardizer_to_json(standardizer),
        "standardizer_digest": standardizer_digest(standardizer),
        "manifest": manifest or {},
    }
    if isinstance(model, FunctionalTuckerModel):
        doc.update(
            rank=model.rank,
            input_dim=model.input_dim,
            dof_index=model.dof_index,
            core=model.core.values.tolist(),
            bases=[_basis_to_json(b) for b in model.bases],
        )
    elif isinstance(model, FunctionalParafacModel):
        doc.update(
            rank=model.rank,
            input_dim=model.input_dim,
            dof_index=model.dof_index,
            weights=model.weights.tolist(),
            bases=[_basis_to_json(b) for b in model.bases],
        )
    elif isinstance(model, LinearModel):
        doc.update(
            input_dim=model.input_dim,
            n_outputs=model.n_outputs,
            W=model.W.tolist(),
            b=model.b.tolist(),
        )
    elif isinstance(model, RbfNetwork):
        doc.update(
            input_dim=model.input_dim,
            n_outputs=model.n_outputs,
            n_units=model.centers.shape[0],
            centers=model.centers.tolist(),
            widths=model.widths.tolist(),
            weights=model.weights.tolist(),
        )
    atomic_write_text(Path(path), json.dumps(doc, sort_keys=True, indent=1))


def load_model(path: str | Path) -> tuple[AnyModel, Standardizer, dict]:
    """Read a model file; returns (model, standardizer, manifest)."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise DataFormatError(f"{path}: not a valid model file ({e})") from None
    if doc.get("format") != FORMAT_NAME:
        raise DataFormatError(f"{path}: unrecognized model format")
    if doc.get("version") != FORMAT_VERSION:
        raise DataFormatError(
            f"{path}: unsupported model version {doc.get('version')}"
        )
    std = _standardizer_from_json(doc["standardizer"])
    manifest = doc.get("manifest", {})
    kind = doc["kind"]
    model: AnyModel
    if kind == "tucker":
        rank = int(doc["rank"])
        model = FunctionalTuckerModel(
            core=DenseTensor(dims=(rank,) * 3,
                             values=np.array(doc["core"], dtype=np.float64)),
            bases=tuple(_basis_from_json(b) for b in doc["bases"]),
            rank=rank,
            dof_index=int(doc["dof_index"]),
        )
    elif kind == "parafac":
        model = FunctionalParafacModel(
            weights=np.array(doc["weights"], dtype=np.float64),
            bases=tuple(_basis_from_json(b) for b in doc["bases"]),
            rank=int(doc["rank"]),
            dof_index=int(doc["dof_index"]),
        )
    elif kind == "linear":
        model = LinearModel(
            W=np.array(doc["W"], dtype=np.float64),
            b=np.array(doc["b"], dtype=np.float64),
        )
    elif kind == "rbf-net":
        model = RbfNetwork(
            centers=np.array(doc["centers"], dtype=np.float64),
            widths=np.array(doc["widths"], dtype=np.float64),
            weights=np.array(doc["weights"], dtype=np.float64),
        )
    else:
        raise DataFormatError(f"{path}: unknown model kind {kind!r}")
    return model, std, manifest


def write_history(path: str | Path, history: TrainHistory, manifest_line: str = ""):
    """Export a training history as delimiter-separated text."""
    lines = []
    if manifest_line:
        lines.append("# manifest: " + manifest_line)
    lines.append("epoch,train_cost,val_nmse,seconds")
    for i, (c, v, s) in enumerate(
        zip(history.train_cost, history.val_metric, history.seconds), start=1
    ):
        lines.append(f"{i},{c!r},{v!r},{s:.6f}")
    lines.append(f"# best_epoch={history.best_epoch}")
    atomic_write_text(Path(path), "\n".join(lines))
