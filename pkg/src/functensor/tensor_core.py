"""Dense tensor storage and the multilinear evaluation kernels.

A Tucker model combines one latent vector per mode through a dense core
tensor; a PARAFAC model is the special case of a diagonal core.  These
kernels evaluate single entries of such models given the per-mode latent
rows, and are shared by the discrete and the functional regression models.
Everything here is pure and operates on float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ShapeError

# One mode's evaluated latent representation: a 1-d float vector of length
# equal to the decomposition rank.
FactorRow = np.ndarray


@dataclass(frozen=True)
class DenseTensor:
    """An order-S array of reals, stored flat in row-major order.

    Treated as immutable during evaluation; the training loop is the only
    writer and updates ``values`` in place through the ``array`` view.
    """

    dims: tuple[int, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) == 0:
            raise ShapeError("tensor must have at least one mode")
        if any(d < 1 for d in dims):
            raise ShapeError(f"all extents must be >= 1, got {dims}")
        values = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "values", values)
        if values.size != math.prod(dims):
            raise ShapeError(
                f"value count {values.size} does not match dims {dims} "
                f"(expected {math.prod(dims)})"
            )

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def array(self) -> np.ndarray:
        """The values as a shaped view; writes through to ``values``."""
        return self.values.reshape(self.dims)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "DenseTensor":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        return cls(dims=arr.shape, values=arr.reshape(-1).copy())

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> "DenseTensor":
        dims = tuple(int(d) for d in dims)
        return cls(dims=dims, values=np.zeros(math.prod(dims)))


def _check_rows(dims: tuple[int, ...], rows: Sequence[FactorRow]) -> list[np.ndarray]:
    if len(rows) != len(dims):
        raise ShapeError(f"expected {len(dims)} factor rows, got {len(rows)}")
    out = []
    for mode, row in enumerate(rows):
        r = np.asarray(row, dtype=np.float64).reshape(-1)
        if r.size != dims[mode]:
            raise ShapeError(
                f"factor row for mode {mode} has length {r.size}, "
                f"core extent is {dims[mode]}"
            )
        out.append(r)
    return out


def mode_contract(t: DenseTensor, v: np.ndarray, mode: int) -> DenseTensor:
    """Contract one mode of ``t`` against the vector ``v``.

    Entry of the result = sum_k t(..., k, ...) * v[k] along ``mode``.  The
    result has order S-1; contracting an order-1 tensor yields the scalar
    wrapped as a 1-element order-1 tensor.
    """
    if not 0 <= mode < t.order:
        raise ShapeError(f"mode {mode} out of range for order-{t.order} tensor")
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size != t.dims[mode]:
        raise ShapeError(
            f"vector length {v.size} does not match extent {t.dims[mode]} "
            f"of mode {mode}"
        )
    contracted = np.tensordot(t.array, v, axes=(mode, 0))
    if contracted.ndim == 0:
        return DenseTensor(dims=(1,), values=contracted.reshape(1))
    return DenseTensor(dims=contracted.shape, values=contracted.reshape(-1))


def tucker_eval(core: DenseTensor, rows: Sequence[FactorRow]) -> float:
    """Evaluate one entry of a Tucker model.

    Returns sum over all rank index tuples of core(r_1..r_S) times the
    product of rows[i][r_i], computed by contracting mode 0, then the next
    remaining mode, and so on (fixed order, deterministic floats).
    """
    if len(set(core.dims)) != 1:
        raise ShapeError(f"Tucker core must be cubic, got dims {core.dims}")
    rows = _check_rows(core.dims, rows)
    arr = core.array
    for row in rows:
        arr = np.tensordot(row, arr, axes=(0, 0))
    return float(arr)


def parafac_eval(weights: np.ndarray, rows: Sequence[FactorRow]) -> float:
    """Evaluate one entry of a PARAFAC model: sum_r g[r] * prod_i rows[i][r]."""
    g = np.asarray(weights, dtype=np.float64).reshape(-1)
    rows = _check_rows((g.size,) * len(rows), rows)
    if not rows:
        raise ShapeError("at least one factor row is required")
    prod = rows[0].copy()
    for row in rows[1:]:
        prod *= row
    return float(g @ prod)


def embed_parafac_as_tucker(weights: np.ndarray, order: int) -> DenseTensor:
    """Place PARAFAC weights on the superdiagonal of an order-``order`` core."""
    g = np.asarray(weights, dtype=np.float64).reshape(-1)
    if g.size < 1:
        raise ShapeError("weights must have length >= 1")
    if order < 2:
        raise ShapeError(f"order must be >= 2, got {order}")
    core = np.zeros((g.size,) * order)
    idx = np.arange(g.size)
    core[(idx,) * order] = g
    return DenseTensor.from_array(core)
