"""Dataset ingestion, splitting, standardization, synthetic trajectories,
and the normalized mean squared error metric.

Files are plain numeric text (whitespace- or comma-delimited, ``#``
comments allowed).  Two layouts are understood:

* 28 columns: 7 positions, 7 velocities, 7 accelerations, 7 torques
  (the SARCOS arm layout);
* 10 columns: 2+2+2 inputs, 2 torques, and 2 noise-free torque columns
  kept for oracle checks (the synthetic two-link arm).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError, ShapeError
from .fileio import atomic_write_text

GRAVITY = 9.81


@dataclass
class TrajectoryDataset:
    positions: np.ndarray  # (n, c)
    velocities: np.ndarray  # (n, c)
    accelerations: np.ndarray  # (n, c)
    torques: np.ndarray  # (n, C)
    clean_torques: np.ndarray | None = None  # noise-free torques, if known
    source: str = ""

    def __post_init__(self):
        arrays = [self.positions, self.velocities, self.accelerations, self.torques]
        n = arrays[0].shape[0]
        if any(a.ndim != 2 or a.shape[0] != n for a in arrays):
            raise ShapeError("all blocks must be 2-d with one row per sample")
        if not all(np.isfinite(a).all() for a in arrays):
            raise DataFormatError("dataset contains non-finite values")
        if self.dof != self.n_outputs:
            raise ShapeError(
                f"expected one torque per joint, got {self.dof} joints "
                f"and {self.n_outputs} torques"
            )

    @property
    def n_samples(self) -> int:
        return self.positions.shape[0]

    @property
    def dof(self) -> int:
        return self.positions.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.torques.shape[1]

    def inputs(self, idx=slice(None)) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.positions[idx], self.velocities[idx], self.accelerations[idx])

    def concat_inputs(self, idx=slice(None)) -> np.ndarray:
        return np.hstack(self.inputs(idx))


def _read_numeric_matrix(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"data file not found: {path}")
    text = path.read_text()
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(",") if "," in line else line.split()
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise DataFormatError(
                f"{path}: row {lineno} has {len(parts)} columns, expected {width}"
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            bad = next(i for i, p in enumerate(parts) if not _is_number(p))
            raise DataFormatError(
                f"{path}: row {lineno}, column {bad + 1}: "
                f"{parts[bad]!r} is not numeric"
            ) from None
    if not rows:
        raise DataFormatError(f"{path}: file contains no data rows")
    return np.array(rows, dtype=np.float64)


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def load_dataset(path: str | Path, fmt: str = "auto") -> TrajectoryDataset:
    """Load a trajectory file; ``fmt`` is 'auto', '28-column' or '10-column'."""
    mat = _read_numeric_matrix(path)
    ncols = mat.shape[1]
    if fmt == "auto":
        fmt = {28: "28-column", 10: "10-column"}.get(ncols, "")
        if not fmt:
            raise DataFormatError(
                f"{path}: {ncols} columns; expected 28 (7-DoF layout) "
                f"or 10 (synthetic 2-DoF layout)"
            )
    if fmt == "28-column":
        if ncols != 28:
            raise DataFormatError(f"{path}: expected 28 columns, got {ncols}")
        c = 7
        return TrajectoryDataset(
            positions=mat[:, 0:c],
            velocities=mat[:, c : 2 * c],
            accelerations=mat[:, 2 * c : 3 * c],
            torques=mat[:, 3 * c : 4 * c],
            source=str(path),
        )
    if fmt == "10-column":
        if ncols != 10:
            raise DataFormatError(f"{path}: expected 10 columns, got {ncols}")
        return TrajectoryDataset(
            positions=mat[:, 0:2],
            velocities=mat[:, 2:4],
            accelerations=mat[:, 4:6],
            torques=mat[:, 6:8],
            clean_torques=mat[:, 8:10],
            source=str(path),
        )
    raise ConfigError(f"unknown dataset format {fmt!r}")


# --------------------------------------------------------------------------
# Splitting
# --------------------------------------------------------------------------

TEST_FRACTION = 0.10
VALIDATION_FRACTION = 0.05  # of the remaining training part


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint train/validation/test index sets covering a dataset."""

    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int

    @property
    def n_total(self) -> int:
        return self.train.size + self.validation.size + self.test.size

    def indices(self, name: str) -> np.ndarray:
        try:
            return {"train": self.train, "validation": self.validation,
                    "test": self.test}[name]
        except KeyError:
            raise ConfigError(f"unknown split name {name!r}") from None


def split(dataset: TrajectoryDataset | int, seed: int) -> SplitSpec:
    """Random 90/10 train/test split, then 5% of train held out as validation.

    Accepts a dataset or a plain sample count; deterministic per seed.
    """
    n = dataset if isinstance(dataset, int) else dataset.n_samples
    if n < 20:
        raise ConfigError(f"need at least 20 samples to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_test = int(round(n * TEST_FRACTION))
    n_val = int(round((n - n_test) * VALIDATION_FRACTION))
    return SplitSpec(
        train=np.sort(perm[n_test + n_val :]),
        validation=np.sort(perm[n_test : n_test + n_val]),
        test=np.sort(perm[:n_test]),
        seed=seed,
    )


# --------------------------------------------------------------------------
# Standardization
# --------------------------------------------------------------------------


@dataclass
class Standardizer:
    """Z-scoring statistics for the 3c input columns, computed on the
    training split only, plus the per-channel training-target variance
    (the nMSE denominator) and mean.

    With ``enabled=False`` the transform is the identity; the target
    statistics are still recorded.
    """

    mean: np.ndarray  # (3c,)
    std: np.ndarray  # (3c,)
    target_variance: np.ndarray  # (C,)
    target_mean: np.ndarray  # (C,)
    enabled: bool = True

    @property
    def dof(self) -> int:
        return self.mean.size // 3

    def transform_concat(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.mean.size:
            raise ShapeError(
                f"expected {self.mean.size} input columns, got {X.shape[1]}"
            )
        if not self.enabled:
            return X.copy()
        return (X - self.mean) / self.std

    def inverse_transform_concat(self, Z: np.ndarray) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        if not self.enabled:
            return Z.copy()
        return Z * self.std + self.mean

    def transform_blocks(self, positions, velocities, accelerations):
        Z = self.transform_concat(np.hstack([positions, velocities, accelerations]))
        c = self.dof
        return Z[:, :c], Z[:, c : 2 * c], Z[:, 2 * c :]


def standardize(
    dataset: TrajectoryDataset, train_idx: np.ndarray, enabled: bool = True
) -> Standardizer:
    """Fit a Standardizer on the training rows of ``dataset``."""
    if np.size(train_idx) == 0:
        raise ConfigError("training split is empty")
    X = dataset.concat_inputs(train_idx)
    Y = dataset.torques[train_idx]
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    if enabled:
        dead = np.flatnonzero(std == 0)
        if dead.size:
            raise ConfigError(
                f"zero-variance input column(s) {dead.tolist()}; "
                f"cannot standardize"
            )
    else:
        mean = np.zeros_like(mean)
        std = np.ones_like(std)
    return Standardizer(
        mean=mean,
        std=std,
        target_variance=Y.var(axis=0),
        target_mean=Y.mean(axis=0),
        enabled=enabled,
    )


# --------------------------------------------------------------------------
# Synthetic two-link arm
# --------------------------------------------------------------------------

# Plant constants: unit point masses at the ends of unit-length links,
# viscous and Coulomb joint friction.
ARM_VISCOUS = 0.5
ARM_COULOMB = 0.3


def two_link_torques(
    q: np.ndarray,
    qd: np.ndarray,
    qdd: np.ndarray,
    viscous: float = ARM_VISCOUS,
    coulomb: float = ARM_COULOMB,
) -> np.ndarray:
    """Joint torques of the planar two-link arm: inertia, velocity product,
    gravity, and friction terms; all arrays (n, 2)."""
    q, qd, qdd = (np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in (q, qd, qdd))
    c2 = np.cos(q[:, 1])
    s2 = np.sin(q[:, 1])
    c1 = np.cos(q[:, 0])
    c12 = np.cos(q[:, 0] + q[:, 1])
    m11 = 3.0 + 2.0 * c2
    m12 = 1.0 + c2
    tau1 = (
        m11 * qdd[:, 0]
        + m12 * qdd[:, 1]
        - s2 * (qd[:, 1] ** 2 + 2.0 * qd[:, 0] * qd[:, 1])
        + GRAVITY * (2.0 * c1 + c12)
        + viscous * qd[:, 0]
        + coulomb * np.sign(qd[:, 0])
    )
    tau2 = (
        m12 * qdd[:, 0]
        + qdd[:, 1]
        + s2 * qd[:, 0] ** 2
        + GRAVITY * c12
        + viscous * qd[:, 1]
        + coulomb * np.sign(qd[:, 1])
    )
    return np.column_stack([tau1, tau2])


def two_link_gravity(q: np.ndarray) -> np.ndarray:
    """Gravity torque component alone, for oracle checks."""
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    c1 = np.cos(q[:, 0])
    c12 = np.cos(q[:, 0] + q[:, 1])
    return np.column_stack([GRAVITY * (2.0 * c1 + c12), GRAVITY * c12])


def gen_synthetic_arm(
    n: int,
    seed: int = 0,
    noise_std: float = 0.0,
    viscous: float = ARM_VISCOUS,
    coulomb: float = ARM_COULOMB,
) -> TrajectoryDataset:
    """Random desk-scale trajectories of the two-link arm.

    Positions uniform in [-pi, pi]^2, velocities in [-2, 2]^2, accelerations
    in [-5, 5]^2; observation noise of the given standard deviation is added
    to the torques, while ``clean_torques`` keeps the noise-free values.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if noise_std < 0:
        raise ConfigError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    q = rng.uniform(-np.pi, np.pi, (n, 2))
    qd = rng.uniform(-2.0, 2.0, (n, 2))
    qdd = rng.uniform(-5.0, 5.0, (n, 2))
    clean = two_link_torques(q, qd, qdd, viscous=viscous, coulomb=coulomb)
    torques = clean + noise_std * rng.standard_normal((n, 2))
    return TrajectoryDataset(
        positions=q,
        velocities=qd,
        accelerations=qdd,
        torques=torques,
        clean_torques=clean,
        source=f"synthetic-arm(n={n}, seed={seed}, noise_std={noise_std})",
    )


def save_dataset(path: str | Path, dataset: TrajectoryDataset, header: str = ""):
    """Write a dataset as a numeric text file (the 10-/28-column layouts)."""
    blocks = [dataset.positions, dataset.velocities, dataset.accelerations,
              dataset.torques]
    if dataset.clean_torques is not None:
        blocks.append(dataset.clean_torques)
    mat = np.hstack(blocks)
    lines = []
    if header:
        lines.append("# " + header)
    for row in mat:
        lines.append(" ".join(repr(float(v)) for v in row))
    atomic_write_text(Path(path), "\n".join(lines))


# --------------------------------------------------------------------------
# Metric
# --------------------------------------------------------------------------


def nmse(
    predictions: np.ndarray,
    targets: np.ndarray,
    train_variance: np.ndarray,
) -> np.ndarray:
    """Per-channel mean squared error divided by the training-target variance."""
    P = np.atleast_2d(np.asarray(predictions, dtype=np.float64).T).T
    T = np.atleast_2d(np.asarray(targets, dtype=np.float64).T).T
    v = np.asarray(train_variance, dtype=np.float64).reshape(-1)
    if P.shape != T.shape:
        raise ShapeError(f"prediction shape {P.shape} != target shape {T.shape}")
    if v.size != P.shape[1]:
        raise ShapeError(
            f"got {v.size} variances for {P.shape[1]} target channels"
        )
    if np.any(v <= 0):
        raise ConfigError("training variance must be positive in every channel")
    return ((P - T) ** 2).mean(axis=0) / v
