"""Shared fixtures and numeric test helpers."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

# The 7-DoF benchmark file (28-column text) is optional; reproduction tests
# skip when it is absent.  Point FUNCTENSOR_SARCOS at the converted file or
# drop it at data/sarcos.txt in the repo root.
DEFAULT_SARCOS = Path(__file__).resolve().parents[1] / "data" / "sarcos.txt"


def sarcos_path() -> Path | None:
    env = os.environ.get("FUNCTENSOR_SARCOS")
    path = Path(env) if env else DEFAULT_SARCOS
    return path if path.exists() else None


requires_sarcos = pytest.mark.skipif(
    sarcos_path() is None,
    reason="7-DoF benchmark file not present (set FUNCTENSOR_SARCOS)",
)


@pytest.fixture(scope="session")
def sarcos_dataset():
    from functensor import load_dataset

    path = sarcos_path()
    if path is None:
        pytest.skip("benchmark data not available")
    return load_dataset(path, fmt="28-column")


# --------------------------------------------------------------------------
# Finite-difference gradient checking
# --------------------------------------------------------------------------

FD_STEP = 1e-6


def central_difference(f, arr: np.ndarray, h: float = FD_STEP) -> tuple[np.ndarray, float]:
    """Central-difference gradient of scalar ``f`` w.r.t. every entry of
    ``arr`` (perturbed in place, restored).  Also returns the largest |f|
    seen, which bounds the cancellation noise of the estimate."""
    grad = np.zeros_like(arr)
    scale = 0.0
    flat = arr.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = f()
        flat[i] = old - h
        fm = f()
        flat[i] = old
        grad.reshape(-1)[i] = (fp - fm) / (2.0 * h)
        scale = max(scale, abs(fp), abs(fm))
    return grad, scale


def assert_grad_close(
    analytic: np.ndarray,
    numeric: np.ndarray,
    cost_scale: float,
    rtol: float,
    h: float = FD_STEP,
    magnitude_floor: float = 1e-8,
):
    """Entrywise agreement up to ``rtol`` wherever the estimate is trustworthy.

    Central differences of a cost of magnitude V at step h carry about
    eps*V/h of cancellation noise, so entries are compared with that as an
    absolute allowance; entries with both magnitudes below the floor are
    skipped outright.
    """
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    assert analytic.shape == numeric.shape
    noise = 50.0 * np.finfo(float).eps * max(cost_scale, 1.0) / h + 1e-12
    mag = np.maximum(np.abs(analytic), np.abs(numeric))
    compare = mag > magnitude_floor
    bad = compare & (np.abs(analytic - numeric) > noise + rtol * mag)
    if np.any(bad):
        i = np.argwhere(bad)[0]
        raise AssertionError(
            f"gradient mismatch at {tuple(i)}: analytic "
            f"{analytic[tuple(i)]:.6e} vs numeric {numeric[tuple(i)]:.6e} "
            f"(allowance {noise:.2e} + {rtol} * {mag[tuple(i)]:.2e})"
        )
