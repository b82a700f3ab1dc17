"""Gaussian kernel density estimate of a marginal, evaluated in log space."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .dataset import EvalGrid
from .errors import DegenerateVariable

LOG_DENSITY_FLOOR = float(np.log(1e-300))


def silverman_bandwidth(data, robust: bool = False) -> float:
    """Rule-of-thumb kernel width.

    Default is ``1.06 * sd * n**-0.2``. ``robust=True`` switches to
    ``0.9 * min(sd, IQR / 1.34) * n**-0.2``.
    """
    data = np.asarray(data, dtype=float).ravel()
    n = data.size
    if n < 2:
        raise DegenerateVariable("bandwidth needs at least 2 points")
    sd = float(np.std(data, ddof=1))
    if not sd > 0:
        raise DegenerateVariable("cannot pick a bandwidth for constant data")
    if robust:
        q75, q25 = np.percentile(data, [75, 25])
        spread = min(sd, (q75 - q25) / 1.34) or sd
        return 0.9 * spread * n ** -0.2
    return 1.06 * sd * n ** -0.2


def kde_log_density(train, h: float, grid) -> np.ndarray:
    """log of the Gaussian KDE at every grid point, floored at log(1e-300)."""
    train = np.asarray(train, dtype=float).ravel()
    if train.size == 0:
        raise ValueError("empty training data")
    if not (h > 0 and np.isfinite(h)):
        raise ValueError(f"bandwidth must be positive and finite, got {h}")
    pts = grid.points if isinstance(grid, EvalGrid) else np.asarray(grid, dtype=float).ravel()
    z = (pts[:, None] - train[None, :]) / h
    log_norm = np.log(train.size * h * np.sqrt(2.0 * np.pi))
    vals = logsumexp(-0.5 * z * z, axis=1) - log_norm
    return np.maximum(vals, LOG_DENSITY_FLOOR)
