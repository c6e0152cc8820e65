import logging
import math

import numpy as np

from app.estimate.models import EstimationDomainError, InvariantViolationError

logger = logging.getLogger(__name__)

BRANCH_POINT = -1.0 / math.e

_MAX_STEPS = 50
_BRANCH_BAND = 1e-3
_RESIDUAL_TOL = 1e-12


def _initial_guess(y: np.ndarray) -> np.ndarray:
    guess = np.empty_like(y)

    near_branch = y < BRANCH_POINT + _BRANCH_BAND
    p = np.sqrt(np.clip(2.0 * (math.e * y[near_branch] + 1.0), 0.0, None))
    guess[near_branch] = -1.0 + p - p**2 / 3.0 + 11.0 / 72.0 * p**3

    large = y > math.e
    log_y = np.log(y[large])
    guess[large] = log_y - np.log(log_y)

    middle = ~(near_branch | large)
    guess[middle] = np.log1p(y[middle])
    return guess


def lambert_w0(y):
    """Principal branch W0 by Halley iteration; accepts scalars or arrays."""
    values = np.asarray(y, dtype=float)
    if np.any(np.isnan(values)) or np.any(values < BRANCH_POINT):
        msg = f"Lambert W0 is real only for y >= -1/e, got {np.min(values)!r}"
        raise EstimationDomainError(msg)

    flat = values.ravel()
    w = _initial_guess(flat)
    scale = np.maximum(1.0, np.abs(flat))
    for _ in range(_MAX_STEPS):
        ew = np.exp(w)
        residual = w * ew - flat
        active = np.abs(residual) > 0.1 * _RESIDUAL_TOL * scale
        if not np.any(active):
            break
        wp1 = np.where(w == -1.0, -1.0, w + 1.0)
        step = residual / (ew * wp1 - (w + 2.0) * residual / (2.0 * wp1))
        w = np.where(active, w - step, w)

    residual = np.abs(w * np.exp(w) - flat)
    worst = int(np.argmax(residual / scale))
    if residual[worst] > _RESIDUAL_TOL * scale[worst]:
        msg = f"Lambert W0 did not converge at y={flat[worst]!r} (residual {residual[worst]:.3g})"
        logger.error(msg)
        raise InvariantViolationError(msg, {"y": float(flat[worst])})

    w = np.maximum(w, -1.0).reshape(values.shape)
    return float(w) if w.ndim == 0 else w
