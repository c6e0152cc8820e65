"""Limiting variance of the quadratic statistics and of the adjusted estimator."""

import functools
import logging
import math

import numpy as np

from app.estimate.models import EstimationDomainError, InvariantViolationError
from app.filters.models import Filter
from app.filters.service import SHANNON, i_of_c
from app.spectral.models import ModelParams

logger = logging.getLogger(__name__)

_SANDWICH_RTOL = 1e-9
_SHANNON_L0 = 2.0 * math.pi
_SHANNON_L2 = 2.0 * math.pi**3 / 3.0


def _check(s0: float, alpha: float, c: float) -> None:
    if not (s0 > 1 and 0 < alpha < 0.5):
        msg = f"Parameters (s0={s0}, alpha={alpha}) lie outside (1, inf) x (0, 1/2)"
        raise EstimationDomainError(msg, {"s0": s0, "alpha": alpha})
    if not c > 0:
        msg = f"Scale-to-shift limit c must be positive, got {c}"
        raise EstimationDomainError(msg)


@functools.lru_cache(maxsize=128)
def _periodized_integral(filter: Filter, c: float) -> float:
    return i_of_c(filter, c)


def asymptotic_V1(model: ModelParams, filter: Filter, c: float) -> float:
    """V1 = 4 c pi s0^(-8 alpha) I(c), the limit of Var(sum_k delta_jk^2) / m."""
    _check(model.s0, model.alpha, c)
    decay = model.s0 ** (-8.0 * model.alpha)
    return 4.0 * c * math.pi * decay * _periodized_integral(filter, c)


def jacobian_phi(s0: float, alpha: float) -> np.ndarray:
    _check(s0, alpha, 1.0)
    log_s0 = math.log(s0)
    return s0 ** (-4.0 * alpha - 2.0) * np.array(
        [
            [-4.0 * alpha * s0, -4.0 * s0**2 * log_s0],
            [alpha * (-4.0 * alpha - 2.0) / s0, 1.0 - 4.0 * alpha * log_s0],
        ]
    )


def sandwich_covariance(
    s0: float, alpha: float, filter: Filter, c: float
) -> np.ndarray:
    """(D Phi)^-1 V_V1 (D Phi)^-T with V_V1 = V1 diag(1 / L0^2, 1 / (2 L2^2))."""
    _check(s0, alpha, c)
    v1 = asymptotic_V1(ModelParams(s0=s0, alpha=alpha), filter, c)
    moments = v1 * np.diag([1.0 / filter.L0**2, 1.0 / (2.0 * filter.L2**2)])
    inverse = np.linalg.inv(jacobian_phi(s0, alpha))
    return inverse @ moments @ inverse.T


def asymptotic_covariance(
    s0: float, alpha: float, filter: Filter, c: float
) -> np.ndarray:
    """Closed-form covariance of sqrt(m_j) ((s0_hat, alpha_hat) - (s0, alpha))."""
    _check(s0, alpha, c)
    log_s0 = math.log(s0)
    L0_sq, L2_sq = filter.L0**2, filter.L2**2
    lead = 1.0 - 4.0 * alpha * log_s0
    slope = alpha * (4.0 * alpha + 2.0)

    v11 = lead**2 / L0_sq + 8.0 * s0**4 * log_s0**2 / L2_sq
    v12 = lead * slope / (s0 * L0_sq) - 8.0 * alpha * s0**3 * log_s0 / L2_sq
    v22 = slope**2 / (s0**2 * L0_sq) + 8.0 * alpha**2 * s0**2 / L2_sq
    prefactor = (
        c * math.pi * s0**2 * _periodized_integral(filter, c)
        / (4.0 * alpha**2 * (1.0 + 2.0 * log_s0) ** 2)
    )
    V = prefactor * np.array([[v11, v12], [v12, v22]])

    sandwich = sandwich_covariance(s0, alpha, filter, c)
    if np.max(np.abs(V - sandwich)) > _SANDWICH_RTOL * np.max(np.abs(V)):
        msg = (
            "Closed-form covariance disagrees with the delta-method product "
            f"at ({s0}, {alpha})"
        )
        logger.error(msg)
        raise InvariantViolationError(
            msg, {"closed": V.tolist(), "sandwich": sandwich.tolist()}
        )
    return V


def _correlation(V: np.ndarray) -> float:
    return float(V[0, 1] / math.sqrt(V[0, 0] * V[1, 1]))


def shannon_correlation(s0: float, alpha: float) -> float:
    """Explicit correlation for the Shannon filter.

    Uses 1/L0^2 = 1/(4 pi^2) and 8/L2^2 = 18/pi^6.
    """
    log_s0 = math.log(s0)
    first = 1.0 / _SHANNON_L0**2
    second = 8.0 / _SHANNON_L2**2
    lead = 1.0 - 4.0 * alpha * log_s0
    slope = alpha * (4.0 * alpha + 2.0)
    numerator = first / s0 * lead * slope - second * alpha * s0**3 * log_s0
    denominator = math.sqrt(
        (first * lead**2 + second * s0**4 * log_s0**2)
        * (first / s0**2 * slope**2 + second * alpha**2 * s0**2)
    )
    return numerator / denominator


def asymptotic_correlation(s0: float, alpha: float, filter: Filter, c: float) -> float:
    rho = _correlation(asymptotic_covariance(s0, alpha, filter, c))
    if filter.name == SHANNON:
        explicit = shannon_correlation(s0, alpha)
        if abs(explicit - rho) > 1e-9:
            msg = (
                f"Shannon correlation {explicit!r} disagrees with "
                f"the matrix value {rho!r}"
            )
            logger.error(msg)
            raise InvariantViolationError(msg, {"s0": s0, "alpha": alpha})
    return rho


def correlation_surface(
    filter: Filter, c: float, s0_grid, alpha_grid
) -> np.ndarray:
    """rho over the grid, indexed [s0, alpha]."""
    s0_grid = np.asarray(s0_grid, dtype=float)
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    surface = np.empty((s0_grid.size, alpha_grid.size))
    for i, s0 in enumerate(s0_grid):
        for k, alpha in enumerate(alpha_grid):
            surface[i, k] = asymptotic_correlation(float(s0), float(alpha), filter, c)
    return surface
