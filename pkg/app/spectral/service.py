import functools
import logging
import math

import numpy as np

from app import config
from app.common.quadrature import piecewise_quad, singular_integral
from app.filters.models import Filter
from app.spectral.models import (
    DomainError,
    GegenbauerParams,
    ModelParams,
    ParameterRangeError,
    RationalTaper,
    SingularityError,
)

logger = logging.getLogger(__name__)


def default_taper(lam):
    value = RationalTaper()(lam)
    return float(value) if np.ndim(value) == 0 else value


def spectral_density(model: ModelParams, lam):
    """f(lam) = h(lam) / |lam^2 - s0^2|^(2 alpha)."""
    lam = np.asarray(lam, dtype=float)
    if np.any(np.abs(lam) == model.s0):
        msg = f"Spectral density is singular at lam = +-{model.s0}"
        raise SingularityError(msg, {"s0": model.s0})
    value = model.h(lam) / np.abs(lam**2 - model.s0**2) ** (2.0 * model.alpha)
    return float(value) if value.ndim == 0 else value


def _check_band(model: ModelParams, filter: Filter, x: float) -> None:
    if abs(x) * filter.support_hi >= model.s0:
        msg = (
            f"Scaled filter band x*A = {abs(x) * filter.support_hi:.6g} reaches the "
            f"singularity s0 = {model.s0}"
        )
        raise DomainError(msg, {"x": x, "A": filter.support_hi, "s0": model.s0})


def _scaled_energy(model: ModelParams, filter: Filter, x: float):
    def integrand(eta):
        eta = np.asarray(eta, dtype=float)
        scaled = x * eta
        return (
            filter.energy(eta)
            * model.h(scaled)
            / (model.s0**2 - scaled**2) ** (2.0 * model.alpha)
        )

    return integrand


def i_zeta(model: ModelParams, filter: Filter, zeta: float, x: float) -> float:
    """int cos(zeta eta) |psi_hat(eta)|^2 h(x eta) / (s0^2 - x^2 eta^2)^(2 alpha) d eta."""
    _check_band(model, filter, x)
    points = (filter.support_lo, *filter.breakpoints)
    return 2.0 * piecewise_quad(
        _scaled_energy(model, filter, x),
        0.0,
        filter.support_hi,
        points,
        cos_frequency=abs(zeta),
    )


def i_zeta_expansion(
    model: ModelParams, filter: Filter, zeta: float, x: float
) -> float:
    """Second-order small-x expansion of i_zeta; the remainder is O(x^4)."""
    points = (filter.support_lo, *filter.breakpoints)
    leading = 2.0 * piecewise_quad(
        filter.energy, 0.0, filter.support_hi, points, cos_frequency=abs(zeta)
    )
    curvature = 2.0 * piecewise_quad(
        lambda eta: eta**2 * filter.energy(eta),
        0.0,
        filter.support_hi,
        points,
        cos_frequency=abs(zeta),
    )
    s0, alpha = model.s0, model.alpha
    second_order = 2 * alpha * s0 ** (-4 * alpha - 2) * x**2 * curvature
    return s0 ** (-4 * alpha) * leading + second_order


def coefficient_covariance(
    model: ModelParams, filter: Filter, a: float, lag_distance: float
) -> float:
    return i_zeta(model, filter, lag_distance / a, 1.0 / a)


def coefficient_variance_direct(model: ModelParams, filter: Filter, a: float) -> float:
    """Var(delta_jk) = a int |psi_hat(a xi)|^2 f(xi) d xi, integrated in xi with the
    singularities at +-s0 split out (valid even when A/a reaches s0)."""

    def regular(xi):
        return float(filter.energy(a * xi) * model.h(xi))

    points = [p / a for p in (filter.support_lo, *filter.breakpoints)]
    half = singular_integral(
        regular, model.s0, model.alpha, 0.0, filter.support_hi / a, points
    )
    return 2.0 * a * half


def spectral_mass(model: ModelParams, lo: float, hi: float) -> float:
    """int_lo^hi f(lam) d lam, exact across the singularity."""
    return singular_integral(
        lambda lam: float(model.h(lam)), model.s0, model.alpha, lo, hi
    )


def _sampled(filter: Filter, integrand, eta: np.ndarray) -> np.ndarray:
    values = np.zeros_like(eta)
    inside = np.abs(eta) <= filter.support_hi
    values[inside] = integrand(eta[inside])
    return values


def _cos_integral(omega: np.ndarray, lo: float, hi: float) -> np.ndarray:
    # int_lo^hi cos(omega eta) d eta, stable for small omega (hi - lo)
    width = hi - lo
    middle = 0.5 * (lo + hi)
    return width * np.cos(omega * middle) * np.sinc(omega * width / (2 * np.pi))


def _jump_defect(
    filter: Filter, integrand, eta: np.ndarray, period: float, m: int
) -> np.ndarray:
    """Exact minus rectangle rule for the cells where psi_hat jumps, per lag.

    A jump on a node takes the mean of its one-sided limits; a jump inside a
    cell is integrated exactly against the kernel with the one-sided limits
    held constant. What remains is second order in the grid step.
    """
    n = eta.size
    step = period / n
    omega = 2.0 * np.pi / period * np.arange(m)
    defect = np.zeros(m)
    edges = {filter.support_lo, filter.support_hi, *filter.breakpoints} - {0.0}
    for x in sorted(edges | {-edge for edge in edges}):
        below, above = _sampled(
            filter,
            integrand,
            np.array([np.nextafter(x, -np.inf), np.nextafter(x, np.inf)]),
        )
        if math.isclose(below, above, rel_tol=1e-12, abs_tol=0.0):
            continue
        folded = x - period * math.floor((x + 0.5 * period) / period)
        position = (folded - eta[0]) / step
        node = round(position)
        if abs(position - node) < 1e-6:
            node %= n
            copy = round((x - eta[node]) / period)
            sampled = _sampled(filter, integrand, np.array([eta[node] + copy * period]))
            mean = 0.5 * (below + above)
            defect += step * (mean - sampled[0]) * np.cos(omega * eta[node])
        else:
            left = eta[0] + math.floor(position) * step
            right = left + step
            exact = below * _cos_integral(omega, left, folded)
            exact += above * _cos_integral(omega, folded, right)
            rule = below * np.cos(omega * left) + above * np.cos(omega * right)
            defect += exact - 0.5 * step * rule
    return defect


def _covariance_column_fft(
    model: ModelParams, filter: Filter, a: float, gamma: float, m: int
) -> np.ndarray:
    # c_q are the Fourier coefficients of the integrand periodized with the
    # period 2 pi a / gamma of the cosine kernel.
    period = 2.0 * np.pi * a / gamma
    n = 1 << max(16, math.ceil(math.log2(32 * m)))
    eta = -0.5 * period + period * np.arange(n) / n
    integrand = _scaled_energy(model, filter, 1.0 / a)
    reach = math.ceil((filter.support_hi + 0.5 * period) / period)
    periodized = np.zeros(n)
    for shift in range(-reach, reach + 1):
        periodized += _sampled(filter, integrand, eta + shift * period)
    spectrum = np.fft.rfft(periodized)[:m].real
    signs = np.where(np.arange(m) % 2 == 0, 1.0, -1.0)
    column = period / n * signs * spectrum
    return column + _jump_defect(filter, integrand, eta, period, m)


@functools.lru_cache(maxsize=64)
def covariance_column(
    model: ModelParams, filter: Filter, a: float, gamma: float, m: int
) -> np.ndarray:
    """First column of the Toeplitz covariance of (delta_j1, ..., delta_jm)."""
    _check_band(model, filter, 1.0 / a)
    if m <= config.get_config().simulation.dense_limit:
        column = np.array(
            [coefficient_covariance(model, filter, a, gamma * q) for q in range(m)]
        )
    else:
        logger.info(
            "Evaluating %d covariance lags by FFT of the periodized integrand", m
        )
        column = _covariance_column_fft(model, filter, a, gamma, m)
    column.setflags(write=False)
    return column


def quadratic_variance(
    model: ModelParams, filter: Filter, a: float, gamma: float, m: int
) -> float:
    """Var(sum_k delta_jk^2) = 2 sum_q (m - |q|) Cov(delta_j0, delta_jq)^2."""
    if m < 1:
        msg = f"Coefficient count must be positive, got {m}"
        raise DomainError(msg)
    column = covariance_column(model, filter, a, gamma, m)
    weights = m - np.arange(m)
    off_diagonal = np.sum(weights[1:] * column[1:] ** 2)
    return float(2.0 * (m * column[0] ** 2 + 2.0 * off_diagonal))


def gegenbauer_to_model(g: GegenbauerParams, h=None) -> ModelParams:
    s0 = math.acos(g.u)
    if not s0 > 1:
        msg = f"Gegenbauer frequency arccos({g.u}) = {s0:.6g} does not exceed 1"
        raise ParameterRangeError(msg, {"u": g.u, "s0": s0})
    return ModelParams(s0=s0, alpha=g.d, h=h or RationalTaper())
