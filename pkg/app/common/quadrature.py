import functools
import logging
from collections.abc import Callable, Iterable

import numpy as np
from scipy import integrate

from app import config

logger = logging.getLogger(__name__)


def _tolerances(tolerances: config.QuadratureConfig | None) -> config.QuadratureConfig:
    return tolerances or config.get_config().quadrature


def _edges(lo: float, hi: float, points: Iterable[float]) -> list[float]:
    return sorted({lo, hi, *(float(p) for p in points if lo < p < hi)})


def piecewise_quad(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    points: Iterable[float] = (),
    *,
    cos_frequency: float | None = None,
    tolerances: config.QuadratureConfig | None = None,
) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``func`` over [lo, hi].

    The interval is cut at every breakpoint in ``points`` so that kinks and
    jumps of the integrand sit on panel edges. With ``cos_frequency`` the
    integrand is weighted by cos(cos_frequency * x) using QUADPACK's
    oscillatory rule.
    """
    tol = _tolerances(tolerances)
    total = 0.0
    edges = _edges(lo, hi, points)
    for left, right in zip(edges[:-1], edges[1:], strict=True):
        kwargs = {"epsabs": tol.abs_tol, "epsrel": tol.rel_tol, "limit": tol.limit}
        if cos_frequency:
            kwargs.update(weight="cos", wvar=cos_frequency)
        value, _ = integrate.quad(lambda x: float(func(x)), left, right, **kwargs)
        total += value
    return total


@functools.cache
def _legendre_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre(
    func: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    points: Iterable[float] = (),
    *,
    panels: int | None = None,
    order: int | None = None,
) -> float:
    """Composite fixed-order Gauss-Legendre rule; ``func`` must be vectorized."""
    tol = config.get_config().quadrature
    panels = panels or tol.gauss_panels
    nodes, weights = _legendre_rule(order or tol.gauss_order)

    total = 0.0
    edges = _edges(lo, hi, points)
    for left, right in zip(edges[:-1], edges[1:], strict=True):
        cuts = np.linspace(left, right, panels + 1)
        half = 0.5 * np.diff(cuts)
        mid = 0.5 * (cuts[:-1] + cuts[1:])
        x = mid[:, None] + half[:, None] * nodes[None, :]
        values = np.asarray(func(x.ravel()), dtype=float).reshape(x.shape)
        total += float(np.sum(half[:, None] * weights[None, :] * values))
    return total


def singular_integral(
    regular: Callable[[float], float],
    s0: float,
    alpha: float,
    lo: float,
    hi: float,
    points: Iterable[float] = (),
    *,
    tolerances: config.QuadratureConfig | None = None,
) -> float:
    """Integrate regular(x) / |x^2 - s0^2|^(2 alpha) over [lo, hi].

    Panels touching x = +-s0 are integrated in the variable t with
    x = sigma +- t**(1 / (1 - 2 alpha)); the Jacobian cancels the
    singular factor exactly, leaving a bounded integrand.
    """
    tol = _tolerances(tolerances)
    power = 1.0 / (1.0 - 2.0 * alpha)
    singular = {-s0, s0}
    kwargs = {
        "epsabs": tol.singular_abs_tol,
        "epsrel": tol.singular_rel_tol,
        "limit": tol.limit,
    }

    def plain(x: float) -> float:
        return float(regular(x)) / abs(x * x - s0 * s0) ** (2.0 * alpha)

    def from_singularity(sigma: float, width: float, direction: float) -> float:
        # x = sigma + direction * t**power, |x - sigma|^(-2 alpha) dx = power dt
        def integrand(t: float) -> float:
            x = sigma + direction * t**power
            return float(regular(x)) * power / abs(x + sigma) ** (2.0 * alpha)

        value, _ = integrate.quad(integrand, 0.0, width ** (1.0 / power), **kwargs)
        return value

    total = 0.0
    edges = _edges(lo, hi, [*points, *singular])
    for left, right in zip(edges[:-1], edges[1:], strict=True):
        left_singular = left in singular
        right_singular = right in singular
        if left_singular and right_singular:
            middle = 0.5 * (left + right)
            total += from_singularity(left, middle - left, 1.0)
            total += from_singularity(right, right - middle, -1.0)
        elif left_singular:
            total += from_singularity(left, right - left, 1.0)
        elif right_singular:
            total += from_singularity(right, right - left, -1.0)
        else:
            value, _ = integrate.quad(plain, left, right, **kwargs)
            total += value
    return total
