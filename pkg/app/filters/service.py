import logging
import math
from collections.abc import Callable

import numpy as np
from scipy import interpolate, optimize

from app import config
from app.common.errors import DomainError
from app.common.quadrature import gauss_legendre, piecewise_quad
from app.filters.models import (
    Filter,
    FilterDefinitionError,
    MomentRule,
    ReferenceComparison,
)

logger = logging.getLogger(__name__)

SHANNON = "shannon"
MEYER = "meyer"
MEXICAN_HAT = "mexican_hat"

_SCAN_POINTS = 65537
_MAX_SCAN = 2.0**20


def _outer_band(
    func: Callable, tol: float, scan_max: float = 8.0
) -> tuple[float, float]:
    """Band [lo, hi] on the half line outside which |func| < tol * max|func|."""
    while True:
        grid = np.linspace(0.0, scan_max, _SCAN_POINTS)
        values = np.abs(func(grid))
        threshold = tol * values.max()
        if values[-_SCAN_POINTS // 64 :].max() < threshold or scan_max >= _MAX_SCAN:
            break
        scan_max *= 2.0

    if not values.max() > 0:
        msg = "Cannot locate the support of an identically zero function"
        raise FilterDefinitionError(msg)

    def excess(x: float) -> float:
        return float(np.abs(func(x))) - threshold

    above = np.flatnonzero(values >= threshold)
    first, last = above[0], above[-1]
    if last + 1 < grid.size:
        hi = optimize.brentq(excess, grid[last], grid[last + 1], xtol=1e-15)
    else:
        hi = float(grid[last])
    lo = 0.0
    if first > 0:
        lo = optimize.brentq(excess, grid[first - 1], grid[first], xtol=1e-15)
    return float(lo), float(hi)


def _half_line_points(points: tuple[float, ...], upper: float) -> tuple[float, ...]:
    return tuple(p for p in points if 0 < p < upper)


def _moment(
    psi_hat: Callable,
    power: int,
    upper: float,
    breakpoints: tuple[float, ...],
    rule: MomentRule,
    energy_power: int = 2,
) -> float:
    def integrand(eta):
        eta = np.asarray(eta, dtype=float)
        return eta**power * np.abs(psi_hat(eta)) ** energy_power

    points = _half_line_points(breakpoints, upper)
    if rule == MomentRule.ADAPTIVE:
        half = piecewise_quad(integrand, 0.0, upper, points)
    else:
        half = gauss_legendre(integrand, 0.0, upper, points)
    return 2.0 * half


def filter_moments(
    filter: Filter, rule: MomentRule = MomentRule.ADAPTIVE
) -> tuple[float, float]:
    """(L0, L2) = (int |psi_hat|^2, int eta^2 |psi_hat|^2) over the support band."""
    upper = filter.support_hi
    points = (filter.support_lo, *filter.breakpoints)
    return (
        _moment(filter.psi_hat, 0, upper, points, rule),
        _moment(filter.psi_hat, 2, upper, points, rule),
    )


def fourth_moment(filter: Filter, rule: MomentRule = MomentRule.ADAPTIVE) -> float:
    points = (filter.support_lo, *filter.breakpoints)
    return _moment(filter.psi_hat, 0, filter.support_hi, points, rule, energy_power=4)


def _build(
    name: str,
    psi_hat: Callable,
    support_lo: float,
    support_hi: float,
    breakpoints: tuple[float, ...] = (),
    **kwargs,
) -> Filter:
    points = (support_lo, *breakpoints)
    L0 = _moment(psi_hat, 0, support_hi, points, MomentRule.ADAPTIVE)
    L2 = _moment(psi_hat, 2, support_hi, points, MomentRule.ADAPTIVE)
    return Filter(
        name=name,
        psi_hat=psi_hat,
        support_lo=support_lo,
        support_hi=support_hi,
        L0=L0,
        L2=L2,
        breakpoints=breakpoints,
        support_tol=config.get_config().filters.support_tol,
        **kwargs,
    )


def _shannon_hat(eta):
    return (np.abs(np.asarray(eta, dtype=float)) <= np.pi).astype(float)


def _shannon_time(t):
    return np.sinc(np.asarray(t, dtype=float))


def shannon_filter() -> Filter:
    # sinc decays like 1/(pi |t|); the radius bounds the truncation error.
    truncation_error = config.get_config().filters.shannon_truncation_error
    return _build(
        SHANNON,
        _shannon_hat,
        0.0,
        np.pi,
        psi_time=_shannon_time,
        time_radius=1.0 / (np.pi * truncation_error),
        reference={"L0": 2.0 * np.pi, "L2": 2.0 * np.pi**3 / 3.0},
    )


def _meyer_hat(eta):
    x = np.abs(np.asarray(eta, dtype=float))
    nu = np.clip(3.0 * x / (2.0 * np.pi) - 1.0, 0.0, 1.0)
    transition = np.cos(0.5 * np.pi * nu)
    outer = np.where(x <= 4.0 * np.pi / 3.0, transition, 0.0)
    return np.where(x <= 2.0 * np.pi / 3.0, 1.0, outer)


class InverseFourierTable:
    """psi(t) = (1/pi) int_0^A psi_hat(eta) cos(eta t) d eta, tabulated once and
    evaluated by cubic interpolation; zero beyond the table radius."""

    def __init__(
        self,
        psi_hat: Callable,
        upper: float,
        breakpoints: tuple[float, ...],
        radius: float,
        step: float,
    ):
        self._psi_hat = psi_hat
        self._upper = upper
        self._breakpoints = breakpoints
        self.radius = radius
        self._step = step
        self._spline: interpolate.CubicSpline | None = None

    def _table(self) -> interpolate.CubicSpline:
        if self._spline is None:
            t = np.arange(0.0, self.radius + self._step / 2, self._step)
            nodes, weights = np.polynomial.legendre.leggauss(16)
            inner = _half_line_points(self._breakpoints, self._upper)
            edges = sorted({0.0, self._upper, *inner})
            etas, eta_weights = [], []
            for left, right in zip(edges[:-1], edges[1:], strict=True):
                cuts = np.linspace(left, right, 33)
                half = 0.5 * np.diff(cuts)[:, None]
                mid = 0.5 * (cuts[:-1] + cuts[1:])[:, None]
                etas.append((mid + half * nodes).ravel())
                eta_weights.append((half * weights).ravel())
            eta = np.concatenate(etas)
            w = np.concatenate(eta_weights) * self._psi_hat(eta)
            values = np.cos(np.outer(t, eta)) @ w / np.pi
            self._spline = interpolate.CubicSpline(t, values)
        return self._spline

    def __call__(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        inside = self._table()(np.minimum(t, self.radius))
        return np.where(t <= self.radius, inside, 0.0)


def meyer_filter() -> Filter:
    breakpoints = (2.0 * np.pi / 3.0,)
    return _build(
        MEYER,
        _meyer_hat,
        0.0,
        4.0 * np.pi / 3.0,
        breakpoints,
        psi_time=InverseFourierTable(
            _meyer_hat, 4.0 * np.pi / 3.0, breakpoints, radius=256.0, step=1.0 / 32.0
        ),
        time_radius=256.0,
        time_form_approximate=True,
        reference={
            "L0": 2.0 * np.pi,
            "L2": 8.0 / 9.0 * np.pi * (np.pi**2 - 2.0),
            "fourth_moment": 11.0 * np.pi / 6.0,
        },
    )


def mexican_hat_filter(sigma: float = 1.0) -> Filter:
    if not sigma > 0:
        msg = f"Mexican hat width sigma must be positive, got {sigma}"
        raise FilterDefinitionError(msg)

    amplitude = math.sqrt(8.0) * np.pi**0.25 * sigma**2.5 / math.sqrt(3.0)
    time_amplitude = 2.0 / (math.sqrt(3.0 * sigma) * np.pi**0.25)

    def psi_hat(eta):
        eta = np.asarray(eta, dtype=float)
        return amplitude * eta**2 * np.exp(-0.5 * sigma**2 * eta**2)

    def psi_time(t):
        r = np.asarray(t, dtype=float) / sigma
        return time_amplitude * (1.0 - r**2) * np.exp(-0.5 * r**2)

    filters_config = config.get_config().filters
    support_lo, support_hi = _outer_band(psi_hat, filters_config.support_tol)
    _, time_radius = _outer_band(psi_time, filters_config.time_tol)
    return _build(
        MEXICAN_HAT,
        psi_hat,
        support_lo,
        support_hi,
        psi_time=psi_time,
        time_radius=time_radius,
        reference={"L0": 2.0, "L2": 10.0} if sigma == 1.0 else {},
        parameters={"sigma": sigma},
    )


def tabulated_filter(name: str, eta: np.ndarray, values: np.ndarray) -> Filter:
    """Filter from samples of psi_hat on the half line, mirrored to be even and
    linearly interpolated; zero beyond the last sample."""
    eta = np.asarray(eta, dtype=float)
    values = np.asarray(values, dtype=float)
    if eta.ndim != 1 or eta.size < 2 or eta.shape != values.shape:
        msg = f"Tabulated filter '{name}' needs matching 1-d eta and psi_hat columns"
        raise FilterDefinitionError(msg)
    if eta[0] < 0 or np.any(np.diff(eta) <= 0) or not np.all(np.isfinite(values)):
        msg = (
            f"Tabulated filter '{name}' needs strictly increasing eta >= 0 "
            "and finite values"
        )
        raise FilterDefinitionError(msg)

    last = eta[-1]

    def psi_hat(x):
        x = np.abs(np.asarray(x, dtype=float))
        return np.where(x <= last, np.interp(x, eta, values), 0.0)

    tol = config.get_config().filters.support_tol
    support_lo, support_hi = _outer_band(psi_hat, tol, scan_max=2.0 * last)
    knots = tuple(float(e) for e in eta) if eta.size <= 512 else ()
    return _build(
        name,
        psi_hat,
        support_lo,
        support_hi,
        knots,
        parameters={"samples": float(eta.size)},
    )


def effective_support(filter: Filter, tol: float) -> tuple[float, float]:
    if not 0 < tol < 1:
        msg = f"Support tolerance must lie in (0, 1), got {tol}"
        raise DomainError(msg)
    return _outer_band(filter.psi_hat, tol, scan_max=max(8.0, 2.0 * filter.support_hi))


def periodized_energy(filter: Filter, eta, c: float):
    """F0(eta) = sum_n |psi_hat(eta + 2 n c pi)|^2 over shifts meeting [-A, A]."""
    if not c > 0:
        msg = f"Period ratio c must be positive, got {c}"
        raise DomainError(msg)
    eta = np.asarray(eta, dtype=float)
    period = 2.0 * c * np.pi
    reach = filter.support_hi + np.max(np.abs(eta), initial=0.0)
    count = math.ceil(reach / period)
    shifts = np.arange(-count, count + 1) * period
    shifted = eta[..., None] + shifts
    energy = np.where(np.abs(shifted) <= filter.support_hi, filter.energy(shifted), 0.0)
    return energy.sum(axis=-1)


def _periodized_breakpoints(filter: Filter, c: float) -> tuple[float, ...]:
    period = 2.0 * c * np.pi
    upper = c * np.pi
    reach = filter.support_hi + upper
    count = math.ceil(reach / period)
    points = {
        p + n * period
        for p in filter.symmetric_breakpoints
        for n in range(-count, count + 1)
    }
    return tuple(sorted(p for p in points if 0 < p < upper))


def shannon_i_closed(c: float) -> float:
    if not c > 0:
        msg = f"Period ratio c must be positive, got {c}"
        raise DomainError(msg)
    if c >= 1:
        return 2.0 * np.pi
    n_star = math.floor((1.0 - c) / (2.0 * c))
    eta_star = np.pi * (1.0 - 2.0 * c * (1.0 + n_star))
    sign = 1.0 if eta_star >= 0 else -1.0
    return (
        2.0 * abs(eta_star) * (2 * n_star + 2 + sign) ** 2
        + 2.0 * (c * np.pi - abs(eta_star)) * (2 * n_star + 2) ** 2
    )


def i_of_c_quadrature(filter: Filter, c: float) -> float:
    def integrand(eta):
        return periodized_energy(filter, eta, c) ** 2

    points = _periodized_breakpoints(filter, c)
    return 2.0 * piecewise_quad(integrand, 0.0, c * np.pi, points)


def i_of_c(filter: Filter, c: float) -> float:
    """I(c) = int_{-c pi}^{c pi} F0(eta)^2 d eta."""
    if not c > 0:
        msg = f"Period ratio c must be positive, got {c}"
        raise DomainError(msg)
    value = i_of_c_quadrature(filter, c)
    if filter.name != SHANNON:
        return value

    closed = shannon_i_closed(c)
    if abs(closed - value) > 1e-8 * closed:
        msg = (
            f"Shannon I(c) closed form {closed!r} disagrees with "
            f"quadrature {value!r} at c={c}"
        )
        logger.error(msg)
        raise FilterDefinitionError(
            msg, {"c": c, "closed": closed, "quadrature": value}
        )
    return closed


def compare_reference(filter: Filter) -> list[ReferenceComparison]:
    computed = {"L0": filter.L0, "L2": filter.L2}
    if "fourth_moment" in filter.reference:
        computed["fourth_moment"] = fourth_moment(filter)

    comparisons = [
        ReferenceComparison(quantity=key, computed=computed[key], reference=value)
        for key, value in filter.reference.items()
        if key in computed
    ]
    for comparison in comparisons:
        if not comparison.consistent:
            logger.warning(
                "Filter '%s' %s by quadrature is %.12g, reference value %.12g",
                filter.name,
                comparison.quantity,
                comparison.computed,
                comparison.reference,
                extra={
                    "filter": {"name": filter.name, "quantity": comparison.quantity}
                },
            )
    return comparisons
