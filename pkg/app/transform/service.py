import logging
import math
import warnings
from collections.abc import Iterable

import numpy as np

from app import config
from app.filters.models import Filter, FilterDefinitionError
from app.filters.service import SHANNON, effective_support
from app.simulate.models import SeriesGrid
from app.transform.models import (
    CoefficientBlock,
    CoefficientSource,
    CoverageError,
    DegenerateDenominatorError,
    IncrementCount,
    LevelCheck,
    LevelScheme,
    TimeTruncationWarning,
    ValidationReport,
    integer_part,
)

logger = logging.getLogger(__name__)


def increment_gap(scheme: LevelScheme, j: int) -> float:
    """a_{j+1}^-2 - a_{j+2}^-2."""
    a1, a2 = scheme.a(j + 1), scheme.a(j + 2)
    if a1 == a2:
        msg = f"Scales at levels {j + 1} and {j + 2} coincide (a = {a1})"
        raise DegenerateDenominatorError(msg, {"level": j, "a": a1})
    return a1**-2 - a2**-2


def compute_M(scheme: LevelScheme, j: int) -> IncrementCount:
    """M_j = min(M_cap, [m_j / (a_{j+1}^-2 - a_{j+2}^-2)^2])."""
    m = scheme.m(j)
    a1, a2 = scheme.a(j + 1), scheme.a(j + 2)
    if a1 == a2:
        msg = f"Scales at levels {j + 1} and {j + 2} coincide (a = {a1})"
        raise DegenerateDenominatorError(msg, {"level": j, "a": a1})

    # (a1 a2)^4 / (a2^2 - a1^2)^2 loses less precision than 1 / gap^2.
    ratio = (a1 * a2) ** 4 / (a2**2 - a1**2) ** 2
    uncapped = integer_part(m * ratio)
    if scheme.M_cap is None or uncapped <= scheme.M_cap:
        return IncrementCount(value=uncapped, uncapped=uncapped, capped=False)

    logger.warning(
        "Increment count at level %d capped at %d (uncapped value %.4g)",
        j,
        scheme.M_cap,
        float(uncapped),
        extra={"level": j, "uncapped": uncapped},
    )
    return IncrementCount(value=scheme.M_cap, uncapped=uncapped, capped=True)


def _rates(scheme: LevelScheme, j: int) -> dict[str, float]:
    a, gamma, m, c = scheme.a(j), scheme.gamma(j), scheme.m(j), scheme.c
    return {
        "count_rate_decreasing": m / a**4,
        "shift_ratio_converging": abs(a / gamma - c),
        "clt_rate_decreasing": a * math.log(m) / (gamma * math.sqrt(m)),
        "count_eighth_rate_decreasing": m * a**-8,
        "shift_rate_decreasing": m**2 * a**8 * abs(gamma / a - 1.0 / c),
    }


# Rates that may legitimately stay constant (at zero, say) pass when non-increasing.
_NON_STRICT = {"shift_ratio_converging", "clt_rate_decreasing", "shift_rate_decreasing"}


def validate_scheme(
    scheme: LevelScheme, filter: Filter, j_range: Iterable[int] | None = None
) -> ValidationReport:
    """Finite-level checks of the growth conditions on (a_j, gamma_j, m_j).

    Each check compares level j with the following level(s); a check that needs
    a level outside the scheme is reported as None. Failures come back as
    warnings, never as errors: finite levels cannot certify a limit.
    """
    levels = tuple(scheme.levels if j_range is None else j_range)
    B_eff, A_eff = effective_support(filter, config.get_config().filters.support_tol)
    required = math.inf if B_eff <= 0 else A_eff / B_eff

    checks = []
    problems = []
    for j in levels:
        trends = dict.fromkeys([*_CHECK_MESSAGES, "scale_ratio_ok"])
        if j in scheme.levels and j + 1 in scheme.levels:
            here, following = _rates(scheme, j), _rates(scheme, j + 1)
            for name, value in here.items():
                if name in _NON_STRICT:
                    trends[name] = bool(following[name] <= value)
                else:
                    trends[name] = bool(following[name] < value)
            trends["scale_ratio_ok"] = bool(
                scheme.a(j + 1) / scheme.a(j) >= required * (1 - 1e-12)
            )
        if j + 1 in scheme.levels and j + 2 in scheme.levels:
            trends["disjoint_supports"] = bool(
                B_eff > 0
                and A_eff / scheme.a(j + 2) <= B_eff / scheme.a(j + 1) * (1 + 1e-12)
            )
        check = LevelCheck(level=j, **trends)
        checks.append(check)
        problems.extend(_describe(check, required))

    for problem in problems:
        logger.warning("Level scheme: %s", problem)
    return ValidationReport(
        levels=levels,
        checks=tuple(checks),
        scale_ratio_required=required,
        warnings=tuple(problems),
    )


_CHECK_MESSAGES = {
    "count_rate_decreasing": "m_j / a_j^4 does not decrease",
    "shift_ratio_converging": "|a_j / gamma_j - c| does not decrease",
    "clt_rate_decreasing": "a_j log m_j / (gamma_j sqrt(m_j)) does not decrease",
    "count_eighth_rate_decreasing": "m_j a_j^-8 does not decrease",
    "shift_rate_decreasing": "m_j^2 a_j^8 |gamma_j / a_j - 1/c| does not decrease",
    "disjoint_supports": "supports of the filters at levels j+1 and j+2 overlap",
}


def _describe(check: LevelCheck, required: float) -> list[str]:
    problems = []
    if check.scale_ratio_ok is False:
        problems.append(
            f"level {check.level}: a_(j+1) / a_j is below the required ratio A/B = {required:.6g}"
        )
    for field, message in _CHECK_MESSAGES.items():
        if getattr(check, field) is False:
            problems.append(f"level {check.level}: {message}")
    return problems


def _coverage_span(
    series: SeriesGrid, filter: Filter, scheme: LevelScheme, j: int, count: int
):
    if not filter.has_time_form:
        msg = f"Filter '{filter.name}' has no time-domain form"
        raise FilterDefinitionError(msg)
    if count < 1:
        msg = f"Coefficient count must be at least 1, got {count}"
        raise CoverageError(msg)

    a = scheme.a(j)
    shifts = scheme.b(j, np.arange(1, count + 1))
    lo = float(shifts[0]) - filter.time_radius * a
    hi = float(shifts[-1]) + filter.time_radius * a
    slack = 1e-9 * series.dt
    if lo < series.t0 - slack or hi > series.t_end + slack:
        msg = (
            f"Series covers [{series.t0:.6g}, {series.t_end:.6g}] but level {j} needs "
            f"[{lo:.6g}, {hi:.6g}]"
        )
        raise CoverageError(
            msg,
            {
                "level": j,
                "required": [lo, hi],
                "available": [series.t0, series.t_end],
            },
        )
    return a, shifts


def filter_coefficients(
    series: SeriesGrid, filter: Filter, scheme: LevelScheme, j: int, count: int
) -> CoefficientBlock:
    """delta_jk = a^-1/2 sum_i w_i psi((t_i - b_jk) / a) X(t_i) dt, k = 1..count."""
    a, shifts = _coverage_span(series, filter, scheme, j, count)
    if filter.name == SHANNON:
        error = config.get_config().filters.shannon_truncation_error
        warnings.warn(
            f"Shannon filter truncated at |t| <= {filter.time_radius:.6g} "
            f"(absolute error about {error:g})",
            TimeTruncationWarning,
            stacklevel=2,
        )

    weighted = series.values * series.dt
    weighted[0] *= 0.5
    weighted[-1] *= 0.5

    half = filter.time_radius * a / series.dt
    offsets = (shifts - series.t0) / series.dt
    aligned = np.allclose(offsets, np.round(offsets), rtol=0.0, atol=1e-9)

    values = np.empty(count)
    if aligned:
        # One kernel serves every shift when b_jk falls on the grid.
        width = math.floor(half + 1e-9)
        kernel = filter.psi_time(series.dt * np.arange(-width, width + 1) / a)
        for k, centre in enumerate(np.round(offsets).astype(int)):
            values[k] = np.dot(weighted[centre - width : centre + width + 1], kernel)
    else:
        for k, offset in enumerate(offsets):
            lo = max(0, math.ceil(offset - half - 1e-9))
            hi = min(series.n - 1, math.floor(offset + half + 1e-9))
            t = series.t0 + series.dt * np.arange(lo, hi + 1)
            kernel = filter.psi_time((t - shifts[k]) / a)
            values[k] = np.dot(weighted[lo : hi + 1], kernel)

    logger.debug("Computed %d coefficients at level %d (a=%g)", count, j, a)
    return CoefficientBlock(
        level=j,
        a=a,
        gamma=scheme.gamma(j),
        values=values / math.sqrt(a),
        source=CoefficientSource.SERIES_DISCRETIZED,
    )


def coefficient_grid(
    series: SeriesGrid,
    filter: Filter,
    scheme: LevelScheme,
    j_range: Iterable[int],
    count: int,
) -> list[CoefficientBlock]:
    return [filter_coefficients(series, filter, scheme, j, count) for j in j_range]
