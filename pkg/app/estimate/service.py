import logging
import math

import numpy as np

from app.estimate.asymptotics import asymptotic_covariance
from app.estimate.lambertw import BRANCH_POINT, lambert_w0
from app.estimate.models import (
    EstimateReport,
    EstimationDomainError,
    FeasiblePoint,
    InvariantViolationError,
    MomentPoint,
)
from app.filters.models import Filter
from app.spectral.models import ModelParams
from app.spectral.service import i_zeta, quadratic_variance
from app.transform.models import (
    CoefficientBlock,
    DegenerateDenominatorError,
    LevelScheme,
)
from app.transform.service import increment_gap

logger = logging.getLogger(__name__)


def mean_square_stat(block: CoefficientBlock) -> float:
    """(1/m) sum_k delta_jk^2."""
    return float(np.mean(block.values**2))


def increment_stat(dbar_j1: float, dbar_j2: float, a_j1: float, a_j2: float) -> float:
    """(dbar_{j+1} - dbar_{j+2}) / (a_{j+1}^-2 - a_{j+2}^-2)."""
    if a_j1 == a_j2:
        msg = f"Increment statistic needs distinct scales, got a = {a_j1} twice"
        raise DegenerateDenominatorError(msg, {"a": a_j1})
    return (dbar_j1 - dbar_j2) / (a_j1**-2 - a_j2**-2)


def _check_parameters(s0: float, alpha: float) -> None:
    if not (s0 > 1 and 0 < alpha < 0.5):
        msg = f"Parameters (s0={s0}, alpha={alpha}) lie outside (1, inf) x (0, 1/2)"
        raise EstimationDomainError(msg, {"s0": s0, "alpha": alpha})


def phi(s0: float, alpha: float) -> MomentPoint:
    """Phi(s0, alpha) = (s0^(-4 alpha), alpha s0^(-4 alpha - 2))."""
    _check_parameters(s0, alpha)
    y1 = s0 ** (-4.0 * alpha)
    return MomentPoint(y1=y1, y2=alpha * y1 / s0**2)


def phi_inverse(p: FeasiblePoint | MomentPoint) -> tuple[float, float]:
    y1, y2 = p.y1, p.y2
    argument = -y1 * math.log(y1) / (2.0 * y2)
    if argument < BRANCH_POINT:
        msg = f"Lambert W argument {argument!r} below -1/e at ({y1!r}, {y2!r})"
        logger.error(msg)
        raise InvariantViolationError(msg, {"y1": y1, "y2": y2})
    w = lambert_w0(argument)
    return math.exp(0.5 * w), (y2 / y1) * math.exp(w)


def truncate_T(y1: float, y2: float, eps: float) -> FeasiblePoint:
    """Clamp (y1, y2) into D with margins eps (first coordinate) and eps^2/4."""
    if not 0 < eps < 1:
        msg = f"Truncation level must lie in (0, 1), got {eps}"
        raise EstimationDomainError(msg)

    t1 = max(eps, min(y1, 1.0 - eps))
    lower = eps**2 / 4.0
    upper = t1**2 / 2.0 - eps**2 / 4.0
    if upper < lower:
        logger.warning("Truncation band collapsed at eps=%g, y1=%g", eps, t1)
        return FeasiblePoint(y1=t1, y2=lower, degenerate=True)
    return FeasiblePoint(y1=t1, y2=max(lower, min(y2, upper)))


def normalized_stats(
    dbar: float,
    dincr: float,
    filter: Filter,
    m: int,
    truth: ModelParams,
    increment_normalizer: float | None = None,
) -> tuple[float, float]:
    """S1 = sqrt(m) (dbar / L0 - s0^(-4 alpha)), S2 = sqrt(m) (dincr / (2 L2) - alpha s0^(-4 alpha - 2)).

    ``increment_normalizer`` replaces sqrt(m) in S2 when the increment count was
    capped below its nominal value.
    """
    if m < 1:
        msg = f"Coefficient count must be positive, got {m}"
        raise EstimationDomainError(msg)
    target = phi(truth.s0, truth.alpha)
    root_m = math.sqrt(m)
    s1 = root_m * (dbar / filter.L0 - target.y1)
    scale = root_m if increment_normalizer is None else increment_normalizer
    s2 = scale * (dincr / (2.0 * filter.L2) - target.y2)
    return s1, s2


def effective_increment_normalizer(scheme: LevelScheme, j: int, M: int) -> float:
    """sqrt(M) (a_{j+1}^-2 - a_{j+2}^-2); equals sqrt(m_j) when M is uncapped."""
    return math.sqrt(M) * increment_gap(scheme, j)


def adjusted_estimate(
    dbar: float,
    dincr: float,
    filter: Filter,
    m: int,
    c: float = 1.0,
    M: int | None = None,
    truth: ModelParams | None = None,
) -> EstimateReport:
    """Phi^-1 of the moment point truncated into D with eps = 1/m.

    V is evaluated at the estimate, or at ``truth`` when given.
    """
    if m < 1:
        msg = f"Coefficient count must be positive, got {m}"
        raise EstimationDomainError(msg)

    moment = MomentPoint(y1=dbar / filter.L0, y2=dincr / (2.0 * filter.L2))
    eps = 1.0 / m if m > 1 else 0.5
    truncated = truncate_T(moment.y1, moment.y2, eps)
    active = (truncated.y1, truncated.y2) != (moment.y1, moment.y2)
    s0_hat, alpha_hat = phi_inverse(truncated)

    if truth is None:
        V = asymptotic_covariance(s0_hat, alpha_hat, filter, c)
    else:
        V = asymptotic_covariance(truth.s0, truth.alpha, filter, c)

    if active:
        logger.debug(
            "Moment point (%.6g, %.6g) truncated to (%.6g, %.6g)",
            moment.y1,
            moment.y2,
            truncated.y1,
            truncated.y2,
        )
    return EstimateReport(
        delta_bar=dbar,
        delta_incr=dincr,
        moment=moment,
        epsilon=eps,
        truncated=truncated,
        truncation_active=active,
        s0_hat=s0_hat,
        alpha_hat=alpha_hat,
        V=V,
        m_j=m,
        M_j=m if M is None else M,
        covariance_at="estimate" if truth is None else "truth",
    )


def standardized_quadratic(
    block: CoefficientBlock, model: ModelParams, filter: Filter
) -> float:
    """(sum_k delta_jk^2 - m I_0(1/a)) / sqrt(Var(sum_k delta_jk^2))."""
    mean = block.m * i_zeta(model, filter, 0.0, 1.0 / block.a)
    variance = quadratic_variance(model, filter, block.a, block.gamma, block.m)
    return float((np.sum(block.values**2) - mean) / math.sqrt(variance))


def finite_level_targets(
    model: ModelParams, filter: Filter, scheme: LevelScheme, j: int
) -> tuple[float, float]:
    """Exact means of dbar_j and of the increment statistic at finite levels."""
    def level_mean(level):
        return i_zeta(model, filter, 0.0, 1.0 / scheme.a(level))

    gap = increment_gap(scheme, j)
    return level_mean(j), (level_mean(j + 1) - level_mean(j + 2)) / gap
