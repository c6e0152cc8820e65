import logging
import math

import numpy as np
from scipy import stats

from app.common.errors import DomainError
from app.mc.models import Ellipse, NormalityResult

logger = logging.getLogger(__name__)

ANDERSON_DARLING = "anderson-darling (case 3)"


def _ad_p_value(modified: float) -> float:
    # Piecewise approximation for the normal case with estimated mean and variance.
    if modified >= 0.6:
        if modified > 153.467:
            return 0.0
        return math.exp(1.2937 - 5.709 * modified + 0.0186 * modified**2)
    if modified >= 0.34:
        return math.exp(0.9177 - 4.279 * modified - 1.38 * modified**2)
    if modified >= 0.2:
        return 1.0 - math.exp(-8.318 + 42.796 * modified - 59.938 * modified**2)
    return 1.0 - math.exp(-13.436 + 101.14 * modified - 223.73 * modified**2)


def normality_test(samples) -> NormalityResult:
    """Anderson-Darling test of normality with mean and variance estimated."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 20:
        msg = f"Normality test needs at least 20 samples, got {n}"
        raise DomainError(msg)

    sd = np.std(x, ddof=1)
    if not sd > 0:
        logger.warning("Normality test on a zero-variance sample; rejecting")
        return NormalityResult(
            test=ANDERSON_DARLING, statistic=math.inf, p_value=0.0, n=n
        )

    a2 = stats.anderson(x, dist="norm").statistic
    modified = a2 * (1.0 + 0.75 / n + 2.25 / n**2)
    p_value = min(1.0, max(0.0, _ad_p_value(modified)))
    return NormalityResult(
        test=ANDERSON_DARLING, statistic=float(a2), p_value=p_value, n=n
    )


def qq_data(samples, standardize: bool = True) -> np.ndarray:
    """Rows (normal quantile at (i - 0.5)/n, sorted sample)."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 2:
        msg = f"Q-Q data needs at least 2 samples, got {n}"
        raise DomainError(msg)
    if standardize:
        sd = np.std(x, ddof=1)
        if not sd > 0:
            msg = "Q-Q data undefined for a zero-variance sample"
            raise DomainError(msg)
        x = (x - x.mean()) / sd
    theoretical = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    return np.column_stack([theoretical, x])


def ellipse_data(xs, ys, level: float = 0.95) -> Ellipse:
    """Density ellipse of the sample covariance at the given chi-square level.

    ``axes`` are the (major, minor) semi-axes; ``angle`` is the direction of
    the major axis in [0, pi).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size or xs.size < 3:
        msg = f"Ellipse needs two equally long samples of size >= 3, got {xs.size} and {ys.size}"
        raise DomainError(msg)
    if not 0 < level < 1:
        msg = f"Ellipse level must lie in (0, 1), got {level}"
        raise DomainError(msg)

    eigenvalues, eigenvectors = np.linalg.eigh(np.cov(xs, ys))
    if not eigenvalues[0] > 1e-12 * max(eigenvalues[1], 0.0):
        msg = f"Sample covariance is degenerate (eigenvalues {eigenvalues.tolist()})"
        raise DomainError(msg)

    radius = math.sqrt(stats.chi2.ppf(level, df=2))
    major = eigenvectors[:, 1]
    angle = math.atan2(major[1], major[0]) % math.pi
    return Ellipse(
        center=(float(xs.mean()), float(ys.mean())),
        axes=(radius * math.sqrt(eigenvalues[1]), radius * math.sqrt(eigenvalues[0])),
        angle=angle,
        level=level,
    )
