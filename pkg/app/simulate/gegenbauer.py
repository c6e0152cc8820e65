import logging
import math
import warnings

import numpy as np
from scipy import special

from app.simulate.models import PrecisionLossWarning, SimulationConfigError

logger = logging.getLogger(__name__)

# Digits the explicit alternating sum may lose before the result is flagged.
_CANCELLATION_LIMIT = 1e6


def _check(u: float, d: float) -> None:
    if not abs(u) <= 1 or not 0 < d < 0.5:
        msg = f"Gegenbauer coefficients need |u| <= 1 and 0 < d < 1/2, got u={u}, d={d}"
        raise SimulationConfigError(msg)


def gegenbauer_coeff_explicit(u: float, d: float, n: int) -> float:
    """C_n^(d)(u) by its explicit alternating sum.

    Gamma(d + n - k) / Gamma(d) is the rising factorial (d)_(n-k). Meant as an
    oracle for moderate n; cancellation beyond six digits is reported with a
    PrecisionLossWarning.
    """
    _check(u, d)
    if n < 0:
        msg = f"Polynomial degree must be nonnegative, got {n}"
        raise SimulationConfigError(msg)

    terms = [
        (-1) ** k
        * (2.0 * u) ** (n - 2 * k)
        * special.poch(d, n - k)
        / (math.factorial(k) * math.factorial(n - 2 * k))
        for k in range(n // 2 + 1)
    ]
    value = math.fsum(terms)
    largest = max(abs(t) for t in terms)
    if largest > _CANCELLATION_LIMIT * abs(value):
        warnings.warn(
            f"Explicit Gegenbauer sum for n={n} lost more than six digits to cancellation",
            PrecisionLossWarning,
            stacklevel=2,
        )
    return value


def gegenbauer_coeffs(u: float, d: float, N: int) -> np.ndarray:
    """C_0..C_N by the three-term recurrence."""
    _check(u, d)
    if N < 1:
        msg = f"Truncation level must be at least 1, got {N}"
        raise SimulationConfigError(msg)

    coeffs = np.empty(N + 1)
    coeffs[0] = 1.0
    coeffs[1] = 2.0 * u * d
    for n in range(2, N + 1):
        coeffs[n] = (
            2.0 * u * (1.0 + (d - 1.0) / n) * coeffs[n - 1]
            - (1.0 + 2.0 * (d - 1.0) / n) * coeffs[n - 2]
        )
    return coeffs


def tail_energy(u: float, d: float, N: int) -> tuple[float, float]:
    """(sum_{n<=N} C_n^2, extrapolated sum_{n>N} C_n^2).

    The tail uses the n^(2d-2) envelope of C_n^2 fitted on n in [N/2, N].
    """
    coeffs = gegenbauer_coeffs(u, d, N)
    head = float(np.sum(coeffs**2))
    window = np.arange(max(1, N // 2), N + 1)
    level = float(np.mean(coeffs[window] ** 2 * window ** (2.0 - 2.0 * d)))
    tail = level * N ** (2.0 * d - 1.0) / (1.0 - 2.0 * d)
    return head, tail
