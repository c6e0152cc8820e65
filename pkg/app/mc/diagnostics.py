import logging

import numpy as np

from app.common.errors import DomainError
from app.simulate.models import SeriesGrid

logger = logging.getLogger(__name__)


def periodogram(series: SeriesGrid) -> np.ndarray:
    """Rows (lambda_k, |sum_t X_t e^(-i lambda_k t)|^2 / (2 pi n)) over all Fourier
    frequencies, sorted from -pi/dt to pi/dt."""
    n = series.n
    if n < 2:
        msg = f"Periodogram needs at least 2 samples, got {n}"
        raise DomainError(msg)
    power = np.abs(np.fft.fft(series.values)) ** 2 / (2.0 * np.pi * n)
    frequencies = 2.0 * np.pi * np.fft.fftfreq(n, d=series.dt)
    order = np.argsort(frequencies, kind="stable")
    return np.column_stack([frequencies[order], power[order]])


def sample_autocovariance(series: SeriesGrid, maxlag: int) -> np.ndarray:
    """Biased estimator (1/n) sum_t (X_t - mean)(X_{t+h} - mean), h = 0..maxlag."""
    n = series.n
    if not 0 <= maxlag < n:
        msg = f"Maximum lag must lie in [0, {n - 1}], got {maxlag}"
        raise DomainError(msg)
    centred = series.values - series.values.mean()
    return np.array(
        [np.dot(centred[: n - h], centred[h:]) / n for h in range(maxlag + 1)]
    )
