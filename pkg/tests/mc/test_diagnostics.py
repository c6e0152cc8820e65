import math

import numpy as np
import pytest

from app.common.errors import DomainError
from app.mc import diagnostics
from app.simulate.models import SeriesGrid, SimulationConfig
from app.simulate.service import simulate_gegenbauer
from app.spectral.models import GegenbauerParams


@pytest.fixture
def series():
    values = np.random.default_rng(1).standard_normal(64)
    return SeriesGrid(t0=0.0, dt=0.5, values=values)


def test_periodogram_frequencies_and_parseval(series):
    rows = diagnostics.periodogram(series)

    assert rows.shape == (64, 2)
    assert np.all(np.diff(rows[:, 0]) > 0)
    assert rows[0, 0] == pytest.approx(-2.0 * math.pi)
    assert rows[:, 1].sum() == pytest.approx(np.sum(series.values**2) / (2.0 * math.pi))


def test_periodogram_of_a_sinusoid_peaks_at_its_frequency():
    t = np.arange(128)
    frequency = 2.0 * math.pi * 8 / 128
    series = SeriesGrid(t0=0.0, dt=1.0, values=np.cos(frequency * t))
    rows = diagnostics.periodogram(series)

    peak = rows[np.argmax(rows[:, 1]), 0]
    assert abs(peak) == pytest.approx(frequency)


def test_periodogram_needs_two_samples():
    with pytest.raises(DomainError):
        diagnostics.periodogram(SeriesGrid(t0=0.0, dt=1.0, values=[1.0]))


def test_sample_autocovariance(series):
    gamma = diagnostics.sample_autocovariance(series, 3)

    assert gamma.shape == (4,)
    assert gamma[0] == pytest.approx(np.var(series.values))
    centred = series.values - series.values.mean()
    assert gamma[2] == pytest.approx(np.dot(centred[:-2], centred[2:]) / 64)


@pytest.mark.parametrize("maxlag", [-1, 64])
def test_sample_autocovariance_rejects_bad_lag(series, maxlag):
    with pytest.raises(DomainError):
        diagnostics.sample_autocovariance(series, maxlag)


def test_gegenbauer_autocovariance_oscillates_at_singular_frequency():
    g = GegenbauerParams(u=0.3, d=0.1)
    series = simulate_gegenbauer(g, 2**16, SimulationConfig(seed=8, truncation_N=2000))

    acov = diagnostics.sample_autocovariance(series, 200)

    # Bartlett-weighted cosine sum peaks at the cycle frequency arccos(u)
    lags = np.arange(1, 201)
    weights = 1.0 - lags / 201.0
    omega = np.arange(0.3, 3.0, 0.005)
    smoothed = acov[0] + 2.0 * np.cos(np.outer(omega, lags)) @ (weights * acov[1:])
    assert omega[np.argmax(smoothed)] == pytest.approx(math.acos(0.3), abs=0.1)
