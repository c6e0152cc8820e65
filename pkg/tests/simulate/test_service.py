import logging

import numpy as np
import pytest
from scipy import linalg

from app.simulate import service
from app.simulate.gegenbauer import gegenbauer_coeffs
from app.simulate.models import (
    EmbeddingFallbackWarning,
    FactorizationError,
    SeriesSpec,
    SimulationConfig,
    SimulationConfigError,
    TruncationTailWarning,
)
from app.simulate.rng import rng_stream
from app.transform.models import CoefficientSource

AR_COLUMN = 0.5 ** np.arange(6)


def test_rng_stream_is_keyed_by_seed_replicate_and_level():
    first = rng_stream(7, 3, 1).standard_normal(4)

    np.testing.assert_array_equal(first, rng_stream(7, 3, 1).standard_normal(4))
    assert not np.array_equal(first, rng_stream(7, 4, 1).standard_normal(4))
    assert not np.array_equal(first, rng_stream(7, 3, 2).standard_normal(4))
    assert not np.array_equal(first, rng_stream(8, 3, 1).standard_normal(4))


def test_simulation_config_validation():
    with pytest.raises(SimulationConfigError):
        SimulationConfig(seed=-1)
    with pytest.raises(SimulationConfigError):
        SimulationConfig(seed=2**64)
    with pytest.raises(SimulationConfigError):
        SimulationConfig(truncation_N=0)
    assert SimulationConfig().truncation_N == 100
    assert SimulationConfig(seed=5).for_replicate(9).replicate_index == 9


def test_simulate_gegenbauer_is_deterministic(gegenbauer):
    cfg = SimulationConfig(seed=11, truncation_N=200)

    first = service.simulate_gegenbauer(gegenbauer, 300, cfg)
    again = service.simulate_gegenbauer(gegenbauer, 300, cfg)
    other = service.simulate_gegenbauer(gegenbauer, 300, cfg.for_replicate(1))

    assert first.n == 300
    assert (first.t0, first.dt) == (0.0, 1.0)
    np.testing.assert_array_equal(first.values, again.values)
    assert not np.array_equal(first.values, other.values)


def test_simulate_gegenbauer_is_the_moving_average(gegenbauer):
    cfg = SimulationConfig(seed=3, truncation_N=50)

    series = service.simulate_gegenbauer(gegenbauer, 10, cfg)

    eps = gegenbauer.sigma_eps * rng_stream(3, 0, 0).standard_normal(60)
    coeffs = gegenbauer_coeffs(gegenbauer.u, gegenbauer.d, 50)
    # X(t) = sum_n C_n eps(t - n) with eps indexed so that t = 0 sees 50 past values
    expected = [np.dot(coeffs, eps[t : t + 51][::-1]) for t in range(10)]
    np.testing.assert_allclose(series.values, expected, rtol=1e-12, atol=1e-12)


def test_simulate_gegenbauer_warns_on_heavy_tail(caplog):
    from app.spectral.models import GegenbauerParams

    heavy = GegenbauerParams(u=-0.5, d=0.45)
    with caplog.at_level(logging.WARNING), pytest.warns(TruncationTailWarning):
        service.simulate_gegenbauer(heavy, 20, SimulationConfig(truncation_N=10))

    assert "tail energy" in caplog.text


def test_simulate_gegenbauer_without_noise_is_zero():
    from app.spectral.models import GegenbauerParams

    silent = GegenbauerParams(u=-0.5, d=0.2, sigma_eps=0.0)
    series = service.simulate_gegenbauer(silent, 16, SimulationConfig(seed=1))

    np.testing.assert_array_equal(series.values, np.zeros(16))


def test_simulate_gegenbauer_rejects_empty_series(gegenbauer):
    with pytest.raises(SimulationConfigError):
        service.simulate_gegenbauer(gegenbauer, 0, SimulationConfig())


def test_simulate_spectral_validation(model):
    grid = SeriesSpec(n=8)
    with pytest.raises(SimulationConfigError, match="beyond"):
        service.simulate_spectral(model, grid, 1.5, 128, SimulationConfig())
    with pytest.raises(SimulationConfigError, match="64 bins"):
        service.simulate_spectral(model, grid, 4.0, 32, SimulationConfig())


def test_simulate_spectral_grid_and_determinism(model):
    grid = SeriesSpec(t0=-2.0, dt=0.5, n=9)
    cfg = SimulationConfig(seed=1)

    series = service.simulate_spectral(model, grid, 4.0, 64, cfg)

    assert (series.t0, series.dt, series.n) == (-2.0, 0.5, 9)
    np.testing.assert_array_equal(
        series.values, service.simulate_spectral(model, grid, 4.0, 64, cfg).values
    )


def test_simulate_spectral_variance_is_band_mass(model):
    grid = SeriesSpec(n=1)
    band = 4.0
    values = np.array(
        [
            service.simulate_spectral(
                model, grid, band, 64, SimulationConfig(seed=2, replicate_index=r)
            ).values[0]
            for r in range(1000)
        ]
    )

    expected = 2.0 * service.spectral_mass(model, 0.0, band)
    assert np.var(values) == pytest.approx(expected, rel=0.2)


def test_dense_sampler_factor_reproduces_covariance():
    sampler = service.DenseToeplitzSampler(AR_COLUMN)

    np.testing.assert_allclose(
        sampler.factor @ sampler.factor.T, linalg.toeplitz(AR_COLUMN)
    )


def test_dense_sampler_rejects_indefinite_covariance():
    with pytest.raises(FactorizationError) as excinfo:
        service.DenseToeplitzSampler(np.array([1.0, 2.0]))

    assert excinfo.value.details["size"] == 2
    assert excinfo.value.details["smallest_eigenvalue"] == pytest.approx(-1.0)


def test_circulant_embedding_reproduces_column():
    eigenvalues = service.CirculantSampler.embedding_eigenvalues(AR_COLUMN)

    assert eigenvalues.size == 2 * AR_COLUMN.size - 2
    assert eigenvalues.min() > 0
    column = np.fft.ifft(eigenvalues).real[: AR_COLUMN.size]
    np.testing.assert_allclose(column, AR_COLUMN)


def test_circulant_sampler_draw_covariance():
    eigenvalues = service.CirculantSampler.embedding_eigenvalues(AR_COLUMN)
    sampler = service.CirculantSampler(AR_COLUMN, eigenvalues)
    rng = rng_stream(0, 0, 0)

    draws = np.array([sampler.draw(rng) for _ in range(4000)])

    assert draws.shape == (4000, AR_COLUMN.size)
    np.testing.assert_allclose(np.cov(draws.T)[0], AR_COLUMN, atol=0.1)


def test_build_sampler_picks_by_size(monkeypatch):
    monkeypatch.setenv("SIM_DENSE_LIMIT", "4")

    small = service._build_sampler(AR_COLUMN[:4])
    assert isinstance(small, service.DenseToeplitzSampler)
    assert isinstance(service._build_sampler(AR_COLUMN), service.CirculantSampler)


def test_build_sampler_falls_back_to_dense(monkeypatch, mocker):
    monkeypatch.setenv("SIM_DENSE_LIMIT", "4")
    mocker.patch.object(
        service.CirculantSampler,
        "embedding_eigenvalues",
        return_value=np.array([1.0, -0.5, 1.0, 1.0]),
    )

    with pytest.warns(EmbeddingFallbackWarning):
        sampler = service._build_sampler(AR_COLUMN)

    assert isinstance(sampler, service.DenseToeplitzSampler)


def test_build_sampler_refuses_oversized_fallback(monkeypatch, mocker):
    monkeypatch.setenv("SIM_DENSE_LIMIT", "1")
    mocker.patch.object(
        service.CirculantSampler,
        "embedding_eigenvalues",
        return_value=np.array([1.0, -0.5]),
    )

    with pytest.warns(EmbeddingFallbackWarning), pytest.raises(FactorizationError):
        service._build_sampler(AR_COLUMN)


def test_get_sampler_is_cached(model, shannon):
    first = service.get_sampler(model, shannon, 8.0, 8.0, 4)

    assert service.get_sampler(model, shannon, 8.0, 8.0, 4) is first
    service.clear_sampler_cache()
    assert service.get_sampler(model, shannon, 8.0, 8.0, 4) is not first


def test_simulate_coefficients_exact(model, shannon):
    cfg = SimulationConfig(seed=4)

    def draw(level):
        return service.simulate_coefficients_exact(
            model, shannon, 8.0, 8.0, 5, cfg, level=level
        )

    block = draw(3)

    assert block.level == 3
    assert (block.a, block.gamma, block.m) == (8.0, 8.0, 5)
    assert block.source == CoefficientSource.EXACT_COVARIANCE
    np.testing.assert_array_equal(block.shifts, [8.0, 16.0, 24.0, 32.0, 40.0])
    np.testing.assert_array_equal(block.values, draw(3).values)
    assert not np.array_equal(block.values, draw(4).values)


def test_simulate_coefficients_exact_variance(model, shannon):
    from app.spectral.service import coefficient_covariance

    values = np.array(
        [
            service.simulate_coefficients_exact(
                model, shannon, 8.0, 8.0, 1, SimulationConfig(seed=9, replicate_index=r)
            ).values[0]
            for r in range(2000)
        ]
    )

    assert np.var(values) == pytest.approx(
        coefficient_covariance(model, shannon, 8.0, 0.0), rel=0.15
    )


def test_simulate_coefficients_exact_rejects_empty_block(model, shannon):
    with pytest.raises(SimulationConfigError):
        service.simulate_coefficients_exact(
            model, shannon, 8.0, 8.0, 0, SimulationConfig()
        )
