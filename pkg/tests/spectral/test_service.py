import math

import numpy as np
import pytest

from app import config
from app.common.errors import DomainError
from app.estimate.asymptotics import asymptotic_V1
from app.spectral import service
from app.spectral.models import GegenbauerParams, ParameterRangeError, SingularityError


def test_spectral_density_at_origin(model):
    # h(0) / s0^(4 alpha) = 1 / 2
    assert service.spectral_density(model, 0.0) == pytest.approx(0.5, rel=1e-15)


def test_spectral_density_is_even_and_vectorized(model):
    lam = np.array([0.3, 1.0, 2.5, 7.0])

    values = service.spectral_density(model, lam)

    assert values.shape == (4,)
    np.testing.assert_allclose(values, service.spectral_density(model, -lam))


@pytest.mark.parametrize("lam", [2.0, -2.0])
def test_spectral_density_raises_at_singularity(model, lam):
    with pytest.raises(SingularityError):
        service.spectral_density(model, lam)


def test_default_taper_scalar_and_array():
    assert service.default_taper(0.0) == 1.0
    assert service.default_taper(1.0) == 0.5
    assert service.default_taper(np.zeros(3)).shape == (3,)


@pytest.mark.parametrize("lam", [0.05, 0.08, 0.1])
def test_default_taper_is_flat_to_fifth_order(lam):
    # 1 - h(lam) = lam^6 / (1 + lam^6): derivatives one to five vanish at 0
    assert (1.0 - service.default_taper(lam)) / lam**6 == pytest.approx(1.0, rel=1e-5)
    assert service.default_taper(-lam) == service.default_taper(lam)


def _shannon_riemann_sum(model, zeta, x, panels=10**6):
    """Midpoint sum of cos(zeta eta) h(x eta) / (s0^2 - x^2 eta^2)^(2 alpha)
    over the Shannon band [-pi, pi]."""
    eta = -np.pi + (np.arange(panels) + 0.5) * (2 * np.pi / panels)
    scaled = x * eta
    taper = 1.0 / (1.0 + scaled**6)
    values = np.cos(zeta * eta) * taper / (model.s0**2 - scaled**2) ** (2 * model.alpha)
    return float(np.sum(values) * (2 * np.pi / panels))


def test_i_zeta_matches_riemann_sum(model, shannon):
    value = service.i_zeta(model, shannon, 0.0, 0.1)

    assert value == pytest.approx(_shannon_riemann_sum(model, 0.0, 0.1), rel=1e-6)


@pytest.mark.parametrize("zeta", [0.0, 0.5, 1.3, 2.7, 5.0])
@pytest.mark.parametrize("x", [0.05, 0.1, 0.2, 0.4])
def test_i_zeta_grid_matches_riemann_sum(model, shannon, zeta, x):
    scale = service.i_zeta(model, shannon, 0.0, x)

    value = service.i_zeta(model, shannon, zeta, x)

    expected = _shannon_riemann_sum(model, zeta, x)
    assert value == pytest.approx(expected, rel=1e-6, abs=1e-6 * scale)


def test_i_zeta_rejects_band_reaching_singularity(model, shannon):
    # x * A = pi > s0 = 2
    with pytest.raises(DomainError):
        service.i_zeta(model, shannon, 0.0, 1.0)


def test_i_zeta_small_x_limit(model, shannon):
    # As x -> 0, I_0(x) -> s0^(-4 alpha) L0
    value = service.i_zeta(model, shannon, 0.0, 1e-4)

    assert value == pytest.approx(model.s0 ** (-4 * model.alpha) * shannon.L0, rel=1e-7)


def test_i_zeta_expansion_error_is_fourth_order(wide_taper_model, meyer):
    model = wide_taper_model

    def error(x):
        return abs(
            service.i_zeta(model, meyer, 0.7, x)
            - service.i_zeta_expansion(model, meyer, 0.7, x)
        )

    coarse, fine = error(0.1), error(0.05)

    assert coarse < 1e-3 * abs(service.i_zeta(model, meyer, 0.7, 0.1))
    assert 12.0 < coarse / fine < 20.0


@pytest.mark.parametrize("a", [4.0, 50.0])
def test_coefficient_covariance_at_zero_lag_matches_direct_variance(model, shannon, a):
    via_eta = service.coefficient_covariance(model, shannon, a, 0.0)
    via_xi = service.coefficient_variance_direct(model, shannon, a)

    assert via_eta == pytest.approx(via_xi, rel=1e-7)


def test_coefficient_variance_direct_crosses_the_singularity(model, shannon):
    # At a = 1 the band pi reaches s0 = 2; only the direct form applies.
    value = service.coefficient_variance_direct(model, shannon, 1.0)

    assert math.isfinite(value)
    assert value > 0


def test_spectral_mass_is_symmetric(model):
    half = service.spectral_mass(model, 0.0, 3.0)
    full = service.spectral_mass(model, -3.0, 3.0)

    assert half > 0
    assert full == pytest.approx(2.0 * half, rel=1e-8)


def test_spectral_mass_is_additive_across_singularity(model):
    whole = service.spectral_mass(model, 1.0, 3.0)
    below = service.spectral_mass(model, 1.0, 2.0)
    above = service.spectral_mass(model, 2.0, 3.0)

    assert whole == pytest.approx(below + above, rel=1e-8)


@pytest.mark.parametrize(
    ("filter_name", "a", "gamma", "m"),
    [
        ("mexican_hat", 8.0, 8.0, 12),
        # jumps of psi_hat on grid nodes
        ("shannon", 32.0, 32.0, 64),
        # jumps inside grid cells
        ("shannon", 7.0, 5.0, 12),
    ],
)
def test_covariance_column_fft_matches_lagwise_quadrature(
    request, model, filter_name, a, gamma, m
):
    filter = request.getfixturevalue(filter_name)
    dense = np.array(
        [service.coefficient_covariance(model, filter, a, gamma * q) for q in range(m)]
    )

    fft = service._covariance_column_fft(model, filter, a, gamma, m)

    np.testing.assert_allclose(fft, dense, rtol=0, atol=1e-7 * dense[0])


def test_covariance_column_switches_to_fft_above_dense_limit(
    monkeypatch, mocker, model, mexican_hat
):
    monkeypatch.setenv("SIM_DENSE_LIMIT", "4")
    config.config = None  # the filter fixture already cached the config
    fft = mocker.spy(service, "_covariance_column_fft")

    column = service.covariance_column(model, mexican_hat, 8.0, 8.0, 6)

    fft.assert_called_once()
    assert column.shape == (6,)
    assert not column.flags.writeable


def test_quadratic_variance_single_coefficient(model, shannon):
    a = 8.0
    variance = service.quadratic_variance(model, shannon, a, a, 1)

    mean = service.i_zeta(model, shannon, 0.0, 1 / a)
    assert variance == pytest.approx(2.0 * mean**2)


def test_quadratic_variance_matches_double_sum(model, shannon):
    a, gamma, m = 8.0, 8.0, 64
    by_lag = {
        q: service.coefficient_covariance(model, shannon, a, gamma * q)
        for q in range(-(m - 1), m)
    }

    double_sum = 2.0 * sum(by_lag[i - k] ** 2 for i in range(m) for k in range(m))

    variance = service.quadratic_variance(model, shannon, a, gamma, m)
    assert variance == pytest.approx(double_sum, rel=1e-12)


def test_quadratic_variance_rejects_empty_block(model, shannon):
    with pytest.raises(DomainError):
        service.quadratic_variance(model, shannon, 8.0, 8.0, 0)


def test_quadratic_variance_approaches_limit(model, shannon):
    """Var(sum delta^2) / m approaches V1 as a_j = gamma_j = 2^j grows."""
    limit = asymptotic_V1(model, shannon, 1.0)
    per_coefficient = [
        service.quadratic_variance(model, shannon, 2.0**j, 2.0**j, 128) / 128
        for j in (4, 5, 6)
    ]
    gaps = [abs(value - limit) / limit for value in per_coefficient]

    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.05


def test_gegenbauer_to_model(gegenbauer):
    model = service.gegenbauer_to_model(gegenbauer)

    assert model.s0 == pytest.approx(2.0 * math.pi / 3.0)
    assert model.alpha == gegenbauer.d


def test_gegenbauer_to_model_rejects_low_frequency():
    with pytest.raises(ParameterRangeError):
        service.gegenbauer_to_model(GegenbauerParams(u=0.9, d=0.2))
