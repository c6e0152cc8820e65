import math

import numpy as np
import pytest

from app.estimate import service
from app.estimate.asymptotics import asymptotic_covariance
from app.estimate.models import EstimationDomainError, FeasiblePoint, MomentPoint
from app.spectral.models import ModelParams
from app.spectral.service import i_zeta
from app.transform.models import (
    CoefficientBlock,
    CoefficientSource,
    DegenerateDenominatorError,
)

S0_GRID = np.linspace(1.05, 5.0, 10)
ALPHA_GRID = np.linspace(0.05, 0.45, 9)


def _block(values, a=4.0, gamma=4.0):
    return CoefficientBlock(
        level=1,
        a=a,
        gamma=gamma,
        values=np.asarray(values, dtype=float),
        source=CoefficientSource.EXACT_COVARIANCE,
    )


def _targets(model, filter):
    point = service.phi(model.s0, model.alpha)
    return filter.L0 * point.y1, 2.0 * filter.L2 * point.y2


def test_mean_square_stat():
    assert service.mean_square_stat(_block([1.0, -2.0, 3.0])) == pytest.approx(14 / 3)


def test_increment_stat():
    # (1.0 - 0.5) / (1/4 - 1/16)
    assert service.increment_stat(1.0, 0.5, 2.0, 4.0) == pytest.approx(0.5 / 0.1875)


def test_increment_stat_rejects_equal_scales():
    with pytest.raises(DegenerateDenominatorError):
        service.increment_stat(1.0, 0.5, 2.0, 2.0)


def test_phi_values():
    point = service.phi(2.0, 0.25)

    assert point.y1 == pytest.approx(0.5)
    assert point.y2 == pytest.approx(0.25 * 0.5 / 4.0)
    assert point.in_domain()


@pytest.mark.parametrize(("s0", "alpha"), [(1.0, 0.25), (2.0, 0.0), (2.0, 0.5)])
def test_phi_rejects_parameters_outside_theta(s0, alpha):
    with pytest.raises(EstimationDomainError):
        service.phi(s0, alpha)


@pytest.mark.parametrize("s0", S0_GRID)
@pytest.mark.parametrize("alpha", ALPHA_GRID)
def test_phi_inverse_round_trip(s0, alpha):
    s0_hat, alpha_hat = service.phi_inverse(service.phi(float(s0), float(alpha)))

    assert s0_hat == pytest.approx(s0, abs=1e-9)
    assert alpha_hat == pytest.approx(alpha, abs=1e-9)


def test_truncate_T_leaves_interior_points():
    point = service.truncate_T(0.5, 0.03, 0.01)

    assert (point.y1, point.y2) == (0.5, 0.03)
    assert not point.degenerate


@pytest.mark.parametrize(
    ("y1", "y2", "expected"),
    [
        (1.2, 0.1, (0.9, 0.1)),
        (-0.3, 0.1, (0.1, 0.0025)),
        (0.5, -1.0, (0.5, 0.0025)),
        (0.5, 0.2, (0.5, 0.125 - 0.0025)),
    ],
)
def test_truncate_T_clamps_into_domain(y1, y2, expected):
    point = service.truncate_T(y1, y2, 0.1)

    assert point.y1 == pytest.approx(expected[0])
    assert point.y2 == pytest.approx(expected[1])
    assert isinstance(point, FeasiblePoint)


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1])
def test_truncate_T_rejects_bad_margin(eps):
    with pytest.raises(EstimationDomainError):
        service.truncate_T(0.5, 0.1, eps)


def test_feasible_point_membership():
    with pytest.raises(EstimationDomainError):
        FeasiblePoint(y1=0.5, y2=0.2)
    assert FeasiblePoint(y1=0.5, y2=0.2, degenerate=True).degenerate


def test_moment_point_must_be_finite():
    with pytest.raises(EstimationDomainError):
        MomentPoint(y1=float("inf"), y2=0.0)


def test_normalized_stats_vanish_at_targets(model, meyer):
    dbar, dincr = _targets(model, meyer)

    s1, s2 = service.normalized_stats(dbar, dincr, meyer, 100, model)

    assert s1 == pytest.approx(0.0, abs=1e-12)
    assert s2 == pytest.approx(0.0, abs=1e-12)


def test_normalized_stats_scaling(model, meyer):
    dbar, dincr = _targets(model, meyer)

    s1, s2 = service.normalized_stats(
        dbar + meyer.L0,
        dincr + 2.0 * meyer.L2,
        meyer,
        25,
        model,
        increment_normalizer=3.0,
    )

    assert s1 == pytest.approx(5.0)
    assert s2 == pytest.approx(3.0)


def test_normalized_stats_rejects_empty_level(model, meyer):
    with pytest.raises(EstimationDomainError):
        service.normalized_stats(1.0, 1.0, meyer, 0, model)


def test_effective_increment_normalizer_matches_root_m(small_scheme):
    # M = m / gap^2 exactly for this scheme
    value = service.effective_increment_normalizer(small_scheme, 1, 1152)

    assert value == pytest.approx(math.sqrt(8.0))


def test_adjusted_estimate_recovers_truth(model, meyer):
    dbar, dincr = _targets(model, meyer)

    report = service.adjusted_estimate(dbar, dincr, meyer, 1000)

    assert report.s0_hat == pytest.approx(2.0, rel=1e-10)
    assert report.alpha_hat == pytest.approx(0.25, rel=1e-10)
    assert report.epsilon == 1e-3
    assert not report.truncation_active
    assert report.M_j == 1000
    np.testing.assert_allclose(report.V, asymptotic_covariance(2.0, 0.25, meyer, 1.0))
    assert report.covariance_at == "estimate"


def test_adjusted_estimate_truncates_infeasible_moments(model, meyer):
    report = service.adjusted_estimate(-1.0, 5.0, meyer, 10, M=40, truth=model)

    assert report.truncation_active
    assert report.truncated.y1 == pytest.approx(0.1)
    assert 1.0 < report.s0_hat
    assert 0.0 < report.alpha_hat < 0.5
    assert report.covariance_at == "truth"
    np.testing.assert_allclose(report.V, asymptotic_covariance(2.0, 0.25, meyer, 1.0))

    payload = report.to_dict()
    assert payload["M_j"] == 40
    assert payload["truncation_active"] is True
    assert payload["V_evaluated_at"] == "truth"
    assert len(payload["V"]) == 4


def test_adjusted_estimate_single_coefficient_uses_half_margin(model, meyer):
    dbar, dincr = _targets(model, meyer)

    report = service.adjusted_estimate(dbar, dincr, meyer, 1)

    assert report.epsilon == 0.5
    assert report.truncation_active


def test_adjusted_estimate_rejects_empty_level(meyer):
    with pytest.raises(EstimationDomainError):
        service.adjusted_estimate(1.0, 1.0, meyer, 0)


def test_standardized_quadratic_is_zero_at_the_mean(model, shannon):
    a = 8.0
    mean = i_zeta(model, shannon, 0.0, 1.0 / a)
    block = _block(np.full(5, math.sqrt(mean)), a=a, gamma=a)

    value = service.standardized_quadratic(block, model, shannon)
    assert value == pytest.approx(0.0, abs=1e-9)


def test_finite_level_targets(small_scheme, meyer):
    model = ModelParams(s0=4.0, alpha=0.25)

    mean, increment = service.finite_level_targets(model, meyer, small_scheme, 1)

    assert mean == pytest.approx(i_zeta(model, meyer, 0.0, 1.0 / 2.5))
    expected = (
        i_zeta(model, meyer, 0.0, 1.0 / 3.0) - i_zeta(model, meyer, 0.0, 1.0 / 6.0)
    ) / (1 / 9 - 1 / 36)
    assert increment == pytest.approx(expected)
