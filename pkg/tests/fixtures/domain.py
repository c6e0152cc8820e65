import textwrap

import pytest

from app.filters import service as filter_service
from app.spectral.models import GegenbauerParams, ModelParams, RationalTaper
from app.transform.models import LevelScheme


@pytest.fixture
def shannon():
    return filter_service.shannon_filter()


@pytest.fixture
def meyer():
    return filter_service.meyer_filter()


@pytest.fixture
def mexican_hat():
    return filter_service.mexican_hat_filter(1.0)


@pytest.fixture
def model():
    return ModelParams(s0=2.0, alpha=0.25)


@pytest.fixture
def wide_taper_model():
    return ModelParams(s0=2.0, alpha=0.25, h=RationalTaper(scale=8.0))


@pytest.fixture
def gegenbauer():
    # arccos(-0.5) = 2 pi / 3 > 1
    return GegenbauerParams(u=-0.5, d=0.2)


@pytest.fixture
def small_scheme():
    """Three levels with a small increment count: M = 144 m."""
    return LevelScheme(
        first_level=1,
        scales=(2.5, 3.0, 6.0),
        shifts=(2.5, 3.0, 6.0),
        counts=(8, 8, 8),
        c=1.0,
    )


@pytest.fixture
def write_run_config(tmp_path):
    """Write an INI run configuration and return its path."""

    def write(body: str, name: str = "run.ini"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(body).lstrip(), encoding="utf-8")
        return path

    return write
