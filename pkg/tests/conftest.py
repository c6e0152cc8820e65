import pytest

from app import config
from app.dependencies import get_filter_repository
from app.simulate.service import clear_sampler_cache

pytest_plugins = ["tests.fixtures.domain"]


# Reset the global app config variable before each test
@pytest.fixture(autouse=True)
def reset_app_config():
    config.config = None
    yield
    config.config = None


@pytest.fixture(autouse=True)
def set_test_env(monkeypatch):
    """Pin the settings that tests rely on, whatever the developer's .env holds."""
    monkeypatch.delenv("LOG_CONFIG", raising=False)
    monkeypatch.delenv("FILTER_TABULATED_DIR", raising=False)
    monkeypatch.setenv("PYTHON_ENV", "test")
    monkeypatch.setenv("MC_WORKERS", "1")
    monkeypatch.setenv("MC_REPLICATES", "2000")
    monkeypatch.setenv("TRANSFORM_M_CAP", str(2**22))


@pytest.fixture(autouse=True)
def clear_caches():
    yield
    get_filter_repository.cache_clear()
    clear_sampler_cache()
