import functools

from app import config
from app.filters.repository import AbstractFilterRepository, BuiltinFilterRepository


def get_app_config() -> config.AppConfig:
    return config.get_config()


@functools.cache
def get_filter_repository() -> AbstractFilterRepository:
    app_config = get_app_config()
    return BuiltinFilterRepository(app_config.filters.tabulated_dir)
