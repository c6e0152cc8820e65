import logging
from pathlib import Path

import pydantic
import pydantic_settings

logger = logging.getLogger(__name__)


class QuadratureConfig(pydantic_settings.BaseSettings):
    model_config = pydantic_settings.SettingsConfigDict(env_file=".env", extra="ignore")
    abs_tol: float = pydantic.Field(default=1e-12, gt=0, alias="QUAD_ABS_TOL")
    rel_tol: float = pydantic.Field(default=1e-10, gt=0, alias="QUAD_REL_TOL")
    limit: int = pydantic.Field(default=400, ge=50, alias="QUAD_LIMIT")
    singular_abs_tol: float = pydantic.Field(
        default=1e-9, gt=0, alias="SINGULAR_ABS_TOL"
    )
    singular_rel_tol: float = pydantic.Field(
        default=1e-8, gt=0, alias="SINGULAR_REL_TOL"
    )
    gauss_panels: int = pydantic.Field(default=400, ge=1, alias="GAUSS_PANELS")
    gauss_order: int = pydantic.Field(default=20, ge=2, alias="GAUSS_ORDER")


class FilterConfig(pydantic_settings.BaseSettings):
    model_config = pydantic_settings.SettingsConfigDict(env_file=".env", extra="ignore")
    support_tol: float = pydantic.Field(
        default=1e-8, gt=0, lt=1, alias="FILTER_SUPPORT_TOL"
    )
    time_tol: float = pydantic.Field(default=1e-8, gt=0, lt=1, alias="FILTER_TIME_TOL")
    shannon_truncation_error: float = pydantic.Field(
        default=1e-4, gt=0, alias="FILTER_SHANNON_TRUNCATION_ERROR"
    )
    tabulated_dir: Path | None = pydantic.Field(
        default=None, alias="FILTER_TABULATED_DIR"
    )


class SimulationSettings(pydantic_settings.BaseSettings):
    model_config = pydantic_settings.SettingsConfigDict(env_file=".env", extra="ignore")
    truncation_n: int = pydantic.Field(default=100, ge=1, alias="SIM_TRUNCATION_N")
    tail_warning_ratio: float = pydantic.Field(
        default=0.01, gt=0, alias="SIM_TAIL_WARNING_RATIO"
    )
    dense_limit: int = pydantic.Field(default=4096, ge=1, alias="SIM_DENSE_LIMIT")
    psd_jitter: float = pydantic.Field(default=1e-10, gt=0, alias="SIM_PSD_JITTER")


class TransformConfig(pydantic_settings.BaseSettings):
    model_config = pydantic_settings.SettingsConfigDict(env_file=".env", extra="ignore")
    M_cap: int = pydantic.Field(default=2**22, ge=1, alias="TRANSFORM_M_CAP")


class MonteCarloSettings(pydantic_settings.BaseSettings):
    model_config = pydantic_settings.SettingsConfigDict(env_file=".env", extra="ignore")
    workers: int = pydantic.Field(default=1, ge=1, alias="MC_WORKERS")
    replicates: int = pydantic.Field(default=2000, ge=2, alias="MC_REPLICATES")


class AppConfig(pydantic_settings.BaseSettings):
    model_config = pydantic_settings.SettingsConfigDict(env_file=".env", extra="ignore")
    python_env: str = "production"
    log_config: str | None = None

    quadrature: QuadratureConfig = pydantic.Field(default_factory=QuadratureConfig)
    filters: FilterConfig = pydantic.Field(default_factory=FilterConfig)
    simulation: SimulationSettings = pydantic.Field(default_factory=SimulationSettings)
    transform: TransformConfig = pydantic.Field(default_factory=TransformConfig)
    mc: MonteCarloSettings = pydantic.Field(default_factory=MonteCarloSettings)


config: AppConfig | None = None


def get_config() -> AppConfig:
    global config
    if config is None:
        try:
            config = AppConfig()
        except pydantic.ValidationError as e:
            error_details = [
                {
                    "field": ".".join(str(loc) for loc in error["loc"]),
                    "type": error["type"],
                    "message": error["msg"],
                }
                for error in e.errors()
            ]

            error_strings = [
                f"Field '{error['field']}' {error['message']}"
                for error in error_details
            ]

            msg = f"Config validation failed with errors: {', '.join(error_strings)}"
            logger.error(msg)
            raise RuntimeError(msg) from None
    return config
