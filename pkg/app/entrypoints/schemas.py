import configparser
import json
from pathlib import Path

import pydantic

from app import config
from app.common.errors import PipelineError
from app.simulate.models import SimulatorKind
from app.spectral.models import GegenbauerParams, ModelParams, RationalTaper
from app.transform.models import LevelScheme, ScaleRule, ShiftRule


class ConfigError(PipelineError):
    code = "config"


DEFAULT_COUNT = 256


class SectionSchema(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid", frozen=True)


class ModelSection(SectionSchema):
    s0: float = pydantic.Field(gt=1, description="Singularity location")
    alpha: float = pydantic.Field(gt=0, lt=0.5, description="Memory exponent")
    taper_scale: float = pydantic.Field(
        default=1.0,
        gt=0,
        description="Scale of the rational taper 1 / (1 + (lam / scale)^6)",
    )

    def to_params(self) -> ModelParams:
        return ModelParams(
            s0=self.s0, alpha=self.alpha, h=RationalTaper(self.taper_scale)
        )


class GegenbauerSection(SectionSchema):
    u: float = pydantic.Field(ge=-1, le=1)
    d: float = pydantic.Field(gt=0, lt=0.5)
    sigma_eps: float = pydantic.Field(default=1.0, ge=0)

    def to_params(self) -> GegenbauerParams:
        return GegenbauerParams(u=self.u, d=self.d, sigma_eps=self.sigma_eps)


class FilterSection(SectionSchema):
    name: str = "shannon"
    sigma: float | None = pydantic.Field(
        default=None, gt=0, description="Mexican hat width"
    )

    @property
    def parameters(self) -> dict[str, float]:
        return {} if self.sigma is None else {"sigma": self.sigma}


class SchemeSection(SectionSchema):
    first_level: int = pydantic.Field(default=1, ge=1)
    last_level: int = pydantic.Field(default=7, ge=1)
    scale_rule: ScaleRule = ScaleRule.GEOMETRIC
    base: float = pydantic.Field(default=2.0, gt=0)
    shift_rule: ShiftRule = ShiftRule.PROPORTIONAL
    shift_step: float = pydantic.Field(default=1.0, gt=0)
    c: float = pydantic.Field(default=1.0, gt=0)
    count: int | None = pydantic.Field(default=None, ge=1)
    count_exponent: float | None = pydantic.Field(default=None, gt=0)
    M_cap: int | None = pydantic.Field(default=None, ge=1)
    level: int | None = pydantic.Field(
        default=None, ge=1, description="Analysis level j"
    )

    @pydantic.model_validator(mode="after")
    def check_rules(self):
        if self.last_level < self.first_level:
            msg = (
                f"last_level {self.last_level} precedes "
                f"first_level {self.first_level}"
            )
            raise ValueError(msg)
        if self.count is not None and self.count_exponent is not None:
            msg = "give either count or count_exponent, not both"
            raise ValueError(msg)
        last_usable = self.last_level - 2
        if self.level is not None and not self.first_level <= self.level <= last_usable:
            msg = (
                f"level {self.level} needs levels up to {self.level + 2} "
                "within the scheme"
            )
            raise ValueError(msg)
        return self

    def to_scheme(self) -> LevelScheme:
        count = self.count
        if count is None and self.count_exponent is None:
            count = DEFAULT_COUNT
        cap = self.M_cap
        if cap is None:
            cap = config.get_config().transform.M_cap
        return LevelScheme.from_rules(
            (self.first_level, self.last_level),
            scale_rule=self.scale_rule,
            base=self.base,
            shift_rule=self.shift_rule,
            shift_step=self.shift_step,
            c=self.c,
            count=count,
            count_exponent=self.count_exponent,
            M_cap=cap,
        )


class SimulationSection(SectionSchema):
    simulator: SimulatorKind = SimulatorKind.EXACT_COVARIANCE
    seed: int = pydantic.Field(default=0, ge=0, lt=2**64)
    length: int = pydantic.Field(default=4096, ge=1)
    t0: float = 0.0
    dt: float = pydantic.Field(default=1.0, gt=0)
    band: float | None = pydantic.Field(default=None, gt=0)
    bins: int = pydantic.Field(default=1024, ge=64)
    truncation_N: int | None = pydantic.Field(default=None, ge=1)


class MonteCarloSection(SectionSchema):
    replicates: int | None = pydantic.Field(default=None, ge=2)
    workers: int | None = pydantic.Field(default=None, ge=1)


class OutputSection(SectionSchema):
    svg: bool = False
    maxlag: int = pydantic.Field(default=200, ge=0)
    grid_count: int = pydantic.Field(default=64, ge=1)


class RunConfig(SectionSchema):
    model: ModelSection | None = None
    gegenbauer: GegenbauerSection | None = None
    filter: FilterSection = pydantic.Field(default_factory=FilterSection)
    scheme: SchemeSection = pydantic.Field(default_factory=SchemeSection)
    simulation: SimulationSection = pydantic.Field(default_factory=SimulationSection)
    mc: MonteCarloSection = pydantic.Field(default_factory=MonteCarloSection)
    output: OutputSection = pydantic.Field(default_factory=OutputSection)

    @property
    def analysis_level(self) -> int:
        if self.scheme.level is not None:
            return self.scheme.level
        return self.scheme.first_level

    def require_model(self) -> ModelParams:
        if self.model is None:
            msg = "Section [model] with s0 and alpha is required for this command"
            raise ConfigError(msg, {"section": "model"})
        return self.model.to_params()

    def require_gegenbauer(self) -> GegenbauerParams:
        if self.gegenbauer is None:
            msg = "Section [gegenbauer] with u and d is required for this simulator"
            raise ConfigError(msg, {"section": "gegenbauer"})
        return self.gegenbauer.to_params()

    def resolved(self) -> "RunConfig":
        """Copy with every environment-dependent default filled in."""
        app_config = config.get_config()
        scheme = self.scheme.model_copy(
            update={
                "M_cap": self.scheme.M_cap or app_config.transform.M_cap,
                "level": self.analysis_level,
                "count": (
                    DEFAULT_COUNT
                    if self.scheme.count is None and self.scheme.count_exponent is None
                    else self.scheme.count
                ),
            }
        )
        simulation = self.simulation.model_copy(
            update={
                "truncation_N": (
                    self.simulation.truncation_N or app_config.simulation.truncation_n
                )
            }
        )
        mc = self.mc.model_copy(
            update={
                "replicates": self.mc.replicates or app_config.mc.replicates,
                "workers": self.mc.workers or app_config.mc.workers,
            }
        )
        return self.model_copy(
            update={"scheme": scheme, "simulation": simulation, "mc": mc}
        )


def _validation_details(err: pydantic.ValidationError) -> list[dict]:
    return [
        {
            "field": ".".join(str(loc) for loc in error["loc"]),
            "type": error["type"],
            "message": error["msg"],
        }
        for error in err.errors()
    ]


def parse_run_config(sections: dict[str, dict]) -> RunConfig:
    try:
        return RunConfig.model_validate(sections)
    except pydantic.ValidationError as err:
        details = _validation_details(err)
        error_strings = [f"'{d['field']}' {d['message']}" for d in details]
        msg = f"Run configuration invalid: {', '.join(error_strings)}"
        raise ConfigError(msg, {"errors": details}) from None


def load_run_config(path: Path | None) -> RunConfig:
    """Read an INI run configuration, or the resolved config echoed in a manifest."""
    if path is None:
        return RunConfig()
    if not path.is_file():
        msg = f"Configuration file not found: {path}"
        raise ConfigError(msg, {"path": str(path)})

    if path.suffix == ".json":
        try:
            manifest = json.loads(path.read_text(encoding="utf-8"))
            return parse_run_config(manifest["config"])
        except (json.JSONDecodeError, KeyError, TypeError) as err:
            msg = f"Manifest {path} holds no resolved configuration"
            raise ConfigError(msg, {"path": str(path)}) from err

    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as err:
        msg = f"Cannot parse configuration file {path}: {err}"
        raise ConfigError(msg, {"path": str(path)}) from err
    return parse_run_config({name: dict(parser[name]) for name in parser.sections()})
