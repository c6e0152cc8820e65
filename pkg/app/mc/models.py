import dataclasses

import numpy as np

from app.common.errors import PipelineError
from app.simulate.models import SimulationConfigError, SimulatorKind
from app.spectral.models import GegenbauerParams, ModelParams
from app.transform.models import IncrementCount, LevelScheme

__all__ = [
    "Ellipse",
    "MCConfig",
    "MCReport",
    "NormalityResult",
    "ReplicateError",
]


class ReplicateError(PipelineError):
    code = "replicate_failed"


@dataclasses.dataclass(frozen=True)
class MCConfig:
    """One Monte Carlo study at level j of ``scheme``.

    ``dt``, ``band`` and ``bins`` drive the series simulators only; the
    exact-covariance simulator draws coefficients directly.
    """

    replicates: int
    truth: ModelParams | GegenbauerParams
    filter_name: str
    scheme: LevelScheme
    level: int
    simulator: SimulatorKind = SimulatorKind.EXACT_COVARIANCE
    seed: int = 0
    filter_parameters: dict[str, float] = dataclasses.field(default_factory=dict)
    truncation_N: int | None = None
    dt: float = 1.0
    band: float | None = None
    bins: int = 1024
    workers: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "simulator", SimulatorKind(self.simulator))
        if self.replicates < 2:
            msg = f"Monte Carlo needs at least 2 replicates, got {self.replicates}"
            raise SimulationConfigError(msg)
        for j in (self.level, self.level + 1, self.level + 2):
            if j not in self.scheme.levels:
                msg = f"Level {j} is not configured in the level scheme"
                raise SimulationConfigError(msg, {"level": j})
        if self.simulator == SimulatorKind.GEGENBAUER_MA:
            if not isinstance(self.truth, GegenbauerParams):
                msg = "The gegenbauer-MA simulator needs Gegenbauer parameters (u, d)"
                raise SimulationConfigError(msg)
            if self.dt != 1.0:
                msg = f"The gegenbauer-MA simulator samples the integer grid, got dt={self.dt}"
                raise SimulationConfigError(msg)
        if self.workers is not None and self.workers < 1:
            msg = f"Worker count must be positive, got {self.workers}"
            raise SimulationConfigError(msg)


@dataclasses.dataclass(frozen=True)
class NormalityResult:
    test: str
    statistic: float
    p_value: float
    n: int

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    axes: tuple[float, float]
    angle: float
    level: float

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "axes": list(self.axes),
            "angle": self.angle,
            "level": self.level,
        }


@dataclasses.dataclass(frozen=True, eq=False)
class MCReport:
    """Aggregated replicates; arrays are indexed by replicate number."""

    samples_S1: np.ndarray
    samples_S2: np.ndarray
    estimates: np.ndarray
    truncated: np.ndarray
    normality: dict[str, NormalityResult | None]
    corr_S1_S2: float
    empirical_var_S1: float
    empirical_var_S2: float
    theory_var_S1: float
    theory_var_S2: float
    truncation_rate: float
    scaled_errors: np.ndarray
    error_ellipse: Ellipse | None
    theory_covariance: np.ndarray
    increment_count: IncrementCount
    increment_normalizer: float
    level_independence: str
    seed: int
    replicates: int
    simulator: SimulatorKind
    filter_name: str
    level: int
    m: int
    runtime: float = dataclasses.field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        """Deterministic rendering; ``runtime`` is left to the run manifest."""
        return {
            "replicates": self.replicates,
            "seed": self.seed,
            "simulator": self.simulator.value,
            "filter": self.filter_name,
            "level": self.level,
            "m_j": self.m,
            "M_j": self.increment_count.value,
            "M_j_uncapped": self.increment_count.uncapped,
            "M_j_capped": self.increment_count.capped,
            "increment_normalizer": self.increment_normalizer,
            "level_independence": self.level_independence,
            "normality": {
                key: None if result is None else result.to_dict()
                for key, result in self.normality.items()
            },
            "corr_S1_S2": self.corr_S1_S2,
            "empirical_var_S1": self.empirical_var_S1,
            "empirical_var_S2": self.empirical_var_S2,
            "theory_var_S1": self.theory_var_S1,
            "theory_var_S2": self.theory_var_S2,
            "truncation_rate": self.truncation_rate,
            "theory_covariance": [float(v) for v in self.theory_covariance.ravel()],
            "error_ellipse": (
                None if self.error_ellipse is None else self.error_ellipse.to_dict()
            ),
            "samples_S1": [float(v) for v in self.samples_S1],
            "samples_S2": [float(v) for v in self.samples_S2],
            "estimates": [[float(s0), float(alpha)] for s0, alpha in self.estimates],
            "truncated": [bool(flag) for flag in self.truncated],
        }
