import dataclasses
import enum

import numpy as np

from app import config
from app.common.errors import PipelineError

__all__ = [
    "EmbeddingFallbackWarning",
    "FactorizationError",
    "PrecisionLossWarning",
    "SeriesGrid",
    "SeriesSpec",
    "SimulationConfig",
    "SimulationConfigError",
    "SimulatorKind",
    "TruncationTailWarning",
]


class FactorizationError(PipelineError):
    code = "factorization"


class SimulationConfigError(PipelineError):
    code = "simulation_config"


class PrecisionLossWarning(RuntimeWarning):
    pass


class TruncationTailWarning(RuntimeWarning):
    pass


class EmbeddingFallbackWarning(RuntimeWarning):
    pass


class SimulatorKind(str, enum.Enum):
    GEGENBAUER_MA = "gegenbauer-MA"
    SPECTRAL_BIN = "spectral-bin"
    EXACT_COVARIANCE = "exact-covariance"


@dataclasses.dataclass(frozen=True)
class SeriesSpec:
    """Sampling grid t0, t0 + dt, ..., t0 + (n - 1) dt without values."""

    t0: float = 0.0
    dt: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            msg = f"Grid step dt must be positive, got {self.dt}"
            raise SimulationConfigError(msg)
        if self.n < 1:
            msg = f"Grid size n must be at least 1, got {self.n}"
            raise SimulationConfigError(msg)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)


@dataclasses.dataclass(frozen=True, eq=False)
class SeriesGrid:
    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            msg = "Series values must be a nonempty 1-d array"
            raise SimulationConfigError(msg)
        if not np.all(np.isfinite(values)):
            msg = "Series values must be finite"
            raise SimulationConfigError(msg)
        if not self.dt > 0:
            msg = f"Grid step dt must be positive, got {self.dt}"
            raise SimulationConfigError(msg)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.n - 1)


def _default_truncation() -> int:
    return config.get_config().simulation.truncation_n


@dataclasses.dataclass(frozen=True)
class SimulationConfig:
    seed: int = 0
    truncation_N: int = dataclasses.field(default_factory=_default_truncation)
    replicate_index: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            msg = f"Seed must be a 64-bit unsigned integer, got {self.seed}"
            raise SimulationConfigError(msg)
        if self.truncation_N < 1:
            msg = f"Moving-average truncation must be at least 1, got {self.truncation_N}"
            raise SimulationConfigError(msg)
        if self.replicate_index < 0:
            msg = f"Replicate index must be nonnegative, got {self.replicate_index}"
            raise SimulationConfigError(msg)

    def for_replicate(self, replicate: int) -> "SimulationConfig":
        return dataclasses.replace(self, replicate_index=replicate)
