import dataclasses
import math
from collections.abc import Callable

import numpy as np

from app.common.errors import DomainError, PipelineError

__all__ = [
    "DomainError",
    "GegenbauerParams",
    "ModelParams",
    "ParameterRangeError",
    "RationalTaper",
    "SingularityError",
]


class SingularityError(PipelineError):
    code = "singularity"


class ParameterRangeError(PipelineError):
    code = "parameter_range"


@dataclasses.dataclass(frozen=True)
class RationalTaper:
    """h(lam) = 1 / (1 + (lam / scale)^6).

    Even, bounded, h(0) = 1 with the first five derivatives vanishing at the
    origin, and integrable against (1 + |lam|)^(-eps).
    """

    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            msg = f"Taper scale must be positive, got {self.scale}"
            raise ParameterRangeError(msg)

    def __call__(self, lam):
        return 1.0 / (1.0 + (np.asarray(lam, dtype=float) / self.scale) ** 6)


_TAPER_CHECK_GRID = np.linspace(0.0, 50.0, 501)


@dataclasses.dataclass(frozen=True)
class ModelParams:
    s0: float
    alpha: float
    h: Callable = RationalTaper()

    def __post_init__(self):
        if not (math.isfinite(self.s0) and self.s0 > 1):
            msg = f"Singularity location s0 must exceed 1, got {self.s0}"
            raise ParameterRangeError(msg, {"s0": self.s0})
        if not 0 < self.alpha < 0.5:
            msg = f"Memory exponent alpha must lie in (0, 1/2), got {self.alpha}"
            raise ParameterRangeError(msg, {"alpha": self.alpha})

        at_zero = float(self.h(0.0))
        if abs(at_zero - 1.0) > 1e-12:
            msg = f"Taper must satisfy h(0) = 1, got {at_zero}"
            raise ParameterRangeError(msg)

        plus = np.asarray(self.h(_TAPER_CHECK_GRID), dtype=float)
        minus = np.asarray(self.h(-_TAPER_CHECK_GRID), dtype=float)
        if not np.all(np.isfinite(plus)) or np.any(plus < 0):
            msg = "Taper must be finite and nonnegative"
            raise ParameterRangeError(msg)
        if not np.allclose(plus, minus, rtol=1e-12, atol=1e-15):
            msg = "Taper must be even"
            raise ParameterRangeError(msg)
        if not float(self.h(self.s0)) > 0:
            msg = f"Taper must be positive at the singularity s0={self.s0}"
            raise ParameterRangeError(msg)

    @property
    def taper_description(self) -> str:
        if isinstance(self.h, RationalTaper):
            return f"rational(scale={self.h.scale!r})"
        return getattr(self.h, "__name__", repr(self.h))


@dataclasses.dataclass(frozen=True)
class GegenbauerParams:
    """Parameters of (1 - 2uB + B^2)^d X = eps with Gaussian innovations.

    ``sigma_eps = 0`` is accepted and yields the all-zero series.
    """

    u: float
    d: float
    sigma_eps: float = 1.0

    def __post_init__(self):
        if not abs(self.u) <= 1:
            msg = f"Gegenbauer frequency parameter u must satisfy |u| <= 1, got {self.u}"
            raise ParameterRangeError(msg, {"u": self.u})
        if not 0 < self.d < 0.5:
            msg = f"Gegenbauer order d must lie in (0, 1/2), got {self.d}"
            raise ParameterRangeError(msg, {"d": self.d})
        if not self.sigma_eps >= 0:
            msg = f"Innovation scale sigma_eps must be nonnegative, got {self.sigma_eps}"
            raise ParameterRangeError(msg, {"sigma_eps": self.sigma_eps})
