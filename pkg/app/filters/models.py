import dataclasses
import enum
from collections.abc import Callable

import numpy as np

from app.common.errors import PipelineError

__all__ = [
    "Filter",
    "FilterDefinitionError",
    "FilterNotFoundError",
    "MomentRule",
    "ReferenceComparison",
]


class FilterNotFoundError(PipelineError):
    code = "filter_not_found"


class FilterDefinitionError(PipelineError):
    code = "filter_definition"


class MomentRule(str, enum.Enum):
    ADAPTIVE = "adaptive"
    GAUSS_LEGENDRE = "gauss_legendre"


@dataclasses.dataclass(frozen=True, eq=False)
class Filter:
    """A filter known through its Fourier transform.

    ``breakpoints`` lists the nonnegative points where psi_hat has a jump or a
    kink; quadrature panels are cut there (and at their mirror images).
    Outside the band [B, A], |psi_hat| stays below ``support_tol`` times its
    peak.
    Instances compare by identity so they can key covariance caches.
    """

    name: str
    psi_hat: Callable[[np.ndarray], np.ndarray]
    support_lo: float
    support_hi: float
    L0: float
    L2: float
    breakpoints: tuple[float, ...] = ()
    psi_time: Callable[[np.ndarray], np.ndarray] | None = None
    time_radius: float | None = None
    time_form_approximate: bool = False
    reference: dict[str, float] = dataclasses.field(default_factory=dict)
    parameters: dict[str, float] = dataclasses.field(default_factory=dict)
    support_tol: float = 1e-8

    def __post_init__(self):
        if not 0 <= self.support_lo < self.support_hi:
            msg = (
                f"Filter '{self.name}' support band must satisfy 0 <= B < A, "
                f"got B={self.support_lo}, A={self.support_hi}"
            )
            raise FilterDefinitionError(msg)
        if not (self.L0 > 0 and self.L2 > 0):
            msg = f"Filter '{self.name}' moments must be positive, got L0={self.L0}, L2={self.L2}"
            raise FilterDefinitionError(msg)

        grid = np.linspace(0.0, 2.0 * self.support_hi, 257)
        if not np.allclose(self.psi_hat(grid), self.psi_hat(-grid), rtol=0, atol=1e-14):
            msg = f"Filter '{self.name}' psi_hat is not even"
            raise FilterDefinitionError(msg)

        band = np.linspace(self.support_lo, self.support_hi, 4097)
        peak = np.abs(self.psi_hat(band)).max()
        outside = self.support_hi * (1.0 + np.geomspace(1e-6, 1.0, 64))
        if self.support_lo > 0:
            inner = self.support_lo * np.linspace(0.0, 1.0 - 1e-6, 64)
            outside = np.concatenate([inner, outside])
        leak = np.abs(self.psi_hat(outside)).max()
        # slack for the sampled peak
        if not leak <= 1.1 * self.support_tol * peak:
            msg = (
                f"Filter '{self.name}' psi_hat reaches {leak:.3g} outside its band "
                f"[{self.support_lo}, {self.support_hi}]"
            )
            raise FilterDefinitionError(msg)

    @property
    def has_time_form(self) -> bool:
        return self.psi_time is not None

    @property
    def symmetric_breakpoints(self) -> tuple[float, ...]:
        points = {0.0, self.support_lo, self.support_hi, *self.breakpoints}
        return tuple(sorted({*points, *(-p for p in points)}))

    def energy(self, eta):
        return np.abs(self.psi_hat(eta)) ** 2


@dataclasses.dataclass(frozen=True)
class ReferenceComparison:
    quantity: str
    computed: float
    reference: float

    @property
    def relative_difference(self) -> float:
        return abs(self.computed - self.reference) / abs(self.reference)

    @property
    def consistent(self) -> bool:
        return self.relative_difference < 1e-8
