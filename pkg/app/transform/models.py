import dataclasses
import enum
import math

import numpy as np

from app.common.errors import PipelineError

__all__ = [
    "CoefficientBlock",
    "CoefficientSource",
    "CoverageError",
    "DegenerateDenominatorError",
    "IncrementCount",
    "LevelCheck",
    "LevelNotConfiguredError",
    "LevelScheme",
    "ScaleRule",
    "SchemeDefinitionError",
    "ShiftRule",
    "TimeTruncationWarning",
    "ValidationReport",
]


class CoverageError(PipelineError):
    code = "coverage"


class DegenerateDenominatorError(PipelineError):
    code = "degenerate_denominator"


class LevelNotConfiguredError(PipelineError):
    code = "level_not_configured"


class SchemeDefinitionError(PipelineError):
    code = "scheme_definition"


class TimeTruncationWarning(RuntimeWarning):
    pass


class CoefficientSource(str, enum.Enum):
    SERIES_DISCRETIZED = "series-discretized"
    EXACT_COVARIANCE = "exact-covariance"


class ScaleRule(str, enum.Enum):
    GEOMETRIC = "geometric"
    LINEAR = "linear"


class ShiftRule(str, enum.Enum):
    PROPORTIONAL = "proportional"
    CONSTANT = "constant"


@dataclasses.dataclass(frozen=True)
class LevelScheme:
    """Scales a_j, shift steps gamma_j and counts m_j for j = first_level, ...

    Shifts are arithmetic: b_jk = gamma_j * k. ``c`` is the configured limit of
    a_j / gamma_j used by the asymptotic formulas.
    """

    first_level: int
    scales: tuple[float, ...]
    shifts: tuple[float, ...]
    counts: tuple[int, ...]
    c: float
    M_cap: int | None = None

    def __post_init__(self):
        size = len(self.scales)
        if size == 0 or len(self.shifts) != size or len(self.counts) != size:
            msg = "Level scheme needs equally many scales, shifts and counts"
            raise SchemeDefinitionError(msg)
        if self.first_level < 1:
            msg = f"Levels start at 1, got first level {self.first_level}"
            raise SchemeDefinitionError(msg)
        if any(not s > 0 for s in self.scales) or any(
            b <= a for a, b in zip(self.scales, self.scales[1:], strict=False)
        ):
            msg = f"Scales must be positive and strictly increasing, got {self.scales}"
            raise SchemeDefinitionError(msg)
        if any(not g > 0 for g in self.shifts):
            msg = f"Shift steps must be positive, got {self.shifts}"
            raise SchemeDefinitionError(msg)
        if any(m < 1 for m in self.counts):
            msg = f"Coefficient counts must be positive, got {self.counts}"
            raise SchemeDefinitionError(msg)
        if not self.c > 0:
            msg = f"Scale-to-shift limit c must be positive, got {self.c}"
            raise SchemeDefinitionError(msg)
        if self.M_cap is not None and self.M_cap < 1:
            msg = f"Increment count cap must be positive, got {self.M_cap}"
            raise SchemeDefinitionError(msg)

    @classmethod
    def from_rules(
        cls,
        levels: tuple[int, int],
        *,
        scale_rule: ScaleRule = ScaleRule.GEOMETRIC,
        base: float = 2.0,
        shift_rule: ShiftRule = ShiftRule.PROPORTIONAL,
        shift_step: float = 1.0,
        c: float = 1.0,
        count: int | None = None,
        count_exponent: float | None = None,
        M_cap: int | None = None,
    ) -> "LevelScheme":
        """a_j = base^j (geometric) or base * j (linear); gamma_j = a_j / c
        (proportional) or shift_step (constant); m_j = count or floor(a_j^count_exponent)."""
        first, last = levels
        if last < first:
            msg = f"Level range {first}-{last} is empty"
            raise SchemeDefinitionError(msg)
        if (count is None) == (count_exponent is None):
            msg = "Exactly one of count and count_exponent must be given"
            raise SchemeDefinitionError(msg)

        js = range(first, last + 1)
        if ScaleRule(scale_rule) == ScaleRule.GEOMETRIC:
            scales = tuple(float(base) ** j for j in js)
        else:
            scales = tuple(float(base) * j for j in js)
        if ShiftRule(shift_rule) == ShiftRule.PROPORTIONAL:
            shifts = tuple(a / c for a in scales)
        else:
            shifts = tuple(float(shift_step) for _ in scales)
        if count is not None:
            counts = tuple(int(count) for _ in scales)
        else:
            counts = tuple(integer_part(a**count_exponent) for a in scales)
        return cls(
            first_level=first,
            scales=scales,
            shifts=shifts,
            counts=counts,
            c=c,
            M_cap=M_cap,
        )

    @property
    def levels(self) -> range:
        return range(self.first_level, self.first_level + len(self.scales))

    def _index(self, j: int) -> int:
        if j not in self.levels:
            msg = f"Level {j} is not configured (levels {self.levels.start}-{self.levels.stop - 1})"
            raise LevelNotConfiguredError(msg, {"level": j})
        return j - self.first_level

    def a(self, j: int) -> float:
        return self.scales[self._index(j)]

    def gamma(self, j: int) -> float:
        return self.shifts[self._index(j)]

    def m(self, j: int) -> int:
        return self.counts[self._index(j)]

    def b(self, j: int, k):
        return self.gamma(j) * np.asarray(k)


def integer_part(x: float) -> int:
    # Values within rounding noise of an integer are not floored away from it.
    nearest = round(x)
    if abs(x - nearest) <= 1e-9 * max(1.0, abs(x)):
        return int(nearest)
    return math.floor(x)


@dataclasses.dataclass(frozen=True, eq=False)
class CoefficientBlock:
    level: int
    a: float
    gamma: float
    values: np.ndarray
    source: CoefficientSource
    first_index: int = 1

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            msg = "Coefficient block must hold at least one value"
            raise SchemeDefinitionError(msg)
        if not np.all(np.isfinite(values)):
            msg = f"Coefficient block at level {self.level} holds non-finite values"
            raise SchemeDefinitionError(msg)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def shifts(self) -> np.ndarray:
        return self.gamma * np.arange(self.first_index, self.first_index + self.m)


@dataclasses.dataclass(frozen=True)
class IncrementCount:
    value: int
    uncapped: int
    capped: bool


@dataclasses.dataclass(frozen=True)
class LevelCheck:
    level: int
    count_rate_decreasing: bool | None
    scale_ratio_ok: bool | None
    shift_ratio_converging: bool | None
    disjoint_supports: bool | None
    clt_rate_decreasing: bool | None
    count_eighth_rate_decreasing: bool | None
    shift_rate_decreasing: bool | None


@dataclasses.dataclass(frozen=True)
class ValidationReport:
    levels: tuple[int, ...]
    checks: tuple[LevelCheck, ...]
    scale_ratio_required: float
    warnings: tuple[str, ...]

    @property
    def conforming(self) -> bool:
        return not self.warnings

    def to_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "scale_ratio_required": (
                None
                if math.isinf(self.scale_ratio_required)
                else self.scale_ratio_required
            ),
            "checks": [dataclasses.asdict(check) for check in self.checks],
            "warnings": list(self.warnings),
            "conforming": self.conforming,
        }
