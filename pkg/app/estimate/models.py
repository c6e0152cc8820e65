import dataclasses
import math

import numpy as np

from app.common.errors import DomainError, PipelineError

__all__ = [
    "EstimateReport",
    "EstimationDomainError",
    "FeasiblePoint",
    "InvariantViolationError",
    "MomentPoint",
]


class EstimationDomainError(DomainError):
    code = "estimation_domain"


class InvariantViolationError(PipelineError):
    code = "invariant_violation"


@dataclasses.dataclass(frozen=True)
class MomentPoint:
    """Normalized statistics (dbar / L0, dincr / (2 L2)) before truncation."""

    y1: float
    y2: float

    def __post_init__(self):
        if not (math.isfinite(self.y1) and math.isfinite(self.y2)):
            msg = f"Moment point must be finite, got ({self.y1}, {self.y2})"
            raise EstimationDomainError(msg)

    def in_domain(self) -> bool:
        return 0 < self.y1 < 1 and 0 < self.y2 < self.y1**2 / 2


@dataclasses.dataclass(frozen=True)
class FeasiblePoint:
    """A point of D = {0 < y1 < 1, 0 < y2 < y1^2 / 2}.

    ``degenerate`` marks a truncation whose second band collapsed; such points
    are exempt from the membership check.
    """

    y1: float
    y2: float
    degenerate: bool = False

    def __post_init__(self):
        if self.degenerate:
            return
        if not (0 < self.y1 < 1 and 0 < self.y2 < self.y1**2 / 2):
            msg = f"Point ({self.y1!r}, {self.y2!r}) lies outside the feasible region"
            raise EstimationDomainError(msg, {"y1": self.y1, "y2": self.y2})


@dataclasses.dataclass(frozen=True, eq=False)
class EstimateReport:
    delta_bar: float
    delta_incr: float
    moment: MomentPoint
    epsilon: float
    truncated: FeasiblePoint
    truncation_active: bool
    s0_hat: float
    alpha_hat: float
    V: np.ndarray
    m_j: int
    M_j: int
    covariance_at: str = "estimate"

    def to_dict(self) -> dict:
        return {
            "delta_bar": self.delta_bar,
            "delta_incr": self.delta_incr,
            "y1": self.moment.y1,
            "y2": self.moment.y2,
            "eps": self.epsilon,
            "truncated_y1": self.truncated.y1,
            "truncated_y2": self.truncated.y2,
            "truncation_active": self.truncation_active,
            "truncation_degenerate": self.truncated.degenerate,
            "s0_hat": self.s0_hat,
            "alpha_hat": self.alpha_hat,
            "V": [float(v) for v in np.asarray(self.V).ravel()],
            "V_evaluated_at": self.covariance_at,
            "m_j": self.m_j,
            "M_j": self.M_j,
        }
