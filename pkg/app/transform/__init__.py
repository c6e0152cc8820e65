from .models import (
    CoefficientBlock,
    CoefficientSource,
    LevelScheme,
    ScaleRule,
    ShiftRule,
)

__all__ = [
    "CoefficientBlock",
    "CoefficientSource",
    "LevelScheme",
    "ScaleRule",
    "ShiftRule",
]
