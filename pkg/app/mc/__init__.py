from .models import MCConfig, MCReport, NormalityResult

__all__ = ["MCConfig", "MCReport", "NormalityResult"]
