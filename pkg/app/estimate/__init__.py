from .models import EstimateReport, FeasiblePoint, MomentPoint

__all__ = ["EstimateReport", "FeasiblePoint", "MomentPoint"]
