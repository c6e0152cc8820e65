from .models import GegenbauerParams, ModelParams, RationalTaper

__all__ = ["GegenbauerParams", "ModelParams", "RationalTaper"]
