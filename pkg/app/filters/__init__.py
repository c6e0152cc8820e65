from .models import Filter, FilterDefinitionError, FilterNotFoundError, MomentRule

__all__ = ["Filter", "FilterDefinitionError", "FilterNotFoundError", "MomentRule"]
