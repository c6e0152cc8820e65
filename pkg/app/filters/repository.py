import abc
import csv
import logging
import threading
from pathlib import Path

import numpy as np

from app.filters import service
from app.filters.models import Filter, FilterDefinitionError, FilterNotFoundError

logger = logging.getLogger(__name__)


class AbstractFilterRepository(abc.ABC):
    @abc.abstractmethod
    def get_filter(self, name: str, **parameters: float) -> Filter:
        """Resolve a filter by name."""

    @abc.abstractmethod
    def available_filters(self) -> list[str]:
        pass


class BuiltinFilterRepository(AbstractFilterRepository):
    """Built-in filters plus tabulated ones read from ``tabulated_dir``.

    Resolved filters are cached so that every caller shares one instance per
    (name, parameters); covariance caches key on filter identity.
    """

    def __init__(self, tabulated_dir: Path | None = None):
        self.tabulated_dir = tabulated_dir
        self._cache: dict[tuple, Filter] = {}
        self._lock = threading.Lock()

        if tabulated_dir is not None and not tabulated_dir.is_dir():
            msg = f"Tabulated filter directory does not exist: {tabulated_dir}"
            raise FileNotFoundError(msg)

    def available_filters(self) -> list[str]:
        names = [service.SHANNON, service.MEYER, service.MEXICAN_HAT]
        if self.tabulated_dir is not None:
            names.extend(sorted(p.stem for p in self.tabulated_dir.glob("*.csv")))
        return names

    def get_filter(self, name: str, **parameters: float) -> Filter:
        key = (name, tuple(sorted(parameters.items())))
        with self._lock:
            if key not in self._cache:
                self._cache[key] = self._build(name, parameters)
            return self._cache[key]

    def _build(self, name: str, parameters: dict[str, float]) -> Filter:
        if name == service.SHANNON:
            return service.shannon_filter()
        if name == service.MEYER:
            return service.meyer_filter()
        if name == service.MEXICAN_HAT:
            return service.mexican_hat_filter(parameters.get("sigma", 1.0))

        if self.tabulated_dir is not None:
            table = self.tabulated_dir / f"{name}.csv"
            if table.is_file():
                return load_tabulated_filter(table)

        msg = f"Filter '{name}' not found"
        raise FilterNotFoundError(msg, {"available": self.available_filters()})

    def clear_cache(self) -> None:
        with self._lock:
            self._cache.clear()


def load_tabulated_filter(path: Path) -> Filter:
    """Read a ``eta,psi_hat`` CSV of half-line samples."""
    try:
        with open(path, encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        eta = np.array([float(row["eta"]) for row in rows])
        values = np.array([float(row["psi_hat"]) for row in rows])
    except (KeyError, ValueError) as err:
        msg = f"Tabulated filter file '{path}' needs numeric columns eta,psi_hat"
        logger.error(msg)
        raise FilterDefinitionError(msg) from err

    logger.info("Loaded tabulated filter '%s' with %d samples", path.stem, eta.size)
    return service.tabulated_filter(path.stem, eta, values)
