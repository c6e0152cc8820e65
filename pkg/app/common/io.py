import csv
import importlib.metadata
import json
import logging
import math
import platform
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np
import scipy

from app.common.errors import PipelineError

logger = logging.getLogger(__name__)

PACKAGE = "cyclic-memory-moments"


class ArtifactFormatError(PipelineError):
    code = "artifact_format"


def format_value(value) -> str:
    """Reals with 17 significant digits (exact for 64-bit floats); bools as true/false."""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
    logger.debug("Wrote %s", path)
    return path


def read_csv_columns(path: Path, columns: Sequence[str]) -> dict[str, np.ndarray]:
    try:
        with open(path, encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        return {name: np.array([float(row[name]) for row in rows]) for name in columns}
    except FileNotFoundError as err:
        msg = f"Input file not found: {path}"
        raise ArtifactFormatError(msg, {"path": str(path)}) from err
    except (KeyError, ValueError) as err:
        msg = f"{path} needs numeric columns {', '.join(columns)}"
        raise ArtifactFormatError(msg, {"path": str(path)}) from err


def _finite(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _finite(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [_finite(item) for item in value]
    return value


def to_json(data) -> str:
    """Strict, key-sorted JSON; non-finite reals become null."""
    return json.dumps(_finite(data), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: Path, data) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(data), encoding="utf-8", newline="\n")
    logger.debug("Wrote %s", path)
    return path


def versions() -> dict[str, str]:
    try:
        package = importlib.metadata.version(PACKAGE)
    except importlib.metadata.PackageNotFoundError:
        package = "unknown"
    return {
        PACKAGE: package,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_manifest(
    directory: Path,
    *,
    command: str,
    run_id: str,
    config: dict,
    artifacts: Iterable[Path],
    timings: dict[str, float],
    seed: int | None = None,
    arguments: dict | None = None,
) -> Path:
    manifest = {
        "command": command,
        "run_id": run_id,
        "seed": seed,
        "config": config,
        "arguments": arguments or {},
        "versions": versions(),
        "timings": timings,
        "artifacts": sorted(p.name for p in artifacts),
    }
    return write_json(directory / "manifest.json", manifest)
