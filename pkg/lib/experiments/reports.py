"""
Canonical JSON reports

Everything outside the "metadata" block is a function of the resolved config
alone, so reruns produce byte-identical reports once metadata is dropped.
"""

import csv
import json
import platform
import time
from collections.abc import Iterable, Sequence
from dataclasses import asdict, is_dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

import numpy as np

from .. import __version__
from .config import ExperimentConfig, config_hash
from .exceptions import OutputPathError

SW_NOTE = (
    "Downstream fidelity is the sliced Wasserstein distance between generated and "
    "reference samples; it reproduces orderings across variants, not FID magnitudes."
)


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list | tuple):
        return [to_jsonable(v) for v in obj]
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return obj.as_posix()
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def canonical_json(payload) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2) + "\n"


def audit_block(config: ExperimentConfig) -> dict:
    return {
        "config_hash": config_hash(config),
        "seeds": config.seeds.model_dump(),
        "version": __version__,
    }


def run_metadata(started: float | None = None) -> dict:
    meta = {
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "host": platform.node(),
        "python": platform.python_version(),
    }
    if started is not None:
        meta["wall_time"] = round(time.perf_counter() - started, 3)
    return meta


def write_report(
    path: Path,
    payload: dict,
    config: ExperimentConfig,
    started: float | None = None,
    extra_metadata: dict | None = None,
) -> dict:
    """Write payload plus the audit and metadata blocks; returns what was written"""
    report = {
        **payload,
        "audit": audit_block(config),
        "metadata": {**run_metadata(started), **(extra_metadata or {})},
    }
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(canonical_json(report))
    except OSError as e:
        raise OutputPathError(path, str(e)) from e
    return report


def read_report(path: Path) -> dict:
    return json.loads(Path(path).read_text())


def strip_metadata(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "metadata"}


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(columns)
            writer.writerows(rows)
    except OSError as e:
        raise OutputPathError(path, str(e)) from e
    return path
