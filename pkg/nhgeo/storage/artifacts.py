"""
Flat-file persistence of run artifacts: CSV tables and JSON reports in the output directory.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
from pydantic import BaseModel

from nhgeo.core.config import settings
from nhgeo.core.errors import ConfigError

logger = logging.getLogger(__name__)

REPORT_NAME = "report.json"
FIGURE_PREFIX = "fig_"


def output_dir(path: str) -> Path:
    """Create (if needed) and return the output directory."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"Cannot create output directory '{out}': {e}")
    return out


def write_csv(out: Path, name: str, header: Sequence[str], rows: np.ndarray) -> Path:
    """
    Write a table with a header row and full-precision decimals.

    Args:
        out: Output directory
        name: File name (".csv" appended when missing)
        header: Column names
        rows: Array of shape (N, len(header))

    Returns:
        Path: Written file
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[1] != len(header):
        raise ConfigError(f"CSV '{name}' has {rows.shape[1]} columns but {len(header)} header names")
    path = out / (name if name.endswith(".csv") else f"{name}.csv")
    try:
        np.savetxt(path, rows, fmt=f"%.{settings.csv_digits}g", delimiter=",", header=",".join(header), comments="")
    except OSError as e:
        raise ConfigError(f"Cannot write '{path}': {e}")
    logger.info(f"Wrote {rows.shape[0]} rows to {path}")
    return path


def read_csv(path: Path) -> tuple:
    """Header names and rows of a table written by write_csv."""
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip().split(",")
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, rows


def write_report(out: Path, name: str, report: BaseModel) -> Path:
    """Write a pydantic report as UTF-8 JSON in field order."""
    path = out / (name if name.endswith(".json") else f"{name}.json")
    try:
        path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot write '{path}': {e}")
    logger.info(f"Wrote report {path}")
    return path


def load_run_reports(out: Path) -> Dict[str, Dict[str, Any]]:
    """
    Every run report in the output directory, keyed by file stem.

    Raises:
        ConfigError: If the directory is missing or holds no run reports
    """
    if not out.is_dir():
        raise ConfigError(f"Output directory '{out}' does not exist")
    runs = {}
    for path in sorted(out.glob("*.json")):
        if path.name == REPORT_NAME:
            continue
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            logger.warning(f"Skipping unreadable report {path}: {e}")
            continue
        if isinstance(data, dict) and "command" in data:
            runs[path.stem] = data
    if not runs:
        raise ConfigError(f"No run reports found in '{out}'")
    return runs


def figure_files(out: Path) -> List[str]:
    return sorted(p.name for p in out.glob(f"{FIGURE_PREFIX}*.csv"))
