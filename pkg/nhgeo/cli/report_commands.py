"""
report: merge the run reports of an output directory and emit x-y plot data
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, Tuple

import numpy as np

from nhgeo.cli.common import command_handler
from nhgeo.models.models import ConsolidatedReport, RunConfig
from nhgeo.services.systems_service import discrepancy_notes
from nhgeo.storage.artifacts import (
    FIGURE_PREFIX,
    REPORT_NAME,
    figure_files,
    load_run_reports,
    read_csv,
    write_csv,
    write_report,
)

logger = logging.getLogger(__name__)

FigureSpec = Tuple[str, Callable[[List[str], np.ndarray], Tuple[List[str], np.ndarray]]]


def _columns(*names: str):
    def pick(header: List[str], rows: np.ndarray):
        return list(names), rows[:, [header.index(n) for n in names]]

    return pick


def _radius_against(column: str):
    """|w| against a residual column, for tables whose first columns are fiber coordinates."""

    def pick(header: List[str], rows: np.ndarray):
        fiber = [i for i, name in enumerate(header) if name.startswith("w")]
        radius = np.linalg.norm(rows[:, fiber], axis=-1)
        return ["radius", column], np.column_stack([radius, rows[:, header.index(column)]])

    return pick


# source CSV -> (figure name, column picker)
FIGURES: Dict[str, FigureSpec] = {
    "simulate.csv": ("trajectory", _columns("q_1", "q_2")),
    "expmap_grid.csv": ("expmap_velocity_identity", _radius_against("velocity_identity_residual")),
    "minimize.csv": ("minimize_length", _columns("iteration", "length")),
    "verify_theorem_induced_exp.csv": ("induced_exp_error", _radius_against("error")),
    "verify_theorem_minimize_trace.csv": ("theorem_minimize_length", _columns("iteration", "length_1")),
}


def write_figures(out: Path) -> List[str]:
    written = []
    for source, (name, pick) in FIGURES.items():
        path = out / source
        if not path.is_file():
            continue
        header, rows = read_csv(path)
        fig_header, fig_rows = pick(header, rows)
        written.append(write_csv(out, f"{FIGURE_PREFIX}{name}", fig_header, fig_rows).name)
    return written


def cmd_report(config: RunConfig) -> ConsolidatedReport:
    """
    Merge every run report of the output directory into report.json.

    Raises:
        ConfigError: If the directory holds no run reports
    """
    out = Path(config.out)
    runs = load_run_reports(out)
    stages = {}
    for run in runs.values():
        for stage in run.get("stages", []):
            stages[f"{run.get('system')}:{run.get('metric')}:{stage['stage']}"] = stage["verdict"]
    write_figures(out)
    report = ConsolidatedReport(
        runs=runs,
        stages=stages,
        notes=discrepancy_notes(),
        figures=figure_files(out),
        config=config.model_dump(),
    )
    write_report(out, REPORT_NAME, report)
    return report


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("report", parents=parents, help="Consolidate run reports and plot data")
    parser.set_defaults(handler=command_handler("report")(cmd_report))
