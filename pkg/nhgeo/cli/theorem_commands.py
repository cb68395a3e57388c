"""
verify-theorem: the end-to-end verification pipeline
"""

import logging

from nhgeo.cli.common import add_metric_arguments, add_system_arguments, command_handler
from nhgeo.core.errors import VerificationFailed
from nhgeo.models.models import RunConfig, TheoremReport
from nhgeo.services.theorem_service import verify_theorem
from nhgeo.storage.artifacts import output_dir, write_csv, write_report

logger = logging.getLogger(__name__)


def cmd_verify_theorem(config: RunConfig) -> TheoremReport:
    """
    Run the pipeline and write its JSON report and CSV evidence.

    Raises:
        VerificationFailed: After writing the artifacts, if any stage FAILed
    """
    report, evidence = verify_theorem(config)
    out = output_dir(config.out)
    for name, (header, rows) in evidence.items():
        write_csv(out, f"verify_theorem_{name}", header, rows)
    write_report(out, "verify_theorem", report)
    if report.verdict != "PASS":
        failed = [s.stage for s in report.stages if s.verdict == "FAIL"]
        raise VerificationFailed(f"stage(s) {', '.join(failed)} FAILED for {report.system} with {report.metric}")
    return report


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(
        "verify-theorem", parents=parents, help="Verify that radial nonholonomic trajectories minimize length"
    )
    add_system_arguments(parser)
    add_metric_arguments(parser)
    parser.set_defaults(handler=command_handler("verify-theorem")(cmd_verify_theorem))
