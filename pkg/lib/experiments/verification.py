"""
The verify command: run the property suites and write their report
"""

import logging
import time

from ..verify import VerifyReport, run_suites
from .commands import ensure_resolved
from .config import ExperimentConfig, write_resolved_config
from .reports import write_report

logger = logging.getLogger(__name__)

REPORT_NAME = "verify_report.json"


def cmd_verify(
    config: ExperimentConfig, suites: list[str] | None = None, fault: str | None = None
) -> tuple[VerifyReport, dict]:
    """
    Run the selected suites with the master seed

    Returns:
        (the in-memory report, the JSON document written to <out>/verify/)
    """
    config = ensure_resolved(config)
    write_resolved_config(config)
    started = time.perf_counter()
    report = run_suites(suites, seed=config.seeds.master, fault=fault)
    written = write_report(config.out_path / "verify" / REPORT_NAME, report.to_dict(), config, started)
    if report.passed:
        logger.info("All %d checks passed", len(report.checks))
    else:
        logger.error("%d of %d checks failed: %s", len(report.failed), len(report.checks), ", ".join(report.failed))
    return report, written
