"""
Property-suite runner

Runs the registered suites for one seed and collects a JSON-ready report.
A check that raises is recorded as failed with the exception text; the
remaining checks still run.
"""

import logging
import sys
import time
from collections.abc import Iterator
from contextlib import ExitStack, contextmanager
from dataclasses import asdict, dataclass, field
from unittest import mock

import numpy as np

from ..geometry import PROJECTION_EPS, projection
from .ar_pipeline import AR_PIPELINE_SUITE
from .base import SuiteDefinition
from .directional import DIRECTIONAL_SUITE
from .exceptions import UnknownFaultError, UnknownSuiteError
from .sphere_geometry import SPHERE_GEOMETRY_SUITE
from .svae_toy import SVAE_TOY_SUITE
from .tensor_core import TENSOR_CORE_SUITE
from .variational_bounds import VARIATIONAL_BOUNDS_SUITE

logger = logging.getLogger(__name__)

ALL_SUITES: dict[str, SuiteDefinition] = {
    suite.name: suite
    for suite in (
        TENSOR_CORE_SUITE,
        DIRECTIONAL_SUITE,
        SPHERE_GEOMETRY_SUITE,
        VARIATIONAL_BOUNDS_SUITE,
        SVAE_TOY_SUITE,
        AR_PIPELINE_SUITE,
    )
}


@dataclass
class CheckReport:
    suite: str
    name: str
    description: str
    passed: bool
    value: float | None
    tolerance: float | None
    detail: str = ""
    error: str | None = None
    wall_time: float = 0.0

    @property
    def qualified_name(self) -> str:
        return f"{self.suite}.{self.name}"


@dataclass
class VerifyReport:
    seed: int
    fault: str | None
    suites: list[str]
    checks: list[CheckReport] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> list[str]:
        return [c.qualified_name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "fault": self.fault,
            "suites": self.suites,
            "passed": self.passed,
            "failed": self.failed,
            "checks": [asdict(c) for c in self.checks],
        }


def _broken_project_batch(
    z: np.ndarray, radius: float, eps: float = PROJECTION_EPS
) -> tuple[np.ndarray, np.ndarray]:
    """Shrinks every row below R; used to prove the suites catch a bad projector"""
    z = np.asarray(z, dtype=np.float64)
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    return radius * z / (norms + 1.0), norms[..., 0] < eps


FAULTS = {"projector": ("project_batch", _broken_project_batch)}


@contextmanager
def inject_fault(name: str | None) -> Iterator[None]:
    """
    Replace a library function everywhere it was imported

    Every loaded module of this package that holds a reference to the
    original function gets the faulty one for the duration of the block.
    """
    if name is None:
        yield
        return
    if name not in FAULTS:
        raise UnknownFaultError(name, sorted(FAULTS))
    attribute, replacement = FAULTS[name]
    original = getattr(projection, attribute)
    root = __name__.split(".")[0]
    with ExitStack() as stack:
        for module_name, module in list(sys.modules.items()):
            if module is None or not (module_name == root or module_name.startswith(root + ".")):
                continue
            if getattr(module, attribute, None) is original:
                stack.enter_context(mock.patch.object(module, attribute, replacement))
        logger.warning("Fault %r injected", name)
        yield


def select_suites(names: list[str] | None) -> list[SuiteDefinition]:
    if not names:
        return list(ALL_SUITES.values())
    unknown = [n for n in names if n not in ALL_SUITES]
    if unknown:
        raise UnknownSuiteError(unknown[0], list(ALL_SUITES))
    return [ALL_SUITES[n] for n in names]


def run_suite(suite: SuiteDefinition, seed: int) -> list[CheckReport]:
    reports = []
    for check in suite.checks:
        started = time.perf_counter()
        try:
            result = check.function(seed)
            report = CheckReport(
                suite=suite.name,
                name=check.name,
                description=check.description,
                passed=result.passed,
                value=result.value,
                tolerance=result.tolerance,
                detail=result.detail,
            )
        except Exception as e:
            logger.exception("Check %s.%s raised", suite.name, check.name)
            report = CheckReport(
                suite=suite.name,
                name=check.name,
                description=check.description,
                passed=False,
                value=None,
                tolerance=None,
                error=f"{type(e).__name__}: {e}",
            )
        report.wall_time = time.perf_counter() - started
        status = "PASS" if report.passed else "FAIL"
        logger.info("%s %s (%.2fs) %s", status, report.qualified_name, report.wall_time, report.detail or report.error or "")
        reports.append(report)
    return reports


def run_suites(names: list[str] | None = None, seed: int = 0, fault: str | None = None) -> VerifyReport:
    """
    Run the selected suites (all when names is empty) under an optional fault

    Raises:
        UnknownSuiteError: a name matches no registered suite
        UnknownFaultError: the fault is not registered
    """
    suites = select_suites(names)
    report = VerifyReport(seed=seed, fault=fault, suites=[s.name for s in suites])
    with inject_fault(fault):
        for suite in suites:
            logger.info("Running suite %s: %s", suite.name, suite.description)
            report.checks.extend(run_suite(suite, seed))
    return report
