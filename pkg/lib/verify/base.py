"""
Base types for property suites

A suite groups the property checks of one library package. Each check is a
function of a seed that returns its measured value, the tolerance it was
held to and whether it passed.
"""

from collections.abc import Callable
from dataclasses import dataclass


@dataclass
class CheckResult:
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


@dataclass
class PropertyCheck:
    """A named invariant that can be evaluated for a seed"""

    name: str
    description: str
    function: Callable[[int], CheckResult]


@dataclass
class SuiteDefinition:
    """Definition of the property suite of one package"""

    name: str
    description: str
    checks: list[PropertyCheck]


def at_most(value: float, tolerance: float, detail: str = "") -> CheckResult:
    return CheckResult(passed=bool(value <= tolerance), value=float(value), tolerance=float(tolerance), detail=detail)


def at_least(value: float, bound: float, detail: str = "") -> CheckResult:
    return CheckResult(passed=bool(value >= bound), value=float(value), tolerance=float(bound), detail=detail)
