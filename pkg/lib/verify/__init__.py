"""
Property Suites Package

Executable invariants of every library package, run by `spherear verify`.
Each suite is a list of seeded checks that report a measured value against
its tolerance.
"""

from .base import CheckResult, PropertyCheck, SuiteDefinition
from .exceptions import UnknownFaultError, UnknownSuiteError, VerifyError
from .runner import ALL_SUITES, FAULTS, CheckReport, VerifyReport, inject_fault, run_suites, select_suites

__all__ = [
    "CheckResult",
    "PropertyCheck",
    "SuiteDefinition",
    "CheckReport",
    "VerifyReport",
    "ALL_SUITES",
    "FAULTS",
    "inject_fault",
    "run_suites",
    "select_suites",
    "VerifyError",
    "UnknownSuiteError",
    "UnknownFaultError",
]
