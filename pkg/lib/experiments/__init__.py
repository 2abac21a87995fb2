"""
Experiments Package

Configuration, commands and reports behind the spherear command line:
dataset generation, S-VAE and AR training, decoding, the norm-drift sweep
and the posterior ablation.
"""

from .ablation import AblationRow, cmd_ablation
from .commands import cmd_decode, cmd_gen_data, cmd_train, cmd_train_ar, cmd_train_svae
from .config import (
    ExperimentConfig,
    ExperimentKind,
    config_hash,
    load_config,
    parse_config,
    resolve_config,
    write_resolved_config,
)
from .drift import DriftCell, DriftReport, cmd_drift
from .exceptions import (
    ConfigError,
    ExperimentError,
    MissingCheckpointError,
    MissingDatasetError,
    OutputPathError,
)
from .metrics import norm_statistics, sliced_wasserstein
from .reports import canonical_json, read_report, strip_metadata
from .verification import cmd_verify

__all__ = [
    "ExperimentConfig",
    "ExperimentKind",
    "load_config",
    "parse_config",
    "resolve_config",
    "config_hash",
    "write_resolved_config",
    "cmd_gen_data",
    "cmd_train",
    "cmd_train_svae",
    "cmd_train_ar",
    "cmd_decode",
    "cmd_drift",
    "cmd_ablation",
    "cmd_verify",
    "DriftCell",
    "DriftReport",
    "AblationRow",
    "sliced_wasserstein",
    "norm_statistics",
    "canonical_json",
    "read_report",
    "strip_metadata",
    "ExperimentError",
    "ConfigError",
    "OutputPathError",
    "MissingDatasetError",
    "MissingCheckpointError",
]
