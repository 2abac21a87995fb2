"""
Norm-drift experiment across token sources, refeed modes and guidance scales

For every trained variant and every CFG scale in {1, 1 + step, ..., s_max}
the command decodes m sequences, records the pre/post-projection norm of
every token in drift_steps.csv and summarizes each (variant, scale) cell in
drift_report.json. The summaries are recomputable from the CSV.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .. import rng as rng_streams
from ..ar import CfgSchedule, decode_sequence
from .commands import ensure_resolved, load_variant_models, sample_process_tokens
from .config import ExperimentConfig, write_resolved_config
from .metrics import norm_statistics, sliced_wasserstein
from .reports import SW_NOTE, write_csv, write_report

logger = logging.getLogger(__name__)

STEP_COLUMNS = ("variant", "cfg_scale", "sequence", "class_id", "step", "pre_norm", "post_norm", "guarded")
REPORT_NAME = "drift_report.json"
STEPS_NAME = "drift_steps.csv"


@dataclass
class DriftCell:
    """Statistics of one (variant, CFG scale) pair"""

    variant: str
    source: str
    refeed: str
    cfg_scale: float
    n_tokens: int
    pre_norm: dict[str, float]
    post_norm: dict[str, float]
    per_step: list[dict[str, float]]
    guard_count: int
    sliced_wasserstein: float


@dataclass
class DriftReport:
    cells: list[DriftCell] = field(default_factory=list)
    radius: dict[str, float] = field(default_factory=dict)

    def cell(self, variant: str, scale: float) -> DriftCell:
        for c in self.cells:
            if c.variant == variant and abs(c.cfg_scale - scale) < 1e-9:
                return c
        raise KeyError((variant, scale))

    def to_dict(self) -> dict:
        return {
            "cells": [c.__dict__ for c in self.cells],
            "radius": self.radius,
            "notes": [SW_NOTE],
        }


def decode_cell(model, radius: float, variant, scale: float, config: ExperimentConfig):
    """Decode m sequences of one cell; returns (tokens, pre_norms, rows)"""
    settings = config.drift
    cfg = CfgSchedule(config.decode.cfg_kind, scale)
    rng = rng_streams.stream(config.seeds.decode, "drift", variant.name, f"{scale:.6f}")
    length = model.config.max_length
    tokens = np.empty((settings.n_sequences, length, model.config.token_dim))
    pre = np.empty((settings.n_sequences, length))
    rows = []
    for i in range(settings.n_sequences):
        class_id = i % model.config.n_classes
        result = decode_sequence(model, class_id, length, config.decode.n_steps, cfg, rng, radius, variant.refeed)
        tokens[i] = result.sequence.tokens
        for s in result.diagnostics:
            pre[i, s.step] = s.pre_norm
            rows.append([variant.name, scale, i, class_id, s.step, s.pre_norm, s.post_norm, int(s.guarded)])
    return tokens, pre, rows


def cmd_drift(config: ExperimentConfig) -> DriftReport:
    """
    Run the drift sweep over config.drift.variants

    Raises:
        MissingCheckpointError: naming every variant without a trained checkpoint
    """
    config = ensure_resolved(config)
    variants = config.drift.variants
    models = load_variant_models(config, [v.name for v in variants])
    write_resolved_config(config)
    started = time.perf_counter()
    report = DriftReport()
    all_rows = []

    for variant in variants:
        model, meta = models[variant.name]
        radius = float(meta["radius"])
        report.radius[variant.name] = radius
        _, reference, _ = sample_process_tokens(config, variant, config.drift.n_reference, "reference")
        reference = reference.reshape(-1, reference.shape[-1])
        for scale in config.drift.scales():
            tokens, pre, rows = decode_cell(model, radius, variant, scale, config)
            all_rows.extend(rows)
            post = np.array([r[6] for r in rows])
            sw = sliced_wasserstein(
                tokens.reshape(-1, tokens.shape[-1]),
                reference,
                rng_streams.stream(config.seeds.decode, "drift", "projections"),
                config.drift.sw_projections,
            )
            cell = DriftCell(
                variant=variant.name,
                source=variant.source.value,
                refeed=variant.refeed.value,
                cfg_scale=scale,
                n_tokens=int(pre.size),
                pre_norm=norm_statistics(pre),
                post_norm=norm_statistics(post),
                per_step=[norm_statistics(pre[:, k]) for k in range(pre.shape[1])],
                guard_count=int(sum(r[7] for r in rows)),
                sliced_wasserstein=sw,
            )
            report.cells.append(cell)
            logger.info(
                "%s @ %.2f: pre-norm std %.4f, post-norm std %.2e, SW %.4f",
                variant.name,
                scale,
                cell.pre_norm["std"],
                cell.post_norm["std"],
                sw,
            )

    out = config.out_path / "drift"
    write_csv(out / STEPS_NAME, STEP_COLUMNS, all_rows)
    write_report(out / REPORT_NAME, {"command": "drift", **report.to_dict()}, config, started)
    return report
