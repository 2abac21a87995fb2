"""
AR pipeline properties: causality, constant-norm decoding, guidance, caching,
Euler accuracy and recovery of a known token process after training
"""

from unittest import mock

import numpy as np

from .. import rng as rng_streams
from ..ar import (
    ArModel,
    ArModelConfig,
    ArTrainConfig,
    CfgKind,
    CfgSchedule,
    MarkovProcessConfig,
    MarkovSphereProcess,
    decode_sequence,
    euler_integrate,
    guided_velocity,
    train_ar,
    transformer_forward,
)
from ..ar import decode as decode_module
from ..geometry import convergence_order, project_to_sphere
from .base import CheckResult, PropertyCheck, SuiteDefinition, at_most

SMALL = ArModelConfig(
    token_dim=4,
    grid=(2, 4),
    n_classes=2,
    n_cond=2,
    width=16,
    depth=2,
    heads=2,
    ffn_mult=2,
    head_hidden=16,
    n_time_features=4,
)
RADIUS = 2.0
NORM_TOLERANCE = 1e-9
N_NORM_TOKENS = 10_000
NORM_EULER_STEPS = 2
CFG_SCALE = 3.0
SLOPE_TOLERANCE = 0.2
N_RECOVERY = 256


def _model(seed: int, name: str) -> ArModel:
    return ArModel(SMALL, rng_streams.stream(seed, "verify", name))


def check_causality(seed: int) -> CheckResult:
    """Perturbing token k leaves every hidden state that precedes it bit-identical"""
    model = _model(seed, "causality")
    rng = rng_streams.stream(seed, "verify", "causality_tokens")
    mismatches = 0
    for k in range(SMALL.max_length):
        prefix = rng.standard_normal((SMALL.max_length, SMALL.token_dim))
        reference = transformer_forward(model, prefix, 1)
        perturbed = prefix.copy()
        perturbed[k] += 10.0
        out = transformer_forward(model, perturbed, 1)
        # row j sees tokens 1..j, i.e. prefix[:j]
        mismatches += int(np.sum(out[: k + 1] != reference[: k + 1]))
    return at_most(mismatches, 0, "hidden-state entries changed by a later token")


def check_constant_norm(seed: int) -> CheckResult:
    """
    Guided decoding of N_NORM_TOKENS tokens, split over both guidance
    schedules at scale CFG_SCALE: every projection and every refed token
    has norm R, and each token is projected exactly once
    """
    model = _model(seed, "decode")
    n_sequences = -(-N_NORM_TOKENS // (len(CfgKind) * SMALL.max_length))
    emitted, refed = [], []

    def project(*args, **kwargs):
        token = project_to_sphere(*args, **kwargs)
        emitted.append(token.components)
        return token

    with mock.patch.object(decode_module, "project_to_sphere", side_effect=project):
        for kind in CfgKind:
            cfg = CfgSchedule(kind, CFG_SCALE)
            rng = rng_streams.stream(seed, "verify", "decode", kind.value)
            for i in range(n_sequences):
                result = decode_sequence(
                    model, i % SMALL.n_classes, SMALL.max_length, NORM_EULER_STEPS, cfg, rng, RADIUS
                )
                refed.append(result.sequence.tokens)
    extra_projections = abs(len(emitted) - len(CfgKind) * n_sequences * SMALL.max_length)
    if extra_projections:
        return at_most(extra_projections, 0, "projections beyond one per token")
    worst = max(
        float(np.max(np.abs(np.linalg.norm(tokens, axis=-1) - RADIUS)))
        for tokens in (np.array(emitted), np.concatenate(refed))
    )
    return at_most(worst, NORM_TOLERANCE, "max | ||token|| - R | over emitted and refed tokens under guidance")


def check_cfg_identity(seed: int) -> CheckResult:
    """Scale 1 reduces guidance to the conditional velocity and leaves decoding unchanged"""
    rng = rng_streams.stream(seed, "verify", "cfg")
    v_c, v_u = rng.standard_normal((2, 64, SMALL.token_dim))
    mismatches = int(np.sum(guided_velocity(v_c, v_u, 1.0) != v_c))
    model = _model(seed, "cfg_model")
    plain = decode_sequence(model, 1, 3, 8, CfgSchedule(), rng_streams.stream(seed, "verify", "cfg_decode"), RADIUS)
    # a linear ramp starts at scale 1, so the first token is unguided
    ramped = decode_sequence(
        model, 1, 3, 8, CfgSchedule(CfgKind.LINEAR, 4.0), rng_streams.stream(seed, "verify", "cfg_decode"), RADIUS
    )
    mismatches += int(np.sum(plain.sequence.tokens[0] != ramped.sequence.tokens[0]))
    return at_most(mismatches, 0, "entries where scale 1 differs from unguided")


def check_cache_matches_recompute(seed: int) -> CheckResult:
    model = _model(seed, "cache")
    mismatches = 0
    for cfg in (CfgSchedule(), CfgSchedule(CfgKind.CONSTANT, 2.0)):
        outputs = [
            decode_sequence(
                model, 0, SMALL.max_length, 6, cfg, rng_streams.stream(seed, "verify", "cache_decode"), RADIUS,
                use_cache=use_cache,
            ).sequence.tokens
            for use_cache in (True, False)
        ]
        mismatches += int(np.sum(outputs[0] != outputs[1]))
    return at_most(mismatches, 0, "token entries differing between cached and recomputed decoding")


def check_euler_order(seed: int) -> CheckResult:
    """Global error of dz/dt = -z + sin t against its closed form decays as 1/N"""
    z0 = rng_streams.stream(seed, "verify", "euler").standard_normal(SMALL.token_dim)
    exact = np.exp(-1.0) * z0 + (np.sin(1.0) - np.cos(1.0)) / 2.0 + np.exp(-1.0) / 2.0
    steps = np.array([8, 16, 32, 64, 128])
    errors = np.array([np.linalg.norm(euler_integrate(lambda z, t: -z + np.sin(t), z0, int(n)) - exact) for n in steps])
    slope = convergence_order(steps, errors)
    return at_most(abs(slope + 1.0), SLOPE_TOLERANCE, f"fitted slope {slope:.3f}")


def check_trained_recovery(seed: int) -> CheckResult:
    """
    Train on a known Markov process and compare the decoded first tokens'
    mean cosine to the start direction with the process value
    """
    process = MarkovSphereProcess(MarkovProcessConfig(d=4, n_classes=2, grid=(1, 2), radius=RADIUS), seed)
    tokens, labels = process.sample(512, rng_streams.stream(seed, "verify", "recovery_data"))
    config = ArModelConfig(
        token_dim=4, grid=(1, 2), n_classes=2, n_cond=2, width=32, depth=1, heads=2,
        ffn_mult=2, head_hidden=32, n_time_features=8,
    )
    train_config = ArTrainConfig(epochs=60, batch_size=64, peak_lr=3e-3, warmup_steps=10, ema_decay=0.99)
    result = train_ar(config, tokens, labels, train_config, seed=rng_streams.derive_seed(seed, "verify", "recovery"))
    model = result.model
    if result.ema is not None:
        model.load_state_dict(result.ema.shadow)

    rng = rng_streams.stream(seed, "verify", "recovery_decode")
    cosines = np.empty(N_RECOVERY)
    for i in range(N_RECOVERY):
        class_id = i % 2
        first = decode_sequence(model, class_id, 1, 32, CfgSchedule(), rng, RADIUS).sequence.tokens[0]
        cosines[i] = first @ process.start[class_id] / RADIUS
    stderr = cosines.std(ddof=1) / np.sqrt(N_RECOVERY)
    target = process.first_token_mean_cosine()
    z = abs(cosines.mean() - target) / max(stderr, 1e-15)
    return at_most(z, 4.0, f"decoded {cosines.mean():.4f} vs process {target:.4f}")


AR_PIPELINE_SUITE = SuiteDefinition(
    name="ar_pipeline",
    description="Causal transformer, guided Euler decoding and constant-norm refeeding",
    checks=[
        PropertyCheck("causal_bit_exact", "Hidden states never depend on later tokens", check_causality),
        PropertyCheck(
            "decoded_tokens_constant_norm",
            "Guided decoding yields norm-R tokens with one projection per token",
            check_constant_norm,
        ),
        PropertyCheck("cfg_scale_one_is_identity", "Guidance at scale 1 changes nothing", check_cfg_identity),
        PropertyCheck(
            "cached_decoding_matches_recompute",
            "Incremental KV-cached decoding equals the cache-free recompute bit for bit",
            check_cache_matches_recompute,
        ),
        PropertyCheck("euler_first_order", "Euler integration converges with order 1", check_euler_order),
        PropertyCheck(
            "trained_model_recovers_process",
            "After training on a known process the decoded mean cosine is within 4 standard errors",
            check_trained_recovery,
        ),
    ],
)
