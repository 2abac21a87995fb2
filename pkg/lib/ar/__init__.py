"""
Autoregressive Pipeline Package

A small causal transformer with 2D RoPE and class-conditioning slots, a
token-level rectified-flow head, guided Euler decoding with constant-norm
refeeding, and a Markov-on-sphere ground-truth token process.
"""

from .decode import (
    DecodeResult,
    DecodeStep,
    NextToken,
    RefeedMode,
    decode_sequence,
    euler_integrate,
    sample_next_token,
)
from .exceptions import ArError, InvalidSequenceError, TrainingDivergedError, UnknownClassError
from .flow_head import FlowHead, time_features
from .markov import MarkovProcessConfig, MarkovSphereProcess, TokenSource
from .rope import apply_rope, rope_tables
from .schedule import CfgKind, CfgSchedule, guided_velocity
from .tokens import TokenSequence, raster_positions, stack_sequences
from .train import (
    ArTrainConfig,
    ArTrainingResult,
    RfNoise,
    draw_rf_noise,
    load_ar,
    rf_loss,
    rf_train_step,
    train_ar,
)
from .transformer import ArModel, ArModelConfig, KVCache, forward_hidden, transformer_forward

__all__ = [
    "TokenSequence",
    "raster_positions",
    "stack_sequences",
    "CfgKind",
    "CfgSchedule",
    "guided_velocity",
    "rope_tables",
    "apply_rope",
    "FlowHead",
    "time_features",
    "ArModel",
    "ArModelConfig",
    "KVCache",
    "forward_hidden",
    "transformer_forward",
    "RfNoise",
    "draw_rf_noise",
    "rf_loss",
    "rf_train_step",
    "ArTrainConfig",
    "ArTrainingResult",
    "train_ar",
    "load_ar",
    "RefeedMode",
    "NextToken",
    "DecodeStep",
    "DecodeResult",
    "euler_integrate",
    "sample_next_token",
    "decode_sequence",
    "TokenSource",
    "MarkovProcessConfig",
    "MarkovSphereProcess",
    "ArError",
    "TrainingDivergedError",
    "UnknownClassError",
    "InvalidSequenceError",
]
