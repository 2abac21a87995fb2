"""
Tensor Core Package

Dense float64 tensors with tape-based reverse-mode differentiation, MLP
layers, AdamW and the binary checkpoint format.
"""

from .checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .exceptions import (
    CheckpointFormatError,
    DomainError,
    MissingGradientError,
    NonScalarBackwardError,
    ShapeMismatchError,
    TensorError,
)
from .gradcheck import gradcheck, numeric_gradient, relative_error
from .layers import MLP, Embedding, Linear, Module, RMSNorm, mlp_forward
from .optim import AdamWConfig, CosineSchedule, OptimizerState, WeightEMA, adamw_step, restore_schedule
from .tensor import DiffTensor, concat, matmul, no_grad, stack, tensor

__all__ = [
    "DiffTensor",
    "tensor",
    "matmul",
    "concat",
    "stack",
    "no_grad",
    "Module",
    "Linear",
    "MLP",
    "RMSNorm",
    "Embedding",
    "mlp_forward",
    "AdamWConfig",
    "OptimizerState",
    "CosineSchedule",
    "restore_schedule",
    "WeightEMA",
    "adamw_step",
    "gradcheck",
    "numeric_gradient",
    "relative_error",
    "save_checkpoint",
    "load_checkpoint",
    "encode_checkpoint",
    "decode_checkpoint",
    "TensorError",
    "ShapeMismatchError",
    "DomainError",
    "NonScalarBackwardError",
    "MissingGradientError",
    "CheckpointFormatError",
]
