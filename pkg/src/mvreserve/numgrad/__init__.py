"""Dense float64 computation core: tape autodiff, He init, AMSGRAD, checkpoints."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .optim import NonFiniteGradientError, ParameterStore, amsgrad_step, he_init
from .tape import (
    GradientNaNError,
    Tape,
    Tensor,
    add,
    concat,
    masked_carry,
    masked_mean,
    masked_sum,
    matmul,
    mul,
    relu,
    scale,
    shift,
    sigmoid,
    square,
    sub,
    take_rows,
    tanh,
    total_sum,
)

__all__ = [
    "CheckpointError",
    "GradientNaNError",
    "NonFiniteGradientError",
    "ParameterStore",
    "Tape",
    "Tensor",
    "add",
    "amsgrad_step",
    "concat",
    "he_init",
    "load_checkpoint",
    "masked_carry",
    "masked_mean",
    "masked_sum",
    "matmul",
    "mul",
    "relu",
    "save_checkpoint",
    "scale",
    "shift",
    "sigmoid",
    "square",
    "sub",
    "take_rows",
    "tanh",
    "total_sum",
]
