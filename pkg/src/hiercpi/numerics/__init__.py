"""Small dense-tensor autodiff core used by the encoders and losses."""

from .tensor import (
    NumericError,
    ShapeError,
    Tensor,
    add,
    as_tensor,
    backward,
    broadcast_to,
    concat,
    exp,
    gaussian_basis,
    get_default_dtype,
    layer_norm,
    matmul,
    mean,
    mul,
    neg,
    relu,
    reshape,
    scale,
    set_default_dtype,
    slice_,
    softmax,
    softplus,
    square,
    sub,
    sum_,
    take_rows,
    transpose,
)
from .nn import Embedding, LayerNorm, Linear, Module, parameter, uniform_init
from .optim import Adam, AdamState, adam_step, cosine_lr
from .checkpoint import CheckpointError, assign_parameters, load_checkpoint, save_checkpoint

__all__ = [
    "NumericError", "ShapeError", "Tensor", "add", "as_tensor", "backward", "broadcast_to",
    "concat", "exp", "gaussian_basis", "get_default_dtype", "layer_norm", "matmul", "mean",
    "mul", "neg", "relu", "reshape", "scale", "set_default_dtype", "slice_", "softmax",
    "softplus", "square", "sub", "sum_", "take_rows", "transpose",
    "Embedding", "LayerNorm", "Linear", "Module", "parameter", "uniform_init",
    "Adam", "AdamState", "adam_step", "cosine_lr",
    "CheckpointError", "assign_parameters", "load_checkpoint", "save_checkpoint",
]
