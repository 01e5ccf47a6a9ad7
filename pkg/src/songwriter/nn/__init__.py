"""Minimal differentiable numeric layer backing the melody models."""

from .tensor import NumericError, Parameter, Tensor, backward, constant, set_guard
from .gru import GruCell, run_bidirectional
from .attention import AdditiveAttention
from .optim import AdamState, clip_gradients, global_grad_norm
from .gradcheck import GradCheckReport, gradient_check
from . import kernels, ops

__all__ = [
    "AdamState",
    "AdditiveAttention",
    "GradCheckReport",
    "GruCell",
    "NumericError",
    "Parameter",
    "Tensor",
    "backward",
    "clip_gradients",
    "constant",
    "global_grad_norm",
    "gradient_check",
    "kernels",
    "ops",
    "run_bidirectional",
    "set_guard",
]
