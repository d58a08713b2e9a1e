"""Minimal differentiable-tensor substrate.

numpy arrays under a reverse-mode autograd graph: just the primitives the
explainer model needs, each with exact analytic gradients that are verified
against central finite differences (see gradcheck).
"""

from .tensor import (
    Tensor,
    add,
    batchnorm,
    concat,
    conv2d,
    default_dtype,
    elemwise_mul,
    embed,
    flatten,
    linear,
    log,
    maxpool2,
    mul,
    neg,
    nll_loss,
    no_grad,
    one_minus,
    precision,
    relu,
    reshape,
    sigmoid,
    slice_cols,
    softmax,
    tensor_sum,
    tanh,
)
from .params import Registry, Rng, glorot_limit
from .optim import SGD, Adam, make_optimizer
from . import gradcheck

__all__ = [
    "Tensor",
    "add",
    "batchnorm",
    "concat",
    "conv2d",
    "default_dtype",
    "elemwise_mul",
    "embed",
    "flatten",
    "linear",
    "log",
    "maxpool2",
    "mul",
    "neg",
    "nll_loss",
    "no_grad",
    "one_minus",
    "precision",
    "relu",
    "reshape",
    "sigmoid",
    "slice_cols",
    "softmax",
    "tensor_sum",
    "tanh",
    "Registry",
    "Rng",
    "glorot_limit",
    "SGD",
    "Adam",
    "make_optimizer",
    "gradcheck",
]
