"""
Minimal dense-array kernel with reverse-mode automatic differentiation.
"""
from pace.tensor.core import (
    Function,
    Parameter,
    Tensor,
    as_tensor,
    backward,
    concat,
    get_default_dtype,
    set_default_dtype,
)
from pace.tensor.layers import (
    Conv1d,
    Conv2d,
    ConvTranspose1d,
    Embedding,
    LayerKind,
    LayerParams,
    Linear,
    conv1d,
    conv2d,
    conv_transpose1d,
    elu,
    embedding_lookup,
    global_avg_pool,
    linear,
    same_padding,
)
from pace.tensor.module import Module
from pace.tensor.optim import Adam

__all__ = [
    "Function",
    "Parameter",
    "Tensor",
    "as_tensor",
    "backward",
    "concat",
    "get_default_dtype",
    "set_default_dtype",
    "Conv1d",
    "Conv2d",
    "ConvTranspose1d",
    "Embedding",
    "LayerKind",
    "LayerParams",
    "Linear",
    "conv1d",
    "conv2d",
    "conv_transpose1d",
    "elu",
    "embedding_lookup",
    "global_avg_pool",
    "linear",
    "same_padding",
    "Module",
    "Adam",
]
