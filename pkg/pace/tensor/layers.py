"""
Layer parameters and the layer operations built on them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from pace.exceptions import CodeIndexError, ContractError, DimensionError
from pace.tensor import functional as F
from pace.tensor.core import Parameter, Tensor, get_default_dtype
from pace.tensor.module import Module

IntPair = Union[int, Tuple[int, int]]


class LayerKind(str, Enum):
    """Kinds of parameterized layer."""
    CONV1D = "conv1d"
    CONV_TRANSPOSE1D = "conv_transpose1d"
    CONV2D = "conv2d"
    LINEAR = "linear"
    EMBEDDING = "embedding"


@dataclass
class LayerParams:
    kind: LayerKind
    weights: Tensor
    bias: Optional[Tensor] = None
    stride: IntPair = 1
    kernel_size: IntPair = 1
    padding: IntPair = 0
    channels_in: int = 0
    channels_out: int = 0

    def __post_init__(self) -> None:
        shape = self.weights.shape
        if self.kind is LayerKind.CONV1D:
            expected = (self.channels_out, self.channels_in, self.kernel_size)
        elif self.kind is LayerKind.CONV_TRANSPOSE1D:
            expected = (self.channels_in, self.channels_out, self.kernel_size)
        elif self.kind is LayerKind.CONV2D:
            expected = (self.channels_out, self.channels_in, *_pair(self.kernel_size))
        elif self.kind is LayerKind.LINEAR:
            expected = (self.channels_out, self.channels_in)
        else:
            # channels_in is the vocabulary, channels_out the embedding dimension
            expected = (self.channels_in, self.channels_out)
        if shape != expected:
            raise DimensionError(f"{self.kind.value} weights must be {expected}, got {shape}")
        if self.bias is not None and self.bias.shape != (self.channels_out,):
            raise DimensionError(f"bias must be ({self.channels_out},), got {self.bias.shape}")


def _pair(value: IntPair) -> Tuple[int, int]:
    return (value, value) if isinstance(value, int) else tuple(value)


def same_padding(kernel_size: int, stride: int) -> int:
    """Symmetric padding that makes the output length exactly input / stride."""
    padding = max(0, math.ceil((kernel_size - stride) / 2))
    if 2 * padding >= kernel_size and kernel_size > 1:
        raise ContractError(f"no symmetric padding gives length/{stride} for kernel {kernel_size}")
    return padding


def _uniform(rng: np.random.Generator, shape: Sequence[int], fan_in: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape).astype(get_default_dtype())


def init_conv1d(
    rng: np.random.Generator,
    channels_in: int,
    channels_out: int,
    kernel_size: int,
    stride: int = 1,
    padding: Optional[int] = None,
    bias: bool = True,
) -> LayerParams:
    fan_in = channels_in * kernel_size
    return LayerParams(
        kind=LayerKind.CONV1D,
        weights=Parameter(_uniform(rng, (channels_out, channels_in, kernel_size), fan_in)),
        bias=Parameter(np.zeros(channels_out)) if bias else None,
        stride=stride,
        kernel_size=kernel_size,
        padding=same_padding(kernel_size, stride) if padding is None else padding,
        channels_in=channels_in,
        channels_out=channels_out,
    )


def init_conv_transpose1d(
    rng: np.random.Generator,
    channels_in: int,
    channels_out: int,
    kernel_size: int,
    stride: int,
    padding: Optional[int] = None,
) -> LayerParams:
    return LayerParams(
        kind=LayerKind.CONV_TRANSPOSE1D,
        weights=Parameter(_uniform(rng, (channels_in, channels_out, kernel_size), channels_in * kernel_size // stride)),
        bias=Parameter(np.zeros(channels_out)),
        stride=stride,
        kernel_size=kernel_size,
        padding=same_padding(kernel_size, stride) if padding is None else padding,
        channels_in=channels_in,
        channels_out=channels_out,
    )


def init_conv2d(
    rng: np.random.Generator,
    channels_in: int,
    channels_out: int,
    kernel_size: IntPair,
    stride: IntPair = 1,
    padding: IntPair = 0,
    zero: bool = False,
) -> LayerParams:
    kh, kw = _pair(kernel_size)
    shape = (channels_out, channels_in, kh, kw)
    weights = np.zeros(shape) if zero else _uniform(rng, shape, channels_in * kh * kw)
    return LayerParams(
        kind=LayerKind.CONV2D,
        weights=Parameter(weights),
        bias=Parameter(np.zeros(channels_out)),
        stride=_pair(stride),
        kernel_size=(kh, kw),
        padding=_pair(padding),
        channels_in=channels_in,
        channels_out=channels_out,
    )


def init_linear(rng: np.random.Generator, channels_in: int, channels_out: int, bias: bool = True) -> LayerParams:
    return LayerParams(
        kind=LayerKind.LINEAR,
        weights=Parameter(_uniform(rng, (channels_out, channels_in), channels_in)),
        bias=Parameter(np.zeros(channels_out)) if bias else None,
        channels_in=channels_in,
        channels_out=channels_out,
    )


def init_embedding(rng: np.random.Generator, vocabulary: int, dim: int, std: float = 0.1) -> LayerParams:
    return LayerParams(
        kind=LayerKind.EMBEDDING,
        weights=Parameter(rng.normal(0.0, std, size=(vocabulary, dim)).astype(get_default_dtype())),
        channels_in=vocabulary,
        channels_out=dim,
    )


# --- operations ---


def _expect(params: LayerParams, kind: LayerKind) -> None:
    if params.kind is not kind:
        raise ContractError(f"expected {kind.value} params, got {params.kind.value}")


def _with_bias(params: LayerParams) -> tuple:
    return (params.weights,) if params.bias is None else (params.weights, params.bias)


def conv1d(input: Tensor, params: LayerParams) -> Tensor:
    """(C_in, T) -> (C_out, T')."""
    _expect(params, LayerKind.CONV1D)
    if input.ndim != 2:
        raise DimensionError(f"conv1d input must be (channels, time), got {input.shape}", axis="rank")
    if input.shape[0] != params.channels_in:
        raise DimensionError(
            f"conv1d expects {params.channels_in} input channels, got {input.shape[0]}", axis=0
        )
    t_out = (input.shape[1] + 2 * params.padding - params.kernel_size) // params.stride + 1
    if t_out < 1:
        raise DimensionError(f"conv1d input of length {input.shape[1]} is shorter than its kernel", axis=1)
    return F.Conv1d.apply(input, *_with_bias(params), stride=params.stride, padding=params.padding)


def conv_transpose1d(input: Tensor, params: LayerParams, length: Optional[int] = None) -> Tensor:
    """(C_in, T) -> (C_out, T * stride), or `length` samples when given."""
    _expect(params, LayerKind.CONV_TRANSPOSE1D)
    if input.ndim != 2:
        raise DimensionError(f"conv_transpose1d input must be (channels, time), got {input.shape}", axis="rank")
    if input.shape[0] != params.channels_in:
        raise DimensionError(
            f"conv_transpose1d expects {params.channels_in} input channels, got {input.shape[0]}", axis=0
        )
    length = input.shape[1] * params.stride if length is None else length
    return F.ConvTranspose1d.apply(
        input, *_with_bias(params), stride=params.stride, padding=params.padding, length=length
    )


def conv2d(input: Tensor, params: LayerParams) -> Tensor:
    """(C_in, H, W) -> (C_out, H', W')."""
    _expect(params, LayerKind.CONV2D)
    if input.ndim != 3:
        raise DimensionError(f"conv2d input must be (channels, height, width), got {input.shape}", axis="rank")
    if input.shape[0] != params.channels_in:
        raise DimensionError(
            f"conv2d expects {params.channels_in} input channels, got {input.shape[0]}", axis=0
        )
    kh, kw = _pair(params.kernel_size)
    (sh, sw), (ph, pw) = _pair(params.stride), _pair(params.padding)
    for axis, size, k, s, p in ((1, input.shape[1], kh, sh, ph), (2, input.shape[2], kw, sw, pw)):
        if (size + 2 * p - k) // s + 1 < 1:
            raise DimensionError(f"conv2d input extent {size} is shorter than its kernel", axis=axis)
    return F.Conv2d.apply(input, *_with_bias(params), stride=(sh, sw), padding=(ph, pw))


def linear(input: Tensor, params: LayerParams) -> Tensor:
    """(..., in) -> (..., out)."""
    _expect(params, LayerKind.LINEAR)
    if input.shape[-1] != params.channels_in:
        raise DimensionError(
            f"linear expects {params.channels_in} features, got {input.shape[-1]}", axis=-1
        )
    out = input @ params.weights.T
    return out + params.bias if params.bias is not None else out


def embedding_lookup(table: LayerParams, ids: Sequence[int]) -> Tensor:
    """Gather rows of `table` for each id; (len,) -> (len, dim)."""
    _expect(table, LayerKind.EMBEDDING)
    ids = np.asarray(ids)
    if ids.ndim != 1 or (ids.size and not np.issubdtype(ids.dtype, np.integer)):
        raise ContractError(f"ids must be a 1-D integer sequence, got {ids.dtype} {ids.shape}")
    bad = np.flatnonzero((ids < 0) | (ids >= table.channels_in))
    if bad.size:
        position = int(bad[0])
        raise CodeIndexError(
            f"id {int(ids[position])} outside vocabulary of {table.channels_in}", position=position
        )
    return F.EmbeddingLookup.apply(table.weights, ids=ids.astype(np.int64))


def global_avg_pool(input: Tensor, axis: int = -1) -> Tensor:
    """Average over the frame axis."""
    return input.mean(axis=axis)


def elu(input: Tensor) -> Tensor:
    return input.elu()


# --- module wrappers ---


class Conv1d(Module):
    def __init__(self, rng, channels_in, channels_out, kernel_size, stride=1, padding=None, bias=True):
        super().__init__()
        self.params = init_conv1d(rng, channels_in, channels_out, kernel_size, stride, padding, bias)

    def forward(self, x: Tensor) -> Tensor:
        return conv1d(x, self.params)


class ConvTranspose1d(Module):
    def __init__(self, rng, channels_in, channels_out, kernel_size, stride, padding=None):
        super().__init__()
        self.params = init_conv_transpose1d(rng, channels_in, channels_out, kernel_size, stride, padding)

    def forward(self, x: Tensor, length: Optional[int] = None) -> Tensor:
        return conv_transpose1d(x, self.params, length)


class Conv2d(Module):
    def __init__(self, rng, channels_in, channels_out, kernel_size, stride=1, padding=0, zero=False):
        super().__init__()
        self.params = init_conv2d(rng, channels_in, channels_out, kernel_size, stride, padding, zero)

    def forward(self, x: Tensor) -> Tensor:
        return conv2d(x, self.params)


class Linear(Module):
    def __init__(self, rng, channels_in, channels_out, bias=True):
        super().__init__()
        self.params = init_linear(rng, channels_in, channels_out, bias)

    def forward(self, x: Tensor) -> Tensor:
        return linear(x, self.params)


class Embedding(Module):
    def __init__(self, rng, vocabulary, dim, std=0.1):
        super().__init__()
        self.params = init_embedding(rng, vocabulary, dim, std)

    def forward(self, ids: Sequence[int]) -> Tensor:
        return embedding_lookup(self.params, ids)
