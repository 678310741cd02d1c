"""
Scale layer: predicts a per-utterance scalar factor K and bias B from the codec
embedding and returns Conv1D(K * pre + B).
"""
from typing import Optional, Tuple

import numpy as np

from pace.config import ModelConfig, settings
from pace.exceptions import DimensionError
from pace.tensor import Conv1d, Linear, Module, Tensor, global_avg_pool
from pace.types import CodecEmbedding, EmbeddingVariant


class ScaleBranch(Module):
    """Conv1D (codec_dim -> hidden, kernel 3), average over frames, Linear (hidden -> 1)."""

    def __init__(self, rng: np.random.Generator, channels: int, hidden: int, bias: float):
        super().__init__()
        self.conv = Conv1d(rng, channels, hidden, 3)
        self.fc = Linear(rng, hidden, 1)
        self.fc.params.bias.data[:] = bias

    def forward(self, x: Tensor) -> Tensor:
        return self.fc(global_avg_pool(self.conv(x), axis=1))


class ScaleLayer(Module):
    def __init__(self, rng: np.random.Generator, config: Optional[ModelConfig] = None):
        super().__init__()
        config = config or settings.model
        self.channels = config.codec_dim
        self.k_branch = ScaleBranch(rng, config.codec_dim, config.scale_hidden, bias=1.0)
        self.b_branch = ScaleBranch(rng, config.codec_dim, config.scale_hidden, bias=0.0)
        self.out = Conv1d(rng, config.codec_dim, config.codec_dim, 3)

    def factors(self, pre: CodecEmbedding) -> Tuple[Tensor, Tensor]:
        """(K, B), each of shape (1,)."""
        x = pre.values.T
        return self.k_branch(x), self.b_branch(x)

    def forward(self, pre: CodecEmbedding) -> CodecEmbedding:
        if pre.dim != self.channels:
            raise DimensionError(f"scale layer expects {self.channels} channels, got {pre.dim}", axis=1)
        k, b = self.factors(pre)
        return CodecEmbedding(self.out(pre.values.T * k + b).T, EmbeddingVariant.SCALED)


def scale_layer(layer: ScaleLayer, pre: CodecEmbedding) -> CodecEmbedding:
    return layer(pre)
