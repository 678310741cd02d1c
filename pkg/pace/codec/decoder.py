"""
Waveform decoder mirroring the encoder strides (8, 5, 4, 2).
"""
from typing import Optional

import numpy as np

from pace.codec.blocks import DecoderBlock
from pace.config import ModelConfig, settings
from pace.exceptions import DimensionError
from pace.tensor import Conv1d, Module, Tensor
from pace.types import CODEC_HOP, AudioClip, CodecEmbedding

DECODER_STRIDES = (8, 5, 4, 2)


class Decoder(Module):
    def __init__(self, rng: np.random.Generator, config: Optional[ModelConfig] = None):
        super().__init__()
        config = config or settings.model
        widths = config.decoder_widths
        if len(widths) != len(DECODER_STRIDES) + 1:
            raise DimensionError(
                f"decoder_widths needs {len(DECODER_STRIDES) + 1} entries, got {len(widths)}"
            )
        self.channels = config.codec_dim
        self.stem = Conv1d(rng, config.codec_dim, widths[0], 7)
        self.blocks = [
            DecoderBlock(rng, widths[i], widths[i + 1], stride)
            for i, stride in enumerate(DECODER_STRIDES)
        ]
        self.head = Conv1d(rng, widths[-1], 1, 7)

    def forward(self, emb: CodecEmbedding) -> Tensor:
        """(frames, codec_dim) -> (frames * 320,) waveform, unclamped."""
        if emb.dim != self.channels:
            raise DimensionError(f"decoder expects {self.channels} channels, got {emb.dim}", axis=1)
        x = self.stem(emb.values.T)
        for block in self.blocks:
            x = block(x)
        out = self.head(x.elu())
        return out.reshape(emb.frames * CODEC_HOP)


def decode(decoder: Decoder, emb: CodecEmbedding) -> AudioClip:
    """Decode to an AudioClip; values are left unclamped until file export."""
    return AudioClip(decoder(emb).data.copy())
