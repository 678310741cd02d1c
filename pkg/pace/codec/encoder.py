"""
Split codec encoder: stage 1 (strides 2, 4, 5) yields frame embeddings at hop 40,
stage 2 (stride 8) yields codec embeddings at hop 320.
"""
from typing import Optional, Sequence

import numpy as np

from pace.codec.blocks import EncoderBlock
from pace.config import ModelConfig, settings
from pace.exceptions import ContractError, DimensionError
from pace.prosody import ProsodyEmbeddings
from pace.tensor import Conv1d, Module
from pace.types import FRAME_HOP, AudioClip, CodecEmbedding, EmbeddingVariant, FrameEmbedding

STAGE1_STRIDES = (2, 4, 5)
STAGE2_STRIDE = 8


class Stage1Encoder(Module):
    def __init__(self, rng: np.random.Generator, config: Optional[ModelConfig] = None):
        super().__init__()
        config = config or settings.model
        widths: Sequence[int] = config.encoder_widths
        if len(widths) != len(STAGE1_STRIDES) + 1:
            raise DimensionError(
                f"encoder_widths needs {len(STAGE1_STRIDES) + 1} entries, got {len(widths)}"
            )
        self.stem = Conv1d(rng, 1, widths[0], 7)
        self.blocks = [
            EncoderBlock(rng, widths[i], widths[i + 1], stride)
            for i, stride in enumerate(STAGE1_STRIDES)
        ]
        self.head = Conv1d(rng, widths[-1], config.embedding_dim, 3)

    def forward(self, clip: AudioClip) -> FrameEmbedding:
        if len(clip) == 0 or len(clip) % FRAME_HOP:
            raise ContractError(f"clip length {len(clip)} is not a positive multiple of {FRAME_HOP}")
        x = self.stem(clip.as_tensor())
        for block in self.blocks:
            x = block(x)
        return FrameEmbedding(self.head(x.elu()).T)


class Stage2Encoder(Module):
    def __init__(self, rng: np.random.Generator, config: Optional[ModelConfig] = None):
        super().__init__()
        config = config or settings.model
        self.block = EncoderBlock(rng, config.embedding_dim, config.codec_dim, STAGE2_STRIDE)

    def forward(self, fused: FrameEmbedding) -> CodecEmbedding:
        if fused.frames == 0 or fused.frames % STAGE2_STRIDE:
            raise ContractError(
                f"frame count {fused.frames} is not a positive multiple of {STAGE2_STRIDE}"
            )
        return CodecEmbedding(self.block(fused.values.T).T, EmbeddingVariant.PRE_SCALE)


class CodecEncoder(Module):
    """Plain four-block encoder, no prosody path; the reference codec uses it."""

    def __init__(self, rng: np.random.Generator, config: Optional[ModelConfig] = None):
        super().__init__()
        self.stage1 = Stage1Encoder(rng, config)
        self.stage2 = Stage2Encoder(rng, config)

    def forward(self, clip: AudioClip) -> CodecEmbedding:
        out = self.stage2(self.stage1(clip))
        return CodecEmbedding(out.values, EmbeddingVariant.REFERENCE)


def encode_stage1(encoder: Stage1Encoder, clip: AudioClip) -> FrameEmbedding:
    return encoder(clip)


def fuse_prosody(e_f: FrameEmbedding, pros: ProsodyEmbeddings) -> FrameEmbedding:
    """e^f + e_f0 + e_uv."""
    if e_f.values.shape != pros.e_f0.shape:
        raise ContractError(
            f"frame embedding {e_f.values.shape} does not match prosody embeddings "
            f"{pros.e_f0.shape}; prosody and codec hops disagree"
        )
    return FrameEmbedding(e_f.values + pros.e_f0 + pros.e_uv)


def encode_stage2(encoder: Stage2Encoder, fused: FrameEmbedding) -> CodecEmbedding:
    return encoder(fused)
