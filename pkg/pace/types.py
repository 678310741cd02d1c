"""
Domain types shared by the codec, prosody and pipeline layers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from pace.exceptions import CodeIndexError, ContractError, DimensionError
from pace.tensor import Tensor

SAMPLE_RATE = 24000
FRAME_HOP = 40
CODEC_HOP = 320


class EmbeddingVariant(str, Enum):
    """Which codec embedding a tensor holds."""
    PRE_SCALE = "pre_scale"
    SCALED = "scaled"
    REFERENCE = "reference"
    QUANTIZED = "quantized"


@dataclass
class AudioClip:
    """Mono waveform; amplitude nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise DimensionError(f"audio must be mono, got shape {self.samples.shape}", axis="channels")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def require_codec_length(self) -> None:
        if len(self) == 0 or len(self) % CODEC_HOP:
            raise ContractError(f"clip length {len(self)} is not a positive multiple of {CODEC_HOP}")

    def as_tensor(self) -> Tensor:
        """(1, L) view for the encoder."""
        return Tensor(self.samples[None, :])


@dataclass
class FrameEmbedding:
    """e^f, (L/40, D) with D matching the prosody embedding dimension."""

    values: Tensor

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass
class CodecEmbedding:
    """RVQ-input embedding, (L/320, D')."""

    values: Tensor
    variant: EmbeddingVariant = EmbeddingVariant.PRE_SCALE

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass
class AudioCodes:
    """Discrete codec tokens, (L/320, stages), each in 0..codebook_size-1."""

    codes: np.ndarray
    codebook_size: int = 1024
    stages: int = field(init=False)

    def __post_init__(self) -> None:
        self.codes = np.asarray(self.codes, dtype=np.int64)
        if self.codes.ndim != 2:
            raise DimensionError(f"codes must be (frames, stages), got {self.codes.shape}", axis="rank")
        self.stages = self.codes.shape[1]
        bad = np.argwhere((self.codes < 0) | (self.codes >= self.codebook_size))
        if bad.size:
            frame, stage = (int(v) for v in bad[0])
            raise CodeIndexError(
                f"code {int(self.codes[frame, stage])} outside codebook of {self.codebook_size}",
                position=(frame, stage),
            )

    @property
    def frames(self) -> int:
        return self.codes.shape[0]
