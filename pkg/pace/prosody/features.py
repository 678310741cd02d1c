"""
Prosody features (quantized f0 and voicing) and their embedding tables.
"""
import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from pace.config import ModelConfig, ProsodyConfig, settings
from pace.exceptions import ContractError, DimensionError
from pace.logger import get_logger
from pace.prosody.tracker import extract_f0
from pace.tensor import Embedding, Module, Tensor
from pace.types import AudioClip

logger = get_logger(__name__)

F0_BINS = 256
UV_VOCABULARY = 2


@dataclass
class ProsodyFeatures:
    """Per-frame quantized f0, voicing flag and raw f0 in Hz."""

    f0_bins: np.ndarray
    uv: np.ndarray
    raw_f0_hz: np.ndarray

    def __post_init__(self) -> None:
        self.f0_bins = np.asarray(self.f0_bins, dtype=np.int64)
        self.uv = np.asarray(self.uv, dtype=np.int64)
        self.raw_f0_hz = np.asarray(self.raw_f0_hz, dtype=np.float64)
        if not len(self.f0_bins) == len(self.uv) == len(self.raw_f0_hz):
            raise DimensionError(
                f"prosody sequences differ in length: {len(self.f0_bins)}, {len(self.uv)}, "
                f"{len(self.raw_f0_hz)}",
                axis="frames",
            )
        if np.any((self.uv != 0) & (self.uv != 1)):
            raise ContractError("uv flags must be 0 or 1")
        if np.any((self.f0_bins < 0) | (self.f0_bins >= F0_BINS)):
            raise ContractError(f"f0 bins must lie in 0..{F0_BINS - 1}")
        unvoiced = self.uv == 0
        if np.any(self.raw_f0_hz[unvoiced] != 0) or np.any(self.f0_bins[unvoiced] != 0):
            raise ContractError("unvoiced frames must carry f0 0 and bin 0")

    def __len__(self) -> int:
        return len(self.uv)

    @property
    def frames(self) -> int:
        return len(self.uv)

    @classmethod
    def from_clip(cls, clip: AudioClip, config: Optional[ProsodyConfig] = None) -> "ProsodyFeatures":
        raw, uv = extract_f0(clip, config=config)
        return cls(f0_bins=quantize_f0(raw, uv), uv=uv, raw_f0_hz=raw)

    @classmethod
    def unvoiced(cls, frames: int) -> "ProsodyFeatures":
        zeros = np.zeros(frames, dtype=np.int64)
        return cls(f0_bins=zeros, uv=zeros, raw_f0_hz=np.zeros(frames))


def quantize_f0(raw_f0_hz: np.ndarray, uv: np.ndarray, bins: int = F0_BINS) -> np.ndarray:
    """
    Per-utterance min-max normalization over voiced frames, then
    bin = min(floor(norm * bins), bins - 1). Unvoiced frames and a zero voiced
    range map to bin 0.
    """
    raw = np.asarray(raw_f0_hz, dtype=np.float64)
    uv = np.asarray(uv)
    if raw.shape != uv.shape:
        raise DimensionError(f"f0 {raw.shape} and uv {uv.shape} are not aligned", axis="frames")
    out = np.zeros(raw.shape, dtype=np.int64)
    voiced = (uv == 1) & (raw > 0)
    if not voiced.any():
        return out
    low, high = raw[voiced].min(), raw[voiced].max()
    if high <= low:
        return out
    norm = (raw[voiced] - low) / (high - low)
    out[voiced] = np.minimum(np.floor(norm * bins), bins - 1).astype(np.int64)
    return out


def align_features(features: ProsodyFeatures, frames: int) -> ProsodyFeatures:
    """Trim, or pad with unvoiced frames, to exactly `frames` frames."""
    if frames < 0:
        raise ContractError(f"frame count must be >= 0, got {frames}")
    if len(features) >= frames:
        return ProsodyFeatures(
            f0_bins=features.f0_bins[:frames],
            uv=features.uv[:frames],
            raw_f0_hz=features.raw_f0_hz[:frames],
        )
    pad = frames - len(features)
    return ProsodyFeatures(
        f0_bins=np.pad(features.f0_bins, (0, pad)),
        uv=np.pad(features.uv, (0, pad)),
        raw_f0_hz=np.pad(features.raw_f0_hz, (0, pad)),
    )


def export_prosody_csv(features: ProsodyFeatures, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_index", "raw_f0_hz", "f0_bin", "uv"])
        for i, (raw, bin_, flag) in enumerate(zip(features.raw_f0_hz, features.f0_bins, features.uv)):
            writer.writerow([i, f"{raw:.4f}", int(bin_), int(flag)])
    logger.info("Prosody features exported", path=str(path), frames=len(features))
    return path


@dataclass
class ProsodyEmbeddings:
    """e_f0 and e_uv, both (frames, dim)."""

    e_f0: Tensor
    e_uv: Tensor

    def __post_init__(self) -> None:
        if self.e_f0.shape != self.e_uv.shape:
            raise DimensionError(
                f"f0 embedding {self.e_f0.shape} and uv embedding {self.e_uv.shape} differ"
            )

    @property
    def frames(self) -> int:
        return self.e_f0.shape[0]

    @property
    def dim(self) -> int:
        return self.e_f0.shape[1]

    def detach(self) -> "ProsodyEmbeddings":
        return ProsodyEmbeddings(self.e_f0.detach(), self.e_uv.detach())

    @classmethod
    def zeros(cls, frames: int, dim: int) -> "ProsodyEmbeddings":
        return cls(Tensor(np.zeros((frames, dim))), Tensor(np.zeros((frames, dim))))


class ProsodyEmbedder(Module):
    """f0 table (vocabulary 256) and uv table (vocabulary 2)."""

    def __init__(self, rng: np.random.Generator, config: Optional[ModelConfig] = None):
        super().__init__()
        config = config or settings.model
        self.f0_table = Embedding(rng, config.f0_bins, config.embedding_dim)
        self.uv_table = Embedding(rng, UV_VOCABULARY, config.embedding_dim)

    def forward(self, features: ProsodyFeatures) -> ProsodyEmbeddings:
        return ProsodyEmbeddings(
            e_f0=self.f0_table(features.f0_bins),
            e_uv=self.uv_table(features.uv),
        )


def embed_prosody(features: ProsodyFeatures, embedder: ProsodyEmbedder) -> ProsodyEmbeddings:
    return embedder(features)
