"""
Residual vector quantizer.

Codebooks are buffers trained by exponential moving averages rather than by
gradients: k-means++ initialization from the first batch, EMA statistics, and
reseeding of entries used fewer than `dead_threshold` times over the EMA
window, roughly the last 1 / (1 - decay) steps. Entry 0 of every codebook
stays pinned at zero, so each stage can always leave its residual unchanged.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from pace.config import RvqConfig, settings
from pace.exceptions import DimensionError
from pace.logger import get_logger
from pace.tensor import Module, Tensor
from pace.tensor import functional as F
from pace.types import AudioCodes, CodecEmbedding, EmbeddingVariant

logger = get_logger(__name__)

_EPS = 1e-5


@dataclass
class QuantizerOutput:
    codes: AudioCodes
    quantized: CodecEmbedding
    commitment: Tensor
    residual_norms: np.ndarray


def kmeans_plus_plus(data: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """`count` seeds drawn from the rows of `data` with D^2 weighting."""
    n = len(data)
    centers = np.empty((count, data.shape[1]), dtype=data.dtype)
    centers[0] = data[rng.integers(n)]
    dist = np.sum((data - centers[0]) ** 2, axis=1)
    for i in range(1, count):
        total = dist.sum()
        j = rng.choice(n, p=dist / total) if total > 0 else rng.integers(n)
        centers[i] = data[j]
        dist = np.minimum(dist, np.sum((data - centers[i]) ** 2, axis=1))
    return centers


def nearest_entries(residual: np.ndarray, book: np.ndarray) -> np.ndarray:
    """Index of the Euclidean-nearest codebook row for every residual row."""
    dist = (
        np.sum(residual ** 2, axis=1, keepdims=True)
        - 2.0 * residual @ book.T
        + np.sum(book ** 2, axis=1)[None, :]
    )
    idx = np.argmin(dist, axis=1)
    # Round-off in the expanded form must never beat the exact zero entry.
    grows = np.sum((residual - book[idx]) ** 2, axis=1) > np.sum(residual ** 2, axis=1)
    idx[grows] = 0
    return idx


class ResidualVectorQuantizer(Module):
    def __init__(self, rng: np.random.Generator, dim: int, config: Optional[RvqConfig] = None):
        super().__init__()
        config = config or settings.rvq
        self.dim = dim
        self.stages = config.stages
        self.codebook_size = config.codebook_size
        self.decay = config.decay
        self.dead_threshold = config.dead_threshold
        for k in range(self.stages):
            book = rng.normal(0.0, 0.01, size=(self.codebook_size, dim))
            book[0] = 0.0
            self.register_buffer(f"codebook.{k}", book)
            self.register_buffer(f"ema_count.{k}", np.ones(self.codebook_size))
            self.register_buffer(f"ema_sum.{k}", book.copy())
        self.register_buffer("initialized", np.zeros(()))

    def codebook(self, stage: int) -> np.ndarray:
        return self.buffer(f"codebook.{stage}")

    @property
    def codebooks(self) -> List[np.ndarray]:
        return [self.codebook(k) for k in range(self.stages)]

    @property
    def is_initialized(self) -> bool:
        return bool(self.buffer("initialized"))

    # --- quantization ---

    def forward(self, emb: CodecEmbedding) -> QuantizerOutput:
        if emb.dim != self.dim:
            raise DimensionError(f"quantizer expects dimension {self.dim}, got {emb.dim}", axis=1)
        x = emb.values
        residual = x.data.astype(np.float64)
        total = np.zeros_like(residual)
        codes = np.zeros((emb.frames, self.stages), dtype=np.int64)
        norms = [np.linalg.norm(residual, axis=1)]
        commitment = None
        for k in range(self.stages):
            book = self.codebook(k)
            idx = nearest_entries(residual, book)
            codes[:, k] = idx
            residual = residual - book[idx]
            total = total + book[idx]
            norms.append(np.linalg.norm(residual, axis=1))
            term = ((x - total) ** 2).mean()
            commitment = term if commitment is None else commitment + term
        quantized = F.straight_through(x, total)
        return QuantizerOutput(
            codes=AudioCodes(codes, codebook_size=self.codebook_size),
            quantized=CodecEmbedding(quantized, EmbeddingVariant.QUANTIZED),
            commitment=commitment,
            residual_norms=np.stack(norms, axis=0),
        )

    def dequantize(self, codes: AudioCodes) -> CodecEmbedding:
        if codes.stages != self.stages:
            raise DimensionError(f"expected {self.stages} code stages, got {codes.stages}", axis=1)
        if codes.codebook_size > self.codebook_size:
            raise DimensionError(
                f"codes address {codes.codebook_size} entries, codebooks hold {self.codebook_size}"
            )
        # Validates the range against this quantizer's codebooks.
        AudioCodes(codes.codes, codebook_size=self.codebook_size)
        total = np.zeros((codes.frames, self.dim))
        for k in range(self.stages):
            total = total + self.codebook(k)[codes.codes[:, k]]
        return CodecEmbedding(Tensor(total), EmbeddingVariant.QUANTIZED)

    # --- codebook training ---

    def initialize(self, data: np.ndarray, rng: np.random.Generator) -> None:
        """k-means++ seeding of every stage from the residuals of `data`."""
        residual = np.asarray(data, dtype=np.float64)
        for k in range(self.stages):
            book = np.zeros((self.codebook_size, self.dim))
            book[1:] = kmeans_plus_plus(residual, self.codebook_size - 1, rng)
            idx = nearest_entries(residual, book)
            counts = np.maximum(np.bincount(idx, minlength=self.codebook_size), 1).astype(np.float64)
            self._buffers[f"codebook.{k}"] = book
            self._buffers[f"ema_count.{k}"] = counts
            self._buffers[f"ema_sum.{k}"] = book * counts[:, None]
            residual = residual - book[idx]
        self._buffers["initialized"] = np.ones(())
        logger.info("Codebooks initialized", stages=self.stages, vectors=len(data))

    def update(self, data: np.ndarray, codes: AudioCodes, rng: np.random.Generator) -> int:
        """
        One EMA step from encoder outputs `data` and the codes chosen for them.
        Returns the number of reseeded entries.
        """
        residual = np.asarray(data, dtype=np.float64)
        n = self.codebook_size
        reseeded = 0
        for k in range(self.stages):
            idx = codes.codes[:, k]
            book = self.codebook(k)
            chosen = book[idx]

            counts = np.bincount(idx, minlength=n).astype(np.float64)
            sums = np.zeros((n, self.dim))
            np.add.at(sums, idx, residual)
            ema_count = self.decay * self.buffer(f"ema_count.{k}") + (1 - self.decay) * counts
            ema_sum = self.decay * self.buffer(f"ema_sum.{k}") + (1 - self.decay) * sums

            mass = ema_count.sum()
            smoothed = (ema_count + _EPS) / (mass + n * _EPS) * mass
            new_book = ema_sum / smoothed[:, None]

            dead = np.flatnonzero(ema_count < self.dead_threshold * (1 - self.decay))
            dead = dead[dead != 0]
            if dead.size:
                picks = rng.integers(len(residual), size=dead.size)
                new_book[dead] = residual[picks]
                ema_sum[dead] = residual[picks]
                ema_count[dead] = 1.0
                reseeded += int(dead.size)

            new_book[0] = 0.0
            ema_sum[0] = 0.0
            self._buffers[f"codebook.{k}"] = new_book
            self._buffers[f"ema_count.{k}"] = ema_count
            self._buffers[f"ema_sum.{k}"] = ema_sum
            residual = residual - chosen
        return reseeded

    def perplexity(self, codes: AudioCodes) -> np.ndarray:
        """Per-stage codebook usage perplexity, exp(entropy)."""
        out = np.zeros(self.stages)
        for k in range(self.stages):
            p = np.bincount(codes.codes[:, k], minlength=self.codebook_size) / max(codes.frames, 1)
            p = p[p > 0]
            out[k] = float(np.exp(-np.sum(p * np.log(p))))
        return out


def rvq_quantize(quantizer: ResidualVectorQuantizer, emb: CodecEmbedding) -> Tuple[AudioCodes, CodecEmbedding]:
    out = quantizer(emb)
    return out.codes, out.quantized


def rvq_dequantize(quantizer: ResidualVectorQuantizer, codes: AudioCodes) -> CodecEmbedding:
    return quantizer.dequantize(codes)
