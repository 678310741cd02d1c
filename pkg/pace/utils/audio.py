"""
WAV reading and writing, resampling and training-segment ingestion.
"""
from dataclasses import dataclass
from math import gcd
from pathlib import Path
from typing import Optional, Union

import numpy as np
import soundfile as sf
from scipy.signal import firwin, resample_poly

from pace.config import DataConfig, settings
from pace.exceptions import AudioFormatError, ConfigurationError
from pace.logger import get_logger
from pace.types import AudioClip

logger = get_logger(__name__)

SUPPORTED_SUBTYPES = {"PCM_U8", "PCM_S8", "PCM_16", "PCM_24", "FLOAT"}
TAPS_PER_PHASE = 64
KAISER_BETA = 5.0
PEAK = 0.95


@dataclass
class IngestedClip:
    """A training-ready clip and where it came from."""

    clip: AudioClip
    source: Path
    original_rate: int
    crop_offset: int


def read_wav(path: Union[str, Path]) -> tuple:
    """(mono float samples, sample rate). Stereo and wider inputs are averaged."""
    path = Path(path)
    try:
        info = sf.info(str(path))
    except (RuntimeError, sf.LibsndfileError) as e:
        raise AudioFormatError(f"{path}: unreadable audio ({e})") from e
    if info.format != "WAV" or info.subtype not in SUPPORTED_SUBTYPES:
        raise AudioFormatError(
            f"{path}: unsupported audio {info.format}/{info.subtype}; "
            f"expected WAV with one of {sorted(SUPPORTED_SUBTYPES)}"
        )
    data, rate = sf.read(str(path), dtype="float64", always_2d=True)
    return data.mean(axis=1), int(rate)


def resample(samples: np.ndarray, rate_in: int, rate_out: int) -> np.ndarray:
    """Polyphase resampling with a Kaiser-windowed sinc low-pass."""
    if rate_in == rate_out:
        return np.asarray(samples, dtype=np.float64)
    g = gcd(rate_in, rate_out)
    up, down = rate_out // g, rate_in // g
    factor = max(up, down)
    taps = firwin(2 * (TAPS_PER_PHASE // 2) * factor + 1, 1.0 / factor, window=("kaiser", KAISER_BETA))
    return resample_poly(samples, up, down, window=taps)


def fit_segment(samples: np.ndarray, length: int, rng: np.random.Generator) -> tuple:
    """Random crop to `length`, or zero-pad at the end. Returns (segment, offset)."""
    if len(samples) > length:
        offset = int(rng.integers(0, len(samples) - length + 1))
        return samples[offset:offset + length], offset
    return np.pad(samples, (0, length - len(samples))), 0


def normalize_peak(samples: np.ndarray, peak: float = PEAK) -> np.ndarray:
    top = float(np.max(np.abs(samples))) if len(samples) else 0.0
    return samples * (peak / top) if top > 0 else samples


def ingest(path: Union[str, Path], seed: int, config: Optional[DataConfig] = None) -> IngestedClip:
    config = config or settings.data
    samples, rate = read_wav(path)
    samples = resample(samples, rate, config.sample_rate)
    segment, offset = fit_segment(samples, config.segment_samples, np.random.default_rng(seed))
    clip = AudioClip(normalize_peak(segment), config.sample_rate)
    logger.debug("Clip ingested", path=str(path), rate=rate, offset=offset)
    return IngestedClip(clip=clip, source=Path(path), original_rate=rate, crop_offset=offset)


def write_wav(path: Union[str, Path], clip: AudioClip) -> Path:
    """24 kHz 16-bit mono WAV; samples are clamped to [-1, 1] here and only here."""
    if clip.sample_rate != settings.data.sample_rate:
        raise ConfigurationError(f"refusing to export {clip.sample_rate} Hz audio")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sf.write(str(path), np.clip(clip.samples, -1.0, 1.0), clip.sample_rate, subtype="PCM_16")
    return path
