"""
Frame-level f0 and voicing extraction.

A YIN-style tracker: squared-difference function computed through FFT
cross-correlation, cumulative-mean normalization, absolute threshold, then
parabolic refinement of the chosen lag.
"""
from typing import Optional, Tuple

import numpy as np

from pace.config import ProsodyConfig, settings
from pace.exceptions import ConfigurationError, ContractError
from pace.logger import get_logger
from pace.types import AudioClip

logger = get_logger(__name__)

# Voiced estimates this far outside [fmin, fmax] are still accepted and clipped.
_RANGE_TOLERANCE = 0.02


def frame_windows(samples: np.ndarray, window: int, hop: int, count: int) -> np.ndarray:
    """(count, window) analysis frames centered on t * hop, zero-padded past either end."""
    padded = np.pad(samples, (window // 2, window - window // 2))
    starts = np.arange(count) * hop
    return padded[starts[:, None] + np.arange(window)[None, :]]


def _xcorr(head: np.ndarray, full: np.ndarray, n_fft: int, max_lag: int) -> np.ndarray:
    """sum_j head[j] * full[j + lag] for lag in [0, max_lag], row by row."""
    spectrum = np.conj(np.fft.rfft(head, n_fft)) * np.fft.rfft(full, n_fft)
    return np.fft.irfft(spectrum, n_fft)[:, : max_lag + 1]


def cumulative_mean_difference(
    frames: np.ndarray, max_lag: int, mask: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    (count, max_lag + 1) cumulative-mean-normalized difference, d'(0) = 1.

    `mask` marks the samples of each frame that lie inside the clip. The squared
    difference at every lag is averaged over the pairs where both samples are
    inside, so zero-padded edge frames are judged on real signal only.
    """
    count, window = frames.shape
    if mask is None:
        mask = np.ones_like(frames)
    span = window - max_lag
    n_fft = 1 << int(np.ceil(np.log2(window + span)))

    power = frames ** 2
    cross = _xcorr(frames[:, :span], frames, n_fft, max_lag)
    head_energy = _xcorr(power[:, :span], mask, n_fft, max_lag)
    tail_energy = _xcorr(mask[:, :span], power, n_fft, max_lag)
    pairs = np.rint(_xcorr(mask[:, :span], mask, n_fft, max_lag))

    diff = np.maximum(head_energy + tail_energy - 2.0 * cross, 0.0)
    valid = np.maximum(mask.sum(axis=1), 1.0)
    # No overlapping pairs: assume an uncorrelated lag.
    fallback = np.broadcast_to((2.0 * power.sum(axis=1) / valid)[:, None], diff.shape)
    diff = np.where(pairs >= 1, diff / np.maximum(pairs, 1.0), fallback)
    diff[:, 0] = 0.0

    lags = np.arange(max_lag + 1)
    running = np.cumsum(diff[:, 1:], axis=1)
    cmnd = np.ones_like(diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        cmnd[:, 1:] = np.where(running > 0, diff[:, 1:] * lags[1:] / running, 1.0)
    return cmnd


def _pick_lags(cmnd: np.ndarray, min_lag: int, max_lag: int, threshold: float) -> Tuple[np.ndarray, np.ndarray]:
    """First lag under threshold, walked down to its local minimum."""
    band = cmnd[:, min_lag:max_lag + 1] < threshold
    found = band.any(axis=1)
    lag = np.argmax(band, axis=1) + min_lag
    rows = np.arange(len(cmnd))
    while True:
        step = np.minimum(lag + 1, max_lag)
        better = found & (cmnd[rows, step] < cmnd[rows, lag])
        if not better.any():
            break
        lag = np.where(better, step, lag)
    return lag, found


def _refine(cmnd: np.ndarray, lag: np.ndarray) -> np.ndarray:
    rows = np.arange(len(cmnd))
    last = cmnd.shape[1] - 1
    left = cmnd[rows, np.maximum(lag - 1, 0)]
    mid = cmnd[rows, lag]
    right = cmnd[rows, np.minimum(lag + 1, last)]
    denom = left - 2.0 * mid + right
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(np.abs(denom) > 1e-12, 0.5 * (left - right) / denom, 0.0)
    return lag + np.clip(shift, -1.0, 1.0)


def extract_f0(
    clip: AudioClip,
    hop: Optional[int] = None,
    config: Optional[ProsodyConfig] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Estimate f0 (Hz) and voicing for every hop of `clip`.

    Returns `(raw_f0_hz, uv)`, both of length len(clip) / hop. Unvoiced frames
    carry f0 = 0.
    """
    config = config or settings.prosody
    hop = hop or config.hop
    if clip.sample_rate != settings.data.sample_rate:
        raise ConfigurationError(
            f"pitch tracking needs {settings.data.sample_rate} Hz audio, got {clip.sample_rate} Hz"
        )
    if len(clip) == 0:
        raise ContractError("cannot track pitch of an empty clip")
    if len(clip) % hop:
        raise ContractError(f"clip length {len(clip)} is not a multiple of the hop {hop}")

    sr = clip.sample_rate
    count = len(clip) // hop
    min_lag = max(2, int(np.floor(sr / (config.fmax * (1 + _RANGE_TOLERANCE)))))
    max_lag = min(int(np.ceil(sr / config.fmin)), config.window // 2)

    frames = frame_windows(clip.samples, config.window, hop, count)
    inside = frame_windows(np.ones(len(clip)), config.window, hop, count)
    cmnd = cumulative_mean_difference(frames, max_lag, inside)
    lag, found = _pick_lags(cmnd, min_lag, max_lag, config.threshold)
    period = _refine(cmnd, lag)

    with np.errstate(divide="ignore"):
        f0 = np.where(found, sr / np.maximum(period, 1.0), 0.0)
    rms = np.sqrt((frames ** 2).sum(axis=1) / inside.sum(axis=1))
    voiced = (
        found
        & (rms >= config.silence_rms)
        & (f0 >= config.fmin * (1 - _RANGE_TOLERANCE))
        & (f0 <= config.fmax * (1 + _RANGE_TOLERANCE))
    )
    raw = np.where(voiced, np.clip(f0, config.fmin, config.fmax), 0.0)
    uv = voiced.astype(np.int64)
    logger.debug("Tracked pitch", frames=count, voiced=int(uv.sum()))
    return raw, uv
