"""
Multi-scale STFT reconstruction loss.

The STFT is a strided 1-D convolution with constant windowed cosine and sine
bases, so gradients reach the decoder through the ordinary conv1d adjoint.
"""
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy.signal import get_window

from pace.exceptions import ContractError
from pace.tensor import LayerKind, LayerParams, Tensor, conv1d, get_default_dtype
from pace.types import AudioClip

WINDOW_SIZES = (64, 128, 256, 512, 1024, 2048)
_EPS = 1e-7

Waveform = Union[AudioClip, Tensor, np.ndarray]


@lru_cache(maxsize=None)
def _stft_basis(n_fft: int, dtype: type) -> np.ndarray:
    """(2 * bins, 1, n_fft): Hann-windowed cosines stacked over sines."""
    bins = n_fft // 2 + 1
    window = get_window("hann", n_fft, fftbins=True)
    phase = 2.0 * np.pi * np.outer(np.arange(bins), np.arange(n_fft)) / n_fft
    basis = np.concatenate([window * np.cos(phase), -window * np.sin(phase)], axis=0)
    return basis[:, None, :].astype(dtype)


def as_waveform(x: Waveform) -> Tensor:
    if isinstance(x, AudioClip):
        return Tensor(x.samples)
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x))


def stft_magnitude(x: Waveform, n_fft: int, hop: Optional[int] = None) -> Tensor:
    """(bins, frames) magnitude of a 1-D waveform, centered frames."""
    wave = as_waveform(x)
    if wave.ndim != 1:
        raise ContractError(f"expected a 1-D waveform, got shape {wave.shape}")
    hop = hop or n_fft // 4
    basis = _stft_basis(n_fft, get_default_dtype())
    params = LayerParams(
        kind=LayerKind.CONV1D,
        weights=Tensor(basis),
        stride=hop,
        kernel_size=n_fft,
        padding=n_fft // 2,
        channels_in=1,
        channels_out=basis.shape[0],
    )
    spec = conv1d(wave.reshape(1, wave.shape[0]), params)
    bins = n_fft // 2 + 1
    re, im = spec[:bins], spec[bins:]
    return (re * re + im * im + _EPS).sqrt()


def spectral_loss(
    x: Waveform,
    x_hat: Waveform,
    windows: Sequence[int] = WINDOW_SIZES,
    normalized: bool = True,
) -> Tensor:
    """
    Sum over window sizes s (hop s / 4) of ||M_s(x) - M_s(x_hat)||_1 plus
    ||log M_s(x) - log M_s(x_hat)||_2.

    With `normalized` (the training default) each norm is divided by the norm of
    an all-ones spectrogram of the same shape: the L1 term by the element count
    n = bins * frames, the L2 term by sqrt(n). The terms become a mean absolute
    difference and an RMS, independent of clip length.
    """
    a, b = as_waveform(x), as_waveform(x_hat)
    if a.shape != b.shape:
        raise ContractError(f"waveforms differ in length: {a.shape} vs {b.shape}")
    total = None
    for n_fft in windows:
        ma, mb = stft_magnitude(a, n_fft), stft_magnitude(b, n_fft)
        linear = (ma - mb).abs().sum()
        log_gap = ((ma.log() - mb.log()) ** 2).sum().sqrt()
        if normalized:
            n = ma.data.size
            linear = linear * (1.0 / n)
            log_gap = log_gap * float(1.0 / np.sqrt(n))
        term = linear + log_gap
        total = term if total is None else total + term
    return total


def reconstruction_loss(
    x: Waveform,
    x_hat: Waveform,
    waveform_weight: float = 0.0,
    windows: Sequence[int] = WINDOW_SIZES,
) -> Tensor:
    """`spectral_loss` plus `waveform_weight` times the mean absolute sample difference."""
    loss = spectral_loss(x, x_hat, windows)
    if waveform_weight > 0.0:
        loss = loss + (as_waveform(x) - as_waveform(x_hat)).abs().mean() * waveform_weight
    return loss


def snr_db(x: Waveform, x_hat: Waveform) -> float:
    """10 log10(signal energy / error energy); inf for an exact reconstruction."""
    a = as_waveform(x).data.astype(np.float64)
    b = as_waveform(x_hat).data.astype(np.float64)
    if a.shape != b.shape:
        raise ContractError(f"waveforms differ in length: {a.shape} vs {b.shape}")
    noise = float(np.sum((a - b) ** 2))
    signal = float(np.sum(a ** 2))
    if noise == 0.0:
        return float("inf")
    if signal == 0.0:
        return float("-inf")
    return 10.0 * np.log10(signal / noise)
