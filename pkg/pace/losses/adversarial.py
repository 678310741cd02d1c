"""
STFT-magnitude discriminator with hinge adversarial and feature-matching losses.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from pace.config import ModelConfig, settings
from pace.losses.spectral import Waveform, as_waveform, stft_magnitude
from pace.tensor import Conv2d, Module, Tensor

SPECTROGRAM_FFT = 512
_EPS = 1e-5


class Discriminator(Module):
    """2-D convolutions over a log-magnitude spectrogram; one logit map per clip."""

    def __init__(self, rng: np.random.Generator, config: Optional[ModelConfig] = None):
        super().__init__()
        config = config or settings.model
        c = config.discriminator_channels
        self.layers = [
            Conv2d(rng, 1, c, (3, 9), padding=(1, 4)),
            Conv2d(rng, c, c, (3, 9), stride=(2, 2), padding=(1, 4)),
            Conv2d(rng, c, c, (3, 9), stride=(2, 2), padding=(1, 4)),
            Conv2d(rng, c, c, (3, 3), padding=(1, 1)),
        ]
        self.logits = Conv2d(rng, c, 1, (3, 3), padding=(1, 1), zero=True)

    def forward(self, wave: Waveform) -> Tuple[Tensor, List[Tensor]]:
        spec = stft_magnitude(wave, SPECTROGRAM_FFT).log()
        x = spec.reshape(1, *spec.shape)
        activations = []
        for layer in self.layers:
            x = layer(x).leaky_relu(0.2)
            activations.append(x)
        return self.logits(x), activations


@dataclass
class AdversarialLosses:
    l_adv: Tensor
    l_feat: Tensor
    l_disc: Tensor


def feature_matching(real: List[Tensor], fake: List[Tensor]) -> Tensor:
    """Mean over layers of mean |a_real - a_fake| / mean |a_real|."""
    total = None
    for a_real, a_fake in zip(real, fake):
        a_real = a_real.detach()
        scale = float(np.mean(np.abs(a_real.data))) + _EPS
        term = (a_real - a_fake).abs().mean() * (1.0 / scale)
        total = term if total is None else total + term
    return total * (1.0 / len(real))


def adversarial_losses(disc: Discriminator, x: Waveform, x_hat: Waveform) -> AdversarialLosses:
    """
    Hinge losses. `l_adv` and `l_feat` reach the generator only; `l_disc` reaches
    the discriminator only.
    """
    real = as_waveform(x).detach()
    fake = as_waveform(x_hat)

    real_logits, real_acts = disc(real)
    with disc.frozen():
        fake_logits, fake_acts = disc(fake)
    fake_logits_d, _ = disc(fake.detach())

    l_adv = -fake_logits.mean()
    l_feat = feature_matching(real_acts, fake_acts)
    l_disc = (1.0 - real_logits).relu().mean() + (1.0 + fake_logits_d).relu().mean()
    return AdversarialLosses(l_adv=l_adv, l_feat=l_feat, l_disc=l_disc)
