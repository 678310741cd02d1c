"""
Training objectives.
"""
from pace.losses.adversarial import AdversarialLosses, Discriminator, adversarial_losses, feature_matching
from pace.losses.embedding import recon_embedding_loss
from pace.losses.generator import LossParts, check_weights, commitment_loss, total_generator_loss
from pace.losses.spectral import WINDOW_SIZES, reconstruction_loss, snr_db, spectral_loss, stft_magnitude

__all__ = [
    "AdversarialLosses",
    "Discriminator",
    "adversarial_losses",
    "feature_matching",
    "recon_embedding_loss",
    "LossParts",
    "check_weights",
    "commitment_loss",
    "total_generator_loss",
    "WINDOW_SIZES",
    "reconstruction_loss",
    "snr_db",
    "spectral_loss",
    "stft_magnitude",
]
