"""
Service layer for inference: prosody swap and the codes encode / decode path.
"""
from pathlib import Path
from typing import Optional, Union

import numpy as np

from pace.codec import read_codes, write_codes
from pace.config import ProsodyConfig, Settings
from pace.exceptions import StateError
from pace.logger import get_logger
from pace.prosody import ProsodyFeatures, align_features
from pace.services.checkpoint_service import RegistryService
from pace.services.training_service import TrainingService, TrainingState
from pace.types import FRAME_HOP, AudioClip, AudioCodes
from pace.utils.audio import ingest, write_wav

logger = get_logger(__name__)


def language_model(codes: AudioCodes) -> AudioCodes:
    """Identity stand-in for the codec language model: output codes are the input codes."""
    return codes


def _require_trained(state: TrainingState) -> None:
    if state.stage < 3 or not state.codec.quantizer.is_initialized:
        raise StateError(
            f"variant {state.variant} is trained up to stage {state.stage}; inference needs stage 3"
        )


def prompt_features(prompt: AudioClip, config: Optional[ProsodyConfig] = None) -> ProsodyFeatures:
    pad = (-len(prompt)) % FRAME_HOP
    if pad:
        prompt = AudioClip(np.pad(prompt.samples, (0, pad)), prompt.sample_rate)
    return ProsodyFeatures.from_clip(prompt, config)


def encode_clip(state: TrainingState, clip: AudioClip, features: ProsodyFeatures) -> AudioCodes:
    _require_trained(state)
    clip.require_codec_length()
    features = align_features(features, len(clip) // FRAME_HOP)
    with state.codec.frozen():
        return state.codec.encode_codes(clip, features)


def decode_codes(state: TrainingState, codes: AudioCodes) -> AudioClip:
    _require_trained(state)
    with state.codec.frozen():
        return state.codec.decode_codes(codes)


def prosody_swap_inference(
    state: TrainingState,
    target: AudioClip,
    prosody_prompt: AudioClip,
    config: Optional[ProsodyConfig] = None,
) -> AudioClip:
    """
    Content and timbre from `target`, prosody from `prosody_prompt`. The output
    has exactly the target's sample count.
    """
    features = prompt_features(prosody_prompt, config)
    codes = language_model(encode_clip(state, target, features))
    return decode_codes(state, codes)


class InferenceService:
    def __init__(self, config: Settings, registry: RegistryService):
        self.config = config
        self.training = TrainingService(config, registry)

    def load(self, variant: str = "full") -> TrainingState:
        state = self.training.load_state(variant, 3)
        _require_trained(state)
        return state

    def swap(self, target: Union[str, Path], prosody: Union[str, Path], out: Union[str, Path],
             variant: str = "full") -> Path:
        state = self.load(variant)
        target_clip = ingest(target, self.config.seed, self.config.data).clip
        prompt_clip = ingest(prosody, self.config.seed + 1, self.config.data).clip
        output = prosody_swap_inference(state, target_clip, prompt_clip, self.config.prosody)
        logger.info("Prosody swapped", target=str(target), prosody=str(prosody), samples=len(output))
        return write_wav(out, output)

    def encode(self, source: Union[str, Path], out: Union[str, Path], variant: str = "full") -> Path:
        state = self.load(variant)
        clip = ingest(source, self.config.seed, self.config.data).clip
        codes = encode_clip(state, clip, prompt_features(clip, self.config.prosody))
        logger.info("Clip encoded", source=str(source), frames=codes.frames, stages=codes.stages)
        return write_codes(out, codes)

    def decode(self, codes_path: Union[str, Path], out: Union[str, Path], variant: str = "full") -> Path:
        state = self.load(variant)
        codes = read_codes(codes_path, state.codec.quantizer.codebook_size)
        return write_wav(out, decode_codes(state, codes))
