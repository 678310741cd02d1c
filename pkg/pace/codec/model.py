"""
Codec assemblies: the prosody-aware PACE codec and the plain reference codec
whose encoder produces the embedding-reconstruction targets.
"""
import hashlib
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from pace.codec.decoder import Decoder
from pace.codec.encoder import CodecEncoder, Stage1Encoder, Stage2Encoder, fuse_prosody
from pace.codec.rvq import QuantizerOutput, ResidualVectorQuantizer
from pace.codec.scale import ScaleLayer
from pace.config import ModelConfig, RvqConfig, settings
from pace.exceptions import ContractError
from pace.prosody import ProsodyEmbedder, ProsodyEmbeddings, ProsodyFeatures
from pace.tensor import Module, Tensor
from pace.types import AudioClip, AudioCodes, CodecEmbedding, EmbeddingVariant, FrameEmbedding


def parameter_fingerprint(module: Module) -> str:
    """SHA-256 over parameter names, shapes and bytes, in name order."""
    digest = hashlib.sha256()
    for name, param in sorted(module.named_parameters(), key=lambda item: item[0]):
        digest.update(name.encode())
        digest.update(str(param.shape).encode())
        digest.update(np.ascontiguousarray(param.data, dtype=np.float64).tobytes())
    return digest.hexdigest()


@dataclass
class PaceForward:
    """Intermediate embeddings of one PACE encoder pass."""

    frame: FrameEmbedding
    prosody: Optional[ProsodyEmbeddings]
    pre_scale: CodecEmbedding
    scaled: CodecEmbedding


class PaceCodec(Module):
    def __init__(
        self,
        rng: np.random.Generator,
        model: Optional[ModelConfig] = None,
        rvq: Optional[RvqConfig] = None,
        use_scale_layer: Optional[bool] = None,
    ):
        super().__init__()
        model = model or settings.model
        self.stage1 = Stage1Encoder(rng, model)
        self.stage2 = Stage2Encoder(rng, model)
        self.prosody = ProsodyEmbedder(rng, model)
        self.scale = ScaleLayer(rng, model)
        self.quantizer = ResidualVectorQuantizer(rng, model.codec_dim, rvq)
        self.decoder = Decoder(rng, model)
        self.use_scale_layer = model.use_scale_layer if use_scale_layer is None else use_scale_layer

    def embed(self, clip: AudioClip, features: Optional[ProsodyFeatures] = None) -> PaceForward:
        """
        Encoder pass up to the RVQ input. Without `features` the prosody path is
        skipped, as in the first training stage.
        """
        frame = self.stage1(clip)
        pros = None
        fused = frame
        if features is not None:
            if features.frames != frame.frames:
                raise ContractError(
                    f"prosody has {features.frames} frames, encoder produced {frame.frames}"
                )
            pros = self.prosody(features)
            fused = fuse_prosody(frame, pros)
        pre = self.stage2(fused)
        if self.use_scale_layer:
            scaled = self.scale(pre)
        else:
            scaled = CodecEmbedding(pre.values, EmbeddingVariant.SCALED)
        return PaceForward(frame=frame, prosody=pros, pre_scale=pre, scaled=scaled)

    def reconstruct(
        self, clip: AudioClip, features: Optional[ProsodyFeatures] = None
    ) -> Tuple[PaceForward, QuantizerOutput, Tensor]:
        fwd = self.embed(clip, features)
        quant = self.quantizer(fwd.scaled)
        return fwd, quant, self.decoder(quant.quantized)

    def encode_codes(self, clip: AudioClip, features: ProsodyFeatures) -> AudioCodes:
        return self.quantizer(self.embed(clip, features).scaled).codes

    def decode_codes(self, codes: AudioCodes) -> AudioClip:
        return AudioClip(self.decoder(self.quantizer.dequantize(codes)).data.copy())

    def adopt_reference(self, reference: "ReferenceCodec") -> None:
        """Start from the reference codec's quantizer and decoder."""
        self.quantizer.load_state_dict(reference.quantizer.state_dict())
        self.decoder.load_state_dict(reference.decoder.state_dict())

    def stage_parameters(self, stage: int) -> list:
        """Parameters the generator optimizer updates in `stage`."""
        if stage == 1:
            return self.stage1.parameters() + self.stage2.parameters() + self._scale_parameters()
        if stage == 2:
            return self.stage1.parameters()
        return (
            self.stage1.parameters()
            + self.stage2.parameters()
            + self.prosody.parameters()
            + self._scale_parameters()
            + self.decoder.parameters()
        )

    def _scale_parameters(self) -> list:
        return self.scale.parameters() if self.use_scale_layer else []


class ReferenceCodec(Module):
    """Plain codec: four-block encoder, RVQ, decoder. No prosody path, no scale layer."""

    def __init__(
        self,
        rng: np.random.Generator,
        model: Optional[ModelConfig] = None,
        rvq: Optional[RvqConfig] = None,
    ):
        super().__init__()
        model = model or settings.model
        self.encoder = CodecEncoder(rng, model)
        self.quantizer = ResidualVectorQuantizer(rng, model.codec_dim, rvq)
        self.decoder = Decoder(rng, model)

    def encode(self, clip: AudioClip) -> CodecEmbedding:
        return self.encoder(clip)

    def reconstruct(self, clip: AudioClip) -> Tuple[CodecEmbedding, QuantizerOutput, Tensor]:
        emb = self.encoder(clip)
        quant = self.quantizer(emb)
        return emb, quant, self.decoder(quant.quantized)

    def fingerprint(self) -> str:
        return parameter_fingerprint(self.encoder)
