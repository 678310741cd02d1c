"""
Split codec: stage-1 / stage-2 encoders, prosody fusion, scale layer, RVQ and decoder.
"""
from pace.codec.codes_io import read_codes, write_codes
from pace.codec.decoder import Decoder, decode
from pace.codec.encoder import (
    CodecEncoder,
    Stage1Encoder,
    Stage2Encoder,
    encode_stage1,
    encode_stage2,
    fuse_prosody,
)
from pace.codec.model import PaceCodec, PaceForward, ReferenceCodec, parameter_fingerprint
from pace.codec.rvq import QuantizerOutput, ResidualVectorQuantizer, rvq_dequantize, rvq_quantize
from pace.codec.scale import ScaleLayer, scale_layer

__all__ = [
    "read_codes",
    "write_codes",
    "Decoder",
    "decode",
    "CodecEncoder",
    "Stage1Encoder",
    "Stage2Encoder",
    "encode_stage1",
    "encode_stage2",
    "fuse_prosody",
    "PaceCodec",
    "PaceForward",
    "ReferenceCodec",
    "parameter_fingerprint",
    "QuantizerOutput",
    "ResidualVectorQuantizer",
    "rvq_dequantize",
    "rvq_quantize",
    "ScaleLayer",
    "scale_layer",
]
