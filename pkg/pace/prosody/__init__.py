"""
Prosody pathway: pitch tracking, f0 quantization and prosody embeddings.
"""
from pace.prosody.features import (
    F0_BINS,
    ProsodyEmbedder,
    ProsodyEmbeddings,
    ProsodyFeatures,
    align_features,
    embed_prosody,
    export_prosody_csv,
    quantize_f0,
)
from pace.prosody.tracker import extract_f0

__all__ = [
    "F0_BINS",
    "ProsodyEmbedder",
    "ProsodyEmbeddings",
    "ProsodyFeatures",
    "align_features",
    "embed_prosody",
    "export_prosody_csv",
    "extract_f0",
    "quantize_f0",
]
