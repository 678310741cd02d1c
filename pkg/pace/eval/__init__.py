"""
Prosody-matching evaluation.
"""
from pace.eval.metrics import (
    PUBLISHED_DISTANCES,
    F0Contour,
    ProsodyReport,
    ReportRow,
    dump_contour,
    f0_scaled_distance,
    zscore,
)

__all__ = [
    "PUBLISHED_DISTANCES",
    "F0Contour",
    "ProsodyReport",
    "ReportRow",
    "dump_contour",
    "f0_scaled_distance",
    "zscore",
]
