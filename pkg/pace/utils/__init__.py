"""
Helpers for audio files and CSV logs.
"""
from pace.utils.audio import (
    IngestedClip,
    fit_segment,
    ingest,
    normalize_peak,
    read_wav,
    resample,
    write_wav,
)
from pace.utils.csv_log import TRAINING_COLUMNS, CsvLog, read_rows

__all__ = [
    "IngestedClip",
    "fit_segment",
    "ingest",
    "normalize_peak",
    "read_wav",
    "resample",
    "write_wav",
    "TRAINING_COLUMNS",
    "CsvLog",
    "read_rows",
]
