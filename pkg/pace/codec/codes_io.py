"""
Binary code stream: little-endian header (magic "PACE", version, frames, stages)
followed by frames x stages u16 code indices in row-major order.
"""
import struct
from pathlib import Path
from typing import Union

import numpy as np

from pace.exceptions import AudioFormatError, ContractError
from pace.types import AudioCodes

MAGIC = b"PACE"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_codes(path: Union[str, Path], codes: AudioCodes) -> Path:
    if codes.codebook_size > np.iinfo(np.uint16).max + 1:
        raise ContractError(f"codebook of {codes.codebook_size} entries does not fit u16 codes")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = np.ascontiguousarray(codes.codes, dtype="<u2").tobytes()
    path.write_bytes(_HEADER.pack(MAGIC, VERSION, codes.frames, codes.stages) + body)
    return path


def read_codes(path: Union[str, Path], codebook_size: int = 1024) -> AudioCodes:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise AudioFormatError(f"{path}: truncated code stream header")
    magic, version, frames, stages = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise AudioFormatError(f"{path}: not a code stream (magic {magic!r})")
    if version != VERSION:
        raise AudioFormatError(f"{path}: unsupported code stream version {version}")
    expected = _HEADER.size + frames * stages * 2
    if len(blob) != expected:
        raise AudioFormatError(f"{path}: expected {expected} bytes, found {len(blob)}")
    values = np.frombuffer(blob, dtype="<u2", offset=_HEADER.size).reshape(frames, stages)
    return AudioCodes(values.astype(np.int64), codebook_size=codebook_size)
