"""
Prosody-matching metrics and the prosody transfer report.
"""
import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np

from pace.exceptions import ContractError, UndefinedDistanceError
from pace.prosody import ProsodyFeatures
from pace.types import FRAME_HOP

ProsodySource = Literal["source", "target-prompt"]

# Published F0-scaled distances per variant and scenario. Desk-scale runs reproduce
# the ranking, never these magnitudes.
PUBLISHED_DISTANCES: Dict[Tuple[str, str], float] = {
    ("full", "source"): 2.8239,
    ("full", "target-prompt"): 2.6988,
    ("no_mi", "source"): 3.2751,
    ("no_mi", "target-prompt"): 3.0179,
    ("no_scale", "source"): 3.9178,
    ("no_scale", "target-prompt"): 3.6237,
    ("no_recon_e", "source"): 4.7892,
    ("no_recon_e", "target-prompt"): 4.2649,
}

REPORT_COLUMNS = (
    "model_variant",
    "prosody_source",
    "mean_distance",
    "pair_count",
    "published_distance",
    "note",
)


@dataclass
class F0Contour:
    """f0 in Hz per frame, 0 on unvoiced frames; `uv` optionally carries explicit voicing."""

    values: np.ndarray
    hop: int = FRAME_HOP
    uv: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ContractError(f"contour must be 1-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ContractError("contour values must be finite and nonnegative")
        if self.uv is not None:
            self.uv = np.asarray(self.uv, dtype=bool)
            if self.uv.shape != self.values.shape:
                raise ContractError("voicing mask and contour differ in length")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def voiced(self) -> np.ndarray:
        mask = self.values > 0
        return mask & self.uv if self.uv is not None else mask

    @classmethod
    def from_features(cls, features: ProsodyFeatures) -> "F0Contour":
        return cls(values=features.raw_f0_hz, uv=features.uv.astype(bool))


def zscore(values: np.ndarray) -> np.ndarray:
    std = values.std()
    centered = values - values.mean()
    return centered / std if std > 0 else np.zeros_like(centered)


def _stretch(values: np.ndarray, length: int) -> np.ndarray:
    if len(values) == length:
        return values
    if len(values) == 1:
        return np.full(length, values[0])
    return np.interp(np.linspace(0.0, 1.0, length), np.linspace(0.0, 1.0, len(values)), values)


def f0_scaled_distance(a: F0Contour, b: F0Contour) -> float:
    """
    RMS difference of z-scored voiced f0, after stretching the shorter voiced
    sequence to the longer one's length. Equal-length contours that both carry
    voicing are compared on the intersection of their voiced frames.
    """
    mask_a, mask_b = a.voiced, b.voiced
    if a.uv is not None and b.uv is not None and len(a) == len(b):
        mask_a = mask_b = mask_a & mask_b
    va, vb = a.values[mask_a], b.values[mask_b]
    if len(va) == 0 or len(vb) == 0:
        raise UndefinedDistanceError("f0 distance is undefined for a contour with no voiced frames")
    za, zb = zscore(va), zscore(vb)
    length = max(len(za), len(zb))
    diff = _stretch(za, length) - _stretch(zb, length)
    return float(np.sqrt(np.mean(diff ** 2)))


@dataclass
class ReportRow:
    model_variant: str
    prosody_source: ProsodySource
    mean_distance: float
    pair_count: int

    def __post_init__(self) -> None:
        if self.pair_count <= 0:
            raise ContractError("a report row needs at least one pair")


@dataclass
class ProsodyReport:
    rows: List[ReportRow] = field(default_factory=list)

    def add(self, variant: str, source: ProsodySource, distances: List[float]) -> ReportRow:
        row = ReportRow(variant, source, float(np.mean(distances)), len(distances))
        self.rows.append(row)
        return row

    def distance(self, variant: str, source: ProsodySource) -> float:
        for row in self.rows:
            if row.model_variant == variant and row.prosody_source == source:
                return row.mean_distance
        raise KeyError((variant, source))

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in self.rows:
                published = PUBLISHED_DISTANCES.get((row.model_variant, row.prosody_source))
                writer.writerow(
                    {
                        "model_variant": row.model_variant,
                        "prosody_source": row.prosody_source,
                        "mean_distance": f"{row.mean_distance:.6f}",
                        "pair_count": row.pair_count,
                        "published_distance": "" if published is None else f"{published:.4f}",
                        "note": "" if published is None else "published value; not reproducible at desk scale",
                    }
                )
        return path


def dump_contour(path: Union[str, Path], contour: F0Contour) -> Path:
    """Two-column `frame z_f0` text over voiced frames, gnuplot-readable."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frames = np.flatnonzero(contour.voiced)
    z = zscore(contour.values[frames]) if len(frames) else np.zeros(0)
    np.savetxt(path, np.column_stack([frames, z]), fmt=["%d", "%.6f"], header="frame z_f0")
    return path
