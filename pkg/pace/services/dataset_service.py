"""
Service layer for corpus operations: synthetic harmonic speech-like clips,
train/test splits, and on-disk corpora.
"""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import soundfile as sf

from pace.config import DataConfig, ProsodyConfig, settings
from pace.exceptions import ConfigurationError, DependencyError
from pace.logger import get_logger
from pace.types import CODEC_HOP, FRAME_HOP, AudioClip
from pace.utils.audio import ingest
from pace.utils.csv_log import read_rows

logger = get_logger(__name__)

HARMONICS = 8
PEAK = 0.9
CONTOUR_SHAPES = ("flat", "rise", "fall", "rise_fall", "fall_rise")
MANIFEST = "manifest.csv"


@dataclass
class SyntheticSpec:
    """One synthetic utterance: f0 control points, timbre fingerprint, duration, noise."""

    f0_contour: List[Tuple[float, float]]
    harmonic_amplitudes: List[float]
    duration: float = 2.0
    noise_floor: float = 0.0
    timbre: int = 0
    contour: int = 0
    shape: str = "custom"

    def validate(self, config: Optional[ProsodyConfig] = None) -> None:
        config = config or settings.prosody
        if self.duration <= 0:
            raise ConfigurationError(f"duration must be positive, got {self.duration}")
        if not self.f0_contour:
            raise ConfigurationError("f0 contour needs at least one control point")
        hz = np.array([point[1] for point in self.f0_contour])
        if np.any(hz < config.fmin) or np.any(hz > config.fmax):
            raise ConfigurationError(
                f"f0 contour {hz.min():.1f}..{hz.max():.1f} Hz leaves the tracker range "
                f"[{config.fmin:.0f}, {config.fmax:.0f}] Hz"
            )
        if len(self.harmonic_amplitudes) != HARMONICS:
            raise ConfigurationError(f"timbre needs {HARMONICS} harmonic amplitudes")
        if any(a < 0 for a in self.harmonic_amplitudes):
            raise ConfigurationError("harmonic amplitudes must be nonnegative")
        if self.noise_floor < 0:
            raise ConfigurationError("noise floor must be nonnegative")


@dataclass
class CorpusItem:
    clip: AudioClip
    f0_truth: np.ndarray
    timbre: int = -1
    contour: int = -1
    shape: str = "wav"
    split: str = "train"
    spec: Optional[SyntheticSpec] = None


@dataclass
class Corpus:
    items: List[CorpusItem] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def clips(self) -> List[AudioClip]:
        return [item.clip for item in self.items]

    def split(self, name: str) -> "Corpus":
        return Corpus([item for item in self.items if item.split == name])


def synthesize(spec: SyntheticSpec, rng: np.random.Generator, sample_rate: int = 24000) -> CorpusItem:
    """Additive harmonics with phase accumulated along the contour, plus white noise."""
    spec.validate()
    n = int(round(spec.duration * sample_rate))
    n += (-n) % CODEC_HOP
    t = np.arange(n) / sample_rate
    times = np.array([point[0] for point in spec.f0_contour], dtype=np.float64)
    hz = np.array([point[1] for point in spec.f0_contour], dtype=np.float64)
    f0 = np.interp(t, times, hz)
    phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate

    wave = np.zeros(n)
    for h, amp in enumerate(spec.harmonic_amplitudes, start=1):
        if amp > 0:
            wave += amp * np.sin(h * phase) * (h * f0 < sample_rate / 2)
    top = np.max(np.abs(wave))
    if top > 0:
        wave *= PEAK / top
    if spec.noise_floor > 0:
        wave += rng.normal(0.0, spec.noise_floor, size=n)

    voiced = any(a > 0 for a in spec.harmonic_amplitudes)
    truth = f0[::FRAME_HOP] if voiced else np.zeros(n // FRAME_HOP)
    return CorpusItem(
        clip=AudioClip(wave, sample_rate),
        f0_truth=truth,
        timbre=spec.timbre,
        contour=spec.contour,
        shape=spec.shape,
        spec=spec,
    )


def generate_synthetic_dataset(specs: Sequence[SyntheticSpec], seed: int) -> Corpus:
    """Deterministic per seed; clip i draws its noise from the stream (seed, i)."""
    items = [
        synthesize(spec, np.random.default_rng([seed, i]), settings.data.sample_rate)
        for i, spec in enumerate(specs)
    ]
    logger.info("Synthetic corpus generated", clips=len(items), seed=seed)
    return Corpus(items)


def timbre_fingerprints(count: int, rng: np.random.Generator) -> List[List[float]]:
    out = []
    order = np.arange(1, HARMONICS + 1)
    for _ in range(count):
        tilt = rng.uniform(0.3, 1.5)
        amps = rng.uniform(0.05, 1.0, size=HARMONICS) * order ** (-tilt)
        amps[0] = max(amps[0], 0.5 * amps.max())
        out.append([float(a) for a in amps])
    return out


def contour_points(shape: str, base: float, depth: float, duration: float) -> List[Tuple[float, float]]:
    high = base * (1.0 + depth)
    mid = base * (1.0 + depth / 2)
    values = {
        "flat": (base, base, base),
        "rise": (base, mid, high),
        "fall": (high, mid, base),
        "rise_fall": (base, high, base),
        "fall_rise": (high, base, high),
    }[shape]
    return list(zip((0.0, duration / 2, duration), values))


def default_specs(config: Optional[DataConfig] = None, seed: Optional[int] = None) -> List[SyntheticSpec]:
    """Timbre x contour grid; the last contours (by test_fraction) form the test split."""
    config = config or settings.data
    rng = np.random.default_rng(settings.seed if seed is None else seed)
    timbres = timbre_fingerprints(config.timbres, rng)
    contours = []
    for c in range(config.contours):
        shape = CONTOUR_SHAPES[c % len(CONTOUR_SHAPES)]
        base = rng.uniform(100.0, 260.0)
        depth = rng.uniform(0.15, 0.5)
        contours.append((shape, contour_points(shape, base, depth, config.segment_seconds)))
    return [
        SyntheticSpec(
            f0_contour=points,
            harmonic_amplitudes=amps,
            duration=config.segment_seconds,
            noise_floor=config.noise_floor,
            timbre=t,
            contour=c,
            shape=shape,
        )
        for t, amps in enumerate(timbres)
        for c, (shape, points) in enumerate(contours)
    ]


def assign_splits(corpus: Corpus, contours: int, test_fraction: float) -> Corpus:
    held_out = int(np.ceil(contours * test_fraction))
    for item in corpus.items:
        if item.contour >= 0:
            item.split = "test" if item.contour >= contours - held_out else "train"
    return corpus


def build_corpus(config: Optional[DataConfig] = None, seed: Optional[int] = None) -> Corpus:
    """The default synthetic grid plus any WAVs under `wav_dir` (training split)."""
    config = config or settings.data
    seed = settings.seed if seed is None else seed
    corpus = generate_synthetic_dataset(default_specs(config, seed), seed)
    assign_splits(corpus, config.contours, config.test_fraction)
    if config.wav_dir is not None:
        for i, path in enumerate(sorted(Path(config.wav_dir).glob("*.wav"))):
            ingested = ingest(path, seed + i, config)
            corpus.items.append(CorpusItem(clip=ingested.clip, f0_truth=np.zeros(0)))
    return corpus


def save_corpus(corpus: Corpus, directory: Path) -> Path:
    """32-bit float WAVs plus a manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with (directory / MANIFEST).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["file", "timbre", "contour", "shape", "split", "f0_contour"])
        for i, item in enumerate(corpus.items):
            name = f"clip_{i:04d}.wav"
            sf.write(str(directory / name), item.clip.samples, item.clip.sample_rate, subtype="FLOAT")
            points = json.dumps(item.spec.f0_contour) if item.spec else "[]"
            writer.writerow([name, item.timbre, item.contour, item.shape, item.split, points])
    logger.info("Corpus written", directory=str(directory), clips=len(corpus))
    return directory


def load_corpus(directory: Path) -> Corpus:
    directory = Path(directory)
    manifest = directory / MANIFEST
    if not manifest.is_file():
        raise DependencyError(f"no corpus at {directory}; run `synth` first")
    items = []
    for row in read_rows(manifest):
        data, rate = sf.read(str(directory / row["file"]), dtype="float64")
        clip = AudioClip(data, rate)
        points = [tuple(p) for p in json.loads(row["f0_contour"])]
        truth = np.zeros(len(clip) // FRAME_HOP)
        if points:
            t = np.arange(0, len(clip), FRAME_HOP) / rate
            truth = np.interp(t, [p[0] for p in points], [p[1] for p in points])
        items.append(
            CorpusItem(
                clip=clip,
                f0_truth=truth,
                timbre=int(row["timbre"]),
                contour=int(row["contour"]),
                shape=row["shape"],
                split=row["split"],
            )
        )
    return Corpus(items)
