import csv

import numpy as np
import pytest

from pace.config import ModelConfig, ProsodyConfig
from pace.exceptions import ConfigurationError, ContractError, DimensionError
from pace.prosody import (
    F0_BINS,
    ProsodyEmbedder,
    ProsodyFeatures,
    align_features,
    embed_prosody,
    export_prosody_csv,
    extract_f0,
    quantize_f0,
)
from pace.prosody.tracker import frame_windows
from pace.types import AudioClip, SAMPLE_RATE


def _sine(freq: float, seconds: float = 0.5, amplitude: float = 0.5) -> AudioClip:
    t = np.arange(int(SAMPLE_RATE * seconds)) / SAMPLE_RATE
    return AudioClip(amplitude * np.sin(2 * np.pi * freq * t))


class TestTracker:
    def test_steady_tone_is_tracked(self):
        raw, uv = extract_f0(_sine(220.0, seconds=2.0))
        assert len(raw) == len(uv) == 1200
        assert uv.all()
        assert abs(np.median(raw) - 220.0) <= 2.0
        close = np.abs(raw - 220.0) <= 2.0
        assert close.mean() > 0.95

    def test_edge_windows_are_zero_padded(self):
        frames = frame_windows(np.ones(4000), 1024, 40, 100)
        assert frames.shape == (100, 1024)
        assert not frames[0, :512].any()
        assert frames[0, 512:].all()
        assert frames[50].all()
        assert not frames[-1, 512 + 40:].any()

    def test_edge_frames_keep_their_pitch(self):
        raw, uv = extract_f0(_sine(220.0, seconds=0.2))
        assert uv[0] == uv[-1] == 1
        assert abs(raw[0] - 220.0) <= 0.03 * 220.0
        assert abs(raw[-1] - 220.0) <= 0.03 * 220.0

    @pytest.mark.parametrize("ratio", [1.06, 1.25, 1.5, 2.0])
    def test_raising_the_pitch_raises_the_estimate(self, ratio):
        base, base_uv = extract_f0(_sine(220.0))
        shifted, shifted_uv = extract_f0(_sine(220.0 * ratio))
        assert np.median(shifted[shifted_uv == 1]) >= np.median(base[base_uv == 1])

    @pytest.mark.parametrize("freq", [110.0, 440.0])
    def test_other_pitches(self, freq):
        raw, uv = extract_f0(_sine(freq))
        voiced = raw[uv == 1]
        assert uv.mean() > 0.95
        assert np.median(np.abs(voiced - freq)) / freq < 0.01

    def test_silence_is_unvoiced(self):
        raw, uv = extract_f0(AudioClip(np.zeros(4000)))
        assert not uv.any()
        assert not raw.any()

    def test_frequency_range_is_respected(self):
        config = ProsodyConfig(fmin=300.0, fmax=1000.0)
        _, uv = extract_f0(_sine(120.0), config=config)
        assert uv.mean() < 0.05

    def test_length_must_divide_by_hop(self):
        with pytest.raises(ContractError):
            extract_f0(AudioClip(np.zeros(4001)))

    def test_empty_clip(self):
        with pytest.raises(ContractError):
            extract_f0(AudioClip(np.zeros(0)))

    def test_wrong_sample_rate(self):
        with pytest.raises(ConfigurationError):
            extract_f0(AudioClip(np.zeros(1600), sample_rate=16000))


class TestQuantize:
    def test_endpoints_and_unvoiced(self):
        raw = np.array([100.0, 0.0, 150.0, 200.0])
        uv = np.array([1, 0, 1, 1])
        np.testing.assert_array_equal(quantize_f0(raw, uv), [0, 0, 128, F0_BINS - 1])

    def test_flat_contour_maps_to_zero(self):
        assert not quantize_f0(np.full(5, 180.0), np.ones(5)).any()

    def test_all_unvoiced(self):
        assert not quantize_f0(np.zeros(4), np.zeros(4)).any()

    def test_bins_follow_the_raw_order(self, rng):
        raw = rng.uniform(80.0, 400.0, size=200)
        bins = quantize_f0(raw, np.ones(200))
        order = np.argsort(raw)
        assert np.all(np.diff(bins[order]) >= 0)
        assert bins[order[0]] == 0 and bins[order[-1]] == F0_BINS - 1

    def test_misaligned(self):
        with pytest.raises(DimensionError):
            quantize_f0(np.zeros(3), np.zeros(4))


class TestFeatures:
    def test_from_clip(self):
        features = ProsodyFeatures.from_clip(_sine(220.0, seconds=0.2))
        assert features.frames == 120
        assert features.f0_bins.max() < F0_BINS

    def test_aligned_sequences(self):
        with pytest.raises(DimensionError):
            ProsodyFeatures(f0_bins=[0, 1], uv=[1], raw_f0_hz=[100.0])
        with pytest.raises(ContractError):
            ProsodyFeatures(f0_bins=[0], uv=[2], raw_f0_hz=[100.0])
        with pytest.raises(ContractError):
            ProsodyFeatures(f0_bins=[F0_BINS], uv=[1], raw_f0_hz=[100.0])
        with pytest.raises(ContractError):
            ProsodyFeatures(f0_bins=[3], uv=[0], raw_f0_hz=[0.0])

    def test_align_trims_and_pads(self):
        features = ProsodyFeatures(f0_bins=[0, 5, 9], uv=[1, 1, 1], raw_f0_hz=[100.0, 110.0, 120.0])
        assert align_features(features, 2).f0_bins.tolist() == [0, 5]
        padded = align_features(features, 5)
        assert padded.uv.tolist() == [1, 1, 1, 0, 0]
        assert padded.raw_f0_hz[3:].tolist() == [0.0, 0.0]
        with pytest.raises(ContractError):
            align_features(features, -1)

    def test_export_csv(self, tmp_path):
        features = ProsodyFeatures(f0_bins=[0, 255], uv=[1, 1], raw_f0_hz=[100.0, 200.5])
        path = export_prosody_csv(features, tmp_path / "dump" / "prosody.csv")
        with path.open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["frame_index", "raw_f0_hz", "f0_bin", "uv"]
        assert rows[2] == ["1", "200.5000", "255", "1"]


class TestEmbedder:
    def test_shapes_and_vocabulary(self, rng):
        embedder = ProsodyEmbedder(rng, ModelConfig(embedding_dim=6))
        features = ProsodyFeatures.unvoiced(10)
        embeddings = embed_prosody(features, embedder)
        assert embeddings.e_f0.shape == embeddings.e_uv.shape == (10, 6)
        assert embedder.f0_table.params.weights.shape == (F0_BINS, 6)
        assert embedder.uv_table.params.weights.shape == (2, 6)

    def test_lookup_is_differentiable(self, rng):
        from pace.tensor import backward

        embedder = ProsodyEmbedder(rng, ModelConfig(embedding_dim=4))
        features = ProsodyFeatures(f0_bins=[7, 7], uv=[1, 1], raw_f0_hz=[100.0, 100.0])
        out = embedder(features)
        backward(out.e_f0.sum() + out.e_uv.sum())
        grad = embedder.f0_table.params.weights.grad
        np.testing.assert_array_equal(grad[7], np.full(4, 2.0))
        assert np.count_nonzero(grad) == 4

    def test_gradient_reaches_only_the_used_bins(self, rng):
        from pace.tensor import backward

        embedder = ProsodyEmbedder(rng, ModelConfig(embedding_dim=3))
        bins = [3, 9, 3, 200, 9]
        features = ProsodyFeatures(f0_bins=bins, uv=[1] * 5, raw_f0_hz=[120.0] * 5)
        out = embedder(features)
        backward((out.e_f0 * out.e_f0).sum())
        grad = embedder.f0_table.params.weights.grad
        touched = np.flatnonzero(np.abs(grad).sum(axis=1))
        assert touched.tolist() == [3, 9, 200]
