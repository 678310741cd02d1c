import csv

import numpy as np
import pytest

from pace.eval import F0Contour, ProsodyReport, dump_contour, f0_scaled_distance, zscore
from pace.exceptions import ContractError, UndefinedDistanceError
from pace.prosody import ProsodyFeatures


def _contour(rng, n=60):
    return F0Contour(120.0 + 40.0 * rng.random(n))


class TestDistance:
    def test_identity(self, rng):
        a = _contour(rng)
        assert f0_scaled_distance(a, a) == 0.0

    def test_affine_invariance(self, rng):
        a, b = _contour(rng), _contour(rng)
        shifted = F0Contour(2.5 * a.values + 30.0)
        assert f0_scaled_distance(shifted, b) == pytest.approx(f0_scaled_distance(a, b), abs=1e-9)
        assert f0_scaled_distance(a, shifted) == pytest.approx(0.0, abs=1e-9)

    def test_symmetry(self, rng):
        a, b = _contour(rng, 40), _contour(rng, 70)
        assert f0_scaled_distance(a, b) == pytest.approx(f0_scaled_distance(b, a))

    def test_ramp_against_reversed_ramp(self):
        ramp = np.linspace(100.0, 200.0, 50)
        direct = np.sqrt(np.mean((zscore(ramp) - zscore(ramp[::-1])) ** 2))
        distance = f0_scaled_distance(F0Contour(ramp), F0Contour(ramp[::-1]))
        assert distance == pytest.approx(direct)
        assert distance == pytest.approx(2.0)

    def test_unvoiced_frames_are_dropped(self):
        ramp = np.linspace(100.0, 200.0, 20)
        gappy = ramp.copy()
        gappy[::3] = 0.0
        assert f0_scaled_distance(F0Contour(ramp[gappy > 0]), F0Contour(gappy)) == 0.0

    def test_shared_voicing_on_equal_lengths(self):
        a = F0Contour([100.0, 150.0, 200.0, 300.0], uv=[1, 1, 1, 0])
        b = F0Contour([100.0, 150.0, 200.0, 900.0], uv=[1, 1, 1, 1])
        assert f0_scaled_distance(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_fully_unvoiced_is_undefined(self, rng):
        with pytest.raises(UndefinedDistanceError):
            f0_scaled_distance(F0Contour(np.zeros(10)), _contour(rng))

    def test_flat_contour_compares_as_zeros(self):
        flat = F0Contour(np.full(10, 150.0))
        assert f0_scaled_distance(flat, flat) == 0.0

    def test_rejects_bad_values(self):
        with pytest.raises(ContractError):
            F0Contour([100.0, -1.0])
        with pytest.raises(ContractError):
            F0Contour([100.0, np.nan])

    def test_from_features(self):
        features = ProsodyFeatures(f0_bins=[0, 0, 255], uv=[0, 1, 1], raw_f0_hz=[0.0, 100.0, 200.0])
        contour = F0Contour.from_features(features)
        assert contour.voiced.tolist() == [False, True, True]


class TestReport:
    def test_csv_with_published_annotation(self, tmp_path):
        report = ProsodyReport()
        report.add("full", "source", [0.5])
        report.add("custom", "target-prompt", [1.0, 2.0])
        with report.to_csv(tmp_path / "report.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0] == {
            "model_variant": "full",
            "prosody_source": "source",
            "mean_distance": "0.500000",
            "pair_count": "1",
            "published_distance": "2.8239",
            "note": "published value; not reproducible at desk scale",
        }
        assert rows[1]["mean_distance"] == "1.500000"
        assert rows[1]["published_distance"] == rows[1]["note"] == ""

    def test_lookup(self):
        report = ProsodyReport()
        report.add("no_mi", "source", [1.0, 3.0])
        assert report.distance("no_mi", "source") == 2.0
        with pytest.raises(KeyError):
            report.distance("no_mi", "target-prompt")

    def test_empty_row(self):
        with pytest.raises(ContractError):
            ProsodyReport().add("full", "source", [])


def test_dump_contour(tmp_path):
    path = dump_contour(tmp_path / "dumps" / "pair.txt", F0Contour([0.0, 100.0, 200.0, 0.0, 300.0]))
    data = np.loadtxt(path)
    assert path.read_text().startswith("# frame z_f0")
    np.testing.assert_array_equal(data[:, 0], [1, 2, 4])
    np.testing.assert_allclose(data[:, 1], zscore(np.array([100.0, 200.0, 300.0])), atol=1e-6)
