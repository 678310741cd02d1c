from pathlib import Path

import pytest

from pace.config import STAGE_LOSSES, Settings, StageSchedule, full_scale, load_settings, toy
from pace.exceptions import ConfigurationError


def test_tiny_document(tiny_settings, tiny_toml):
    assert tiny_settings.seed == 7
    assert tiny_settings.config == tiny_toml
    assert tiny_settings.data.segment_samples == 1920
    assert tiny_settings.stages.for_stage(2).losses_enabled == ["recon_e", "mi"]
    assert tiny_settings.database_url.endswith("runs/registry.db")


def test_defaults_without_a_document(monkeypatch):
    monkeypatch.delenv("PACE_CONFIG", raising=False)
    settings = load_settings()
    assert settings.config is None
    assert settings.rvq.codebook_size == 1024
    assert settings.model.encoder_widths == [32, 64, 128, 256]
    assert settings.stages.stage3.learning_rate == pytest.approx(1e-4)


@pytest.mark.parametrize(
    "document",
    [
        "colour = 'blue'\n",
        "[rvq]\ncodebooks = 3\n",
        "[stages.stage1]\nstage = 1\nsteps = 1\nlearning_rate = 1e-3\nlosses_enabled = ['mi']\n",
        "[stages.stage2]\nstage = 2\nsteps = -1\nlearning_rate = 1e-3\nlosses_enabled = ['mi']\n",
        "[losses]\nlambda_mi = -0.5\n",
        "[eval]\nvariants = ['bogus']\n",
        "precision = 'float16'\n",
        "[data\n",
    ],
)
def test_rejected_documents(tmp_path, document):
    path = tmp_path / "pace.toml"
    path.write_text(document)
    with pytest.raises(ConfigurationError):
        load_settings(path)


def test_missing_document(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        load_settings(tmp_path / "absent.toml")


def test_config_path_from_environment(monkeypatch, tiny_toml):
    monkeypatch.setenv("PACE_CONFIG", str(tiny_toml))
    assert load_settings().seed == 7


def test_environment_overrides(monkeypatch):
    monkeypatch.delenv("PACE_CONFIG", raising=False)
    monkeypatch.setenv("PACE_SEED", "99")
    monkeypatch.setenv("PACE_RVQ__STAGES", "4")
    settings = load_settings()
    assert settings.seed == 99
    assert settings.rvq.stages == 4


def test_overrides_win_over_the_document(tiny_toml, tmp_path):
    settings = load_settings(tiny_toml, seed=11, rvq={"codebook_size": 8})
    assert settings.seed == 11
    assert settings.rvq.codebook_size == 8
    assert settings.rvq.stages == 8


def test_stage_losses():
    for stage, allowed in STAGE_LOSSES.items():
        schedule = StageSchedule(stage=stage, steps=1, learning_rate=1e-3, losses_enabled=sorted(allowed))
        assert set(schedule.losses_enabled) == allowed
    with pytest.raises(ValueError):
        StageSchedule(stage=0, steps=1, learning_rate=1e-3, losses_enabled=["recon_e"])
    with pytest.raises(ValueError):
        StageSchedule(stage=1, steps=1, learning_rate=0.0, losses_enabled=["recon_e"])


def test_presets(tiny_toml):
    small = load_settings(tiny_toml, **toy())
    assert small.model.embedding_dim == 64
    assert small.rvq.codebook_size == 64
    assert small.rvq.stages == 8

    published = load_settings(None, **full_scale())
    steps = [published.stages.for_stage(k).steps for k in (1, 2, 3)]
    assert steps == [360_000, 60_000, 180_000]
    assert published.stages.reference.steps == Settings().stages.reference.steps


def test_example_document_loads():
    example = Path(__file__).resolve().parents[1] / "pace.example.toml"
    settings = load_settings(example)
    assert settings.eval.variants == ["full", "no_mi", "no_scale", "no_recon_e"]
    assert settings.data.wav_dir is None
