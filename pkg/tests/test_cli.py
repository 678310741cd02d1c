import csv

import pytest

from pace.cli import main
from pace.database import get_session
from pace.database.models import RunStatus
from pace.services.checkpoint_service import RegistryService


@pytest.fixture
def pace(tiny_toml, tmp_path):
    out = tmp_path / "runs"

    def run(*argv, output_dir=out):
        return main(["--config", str(tiny_toml), "--output-dir", str(output_dir), *argv])

    run.out = out
    return run


class TestExitCodes:
    def test_missing_stage_flag_is_a_usage_error(self, pace, capsys):
        assert pace("train") == 1
        err = capsys.readouterr().err
        assert "--stage" in err and "valid forms" in err

    def test_eval_needs_a_mode(self, pace, capsys):
        assert pace("eval") == 1
        assert "--report" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text("[rvq]\ncodebooks = 3\n")
        assert main(["--config", str(path), "--output-dir", str(tmp_path / "runs"), "synth"]) == 2
        assert "invalid configuration" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert main(["--config", str(tmp_path / "absent.toml"), "synth"]) == 2

    def test_locked_output_dir(self, pace, capsys):
        pace.out.mkdir(parents=True)
        (pace.out / ".pace.lock").write_text("123")
        assert pace("synth") == 4
        assert "in use" in capsys.readouterr().err
        assert (pace.out / ".pace.lock").exists()

    def test_missing_input_file(self, pace, tmp_path, capsys):
        assert pace("codes", "encode", str(tmp_path / "missing.wav")) == 3
        assert "does not exist" in capsys.readouterr().err

    def test_stage_order_is_enforced(self, pace, capsys):
        assert pace("synth") == 0
        assert pace("train", "--stage", "1") == 3
        assert "reference codec" in capsys.readouterr().err
        assert pace("train-ref") == 0
        assert pace("train", "--stage", "2") == 3
        assert "stage 1" in capsys.readouterr().err

    def test_failed_run_is_recorded(self, pace, tiny_settings):
        assert pace("synth") == 0
        assert pace("train", "--stage", "3", "--variant", "no_mi") == 3
        with get_session(tiny_settings.database_url) as session:
            runs = RegistryService(session).runs("train")
            assert [(r.status, r.variant) for r in runs] == [(RunStatus.FAILED.value, "no_mi")]
        assert not (pace.out / ".pace.lock").exists()


def _full_pipeline(pace, tmp_path, output_dir):
    steps = [
        ("synth", "--export-prosody"),
        ("train-ref",),
        ("train", "--stage", "1"),
        ("train", "--stage", "2"),
        ("train", "--stage", "3"),
    ]
    for argv in steps:
        assert pace(*argv, output_dir=output_dir) == 0, argv
    return output_dir / "corpus"


def test_pipeline_end_to_end(pace, tmp_path, capsys):
    corpus = _full_pipeline(pace, tmp_path, pace.out)
    assert (corpus / "manifest.csv").is_file()
    assert (corpus / "prosody" / "clip_0000.csv").is_file()
    assert (pace.out / "checkpoints" / "reference.pack").is_file()
    assert (pace.out / "checkpoints" / "full_stage3.pack").is_file()
    capsys.readouterr()

    target, prompt = corpus / "clip_0000.wav", corpus / "clip_0003.wav"
    assert pace("infer", "--target", str(target), "--prosody", str(prompt)) == 0
    assert (pace.out / "out.wav").is_file()
    assert capsys.readouterr().out.strip() == str(pace.out / "out.wav")

    codes = tmp_path / "clip.codes"
    assert pace("codes", "encode", str(target), "--out", str(codes)) == 0
    assert pace("codes", "decode", str(codes), "--out", str(tmp_path / "clip.wav")) == 0
    assert (tmp_path / "clip.wav").is_file()
    assert pace("codes", "encode", str(codes)) == 1

    assert pace("eval", "--report", "--compare") == 0
    with (pace.out / "report.csv").open() as fh:
        header = next(csv.reader(fh))
    assert header == [
        "model_variant", "prosody_source", "mean_distance", "pair_count", "published_distance", "note",
    ]
    with (pace.out / "codec_comparison.csv").open() as fh:
        row = next(csv.DictReader(fh))
    assert row["variant"] == "full" and row["clips"] == "4"


@pytest.mark.slow
def test_same_seed_same_report(pace, tmp_path):
    reports = []
    for name in ("first", "second"):
        out = tmp_path / name
        _full_pipeline(pace, tmp_path, out)
        assert pace("eval", "--report", output_dir=out) == 0
        reports.append((out / "report.csv").read_bytes())
    assert reports[0] == reports[1]
