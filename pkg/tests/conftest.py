"""
Shared fixtures: a tiny model configuration, float64 tensors and the --runslow switch.
"""
from pathlib import Path

import numpy as np
import pytest

from pace.config import Settings, load_settings
from pace.database import close_db
from pace.tensor import set_default_dtype

TINY_TOML = """
seed = 7
precision = "float64"
log_level = "WARNING"

[data]
segment_seconds = 0.08
timbres = 2
contours = 5
test_fraction = 0.4
noise_floor = 0.0
queue_size = 2

[model]
encoder_widths = [4, 4, 8, 8]
embedding_dim = 8
codec_dim = 8
decoder_widths = [8, 8, 4, 4, 4]
scale_hidden = 4
discriminator_channels = 2

[rvq]
stages = 8
codebook_size = 16

[disentangle]
hidden = 8
frames_per_utterance = 16

[stages.reference]
stage = 0
steps = 2
learning_rate = 1e-3
batch_size = 2
losses_enabled = ["rec"]

[stages.stage1]
stage = 1
steps = 2
learning_rate = 1e-3
batch_size = 2
losses_enabled = ["recon_e"]

[stages.stage2]
stage = 2
steps = 2
learning_rate = 1e-3
batch_size = 2
losses_enabled = ["recon_e", "mi"]

[stages.stage3]
stage = 3
steps = 2
learning_rate = 1e-3
batch_size = 2
losses_enabled = ["recon_e", "mi", "adv", "feat", "rec"]

[eval]
variants = ["full"]
pairs = 2
"""


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow training tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def float64():
    set_default_dtype("float64")
    yield
    set_default_dtype("float64")


@pytest.fixture(autouse=True)
def fresh_registry():
    yield
    close_db()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def tiny_toml(tmp_path: Path) -> Path:
    path = tmp_path / "pace.toml"
    path.write_text(TINY_TOML)
    return path


@pytest.fixture
def tiny_settings(tiny_toml: Path, tmp_path: Path) -> Settings:
    return load_settings(tiny_toml, output_dir=tmp_path / "runs")
