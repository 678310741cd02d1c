"""
Configuration module for PACE.
Loads a TOML document, environment variables and provides settings.
"""
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10 backport
    import tomli as tomllib
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from pace.exceptions import ConfigurationError


class Section(BaseModel):
    """Base for nested config sections; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")


class DataConfig(Section):
    sample_rate: int = Field(default=24000, description="Working sample rate in Hz")
    segment_seconds: float = Field(default=2.0, description="Training crop length in seconds")
    wav_dir: Optional[Path] = Field(
        default=None, description="Optional directory of real WAV clips to ingest"
    )
    timbres: int = Field(default=12, description="Synthetic timbre fingerprints")
    contours: int = Field(default=20, description="Synthetic f0 contours per timbre")
    test_fraction: float = Field(default=0.2, description="Share of contours held out for testing")
    noise_floor: float = Field(default=0.003, description="White-noise amplitude of synthetic clips")
    queue_size: int = Field(default=4, description="Bounded batch queue depth")

    @property
    def segment_samples(self) -> int:
        return int(round(self.sample_rate * self.segment_seconds))


class ModelConfig(Section):
    encoder_widths: List[int] = Field(
        default=[32, 64, 128, 256],
        description="Stem width then one width per stage-1 block (strides 2, 4, 5)",
    )
    embedding_dim: int = Field(default=256, description="Frame / prosody embedding dimension")
    codec_dim: int = Field(default=128, description="RVQ input dimension D'")
    decoder_widths: List[int] = Field(
        default=[256, 128, 64, 32, 16],
        description="Decoder stem width then one width per upsampling block (strides 8, 5, 4, 2)",
    )
    scale_hidden: int = Field(default=64, description="Scale-layer branch convolution width")
    f0_bins: int = Field(default=256, description="f0 embedding vocabulary")
    discriminator_channels: int = Field(default=16, description="STFT discriminator conv width")
    use_scale_layer: bool = Field(default=True, description="Disable for the scale-layer ablation")


class RvqConfig(Section):
    stages: int = Field(default=8, description="Number of residual codebooks")
    codebook_size: int = Field(default=1024, description="Entries per codebook")
    decay: float = Field(default=0.99, description="EMA decay of codebook statistics")
    dead_threshold: float = Field(default=1.0, description="Reseed entries used fewer times than this over the EMA window")
    commitment_weight: float = Field(default=0.25, description="Commitment term weight")


class ProsodyConfig(Section):
    hop: int = Field(default=40, description="Frame shift in samples")
    window: int = Field(default=1024, description="Analysis window in samples")
    fmin: float = Field(default=50.0, description="Tracker f0 floor in Hz")
    fmax: float = Field(default=1000.0, description="Tracker f0 ceiling in Hz")
    threshold: float = Field(default=0.2, description="Cumulative-mean difference voicing threshold")
    silence_rms: float = Field(default=1e-4, description="Frames quieter than this are unvoiced")


class DisentangleConfig(Section):
    hidden: int = Field(default=256, description="Estimator hidden width")
    lr: float = Field(default=1e-4, description="Estimator learning rate")
    fit_steps: int = Field(default=5, description="fit_q_step calls per encoder step")
    frames_per_utterance: int = Field(default=64, description="Frames sampled per utterance for MI")
    logvar_clamp: float = Field(default=10.0, description="Absolute clamp on predicted log-variance")


class LossWeights(Section):
    """Generator loss weights."""

    lambda_mi: float = Field(default=0.01, description="Mutual-information weight")
    lambda_recon_e: float = Field(default=10.0, description="Embedding reconstruction weight")
    lambda_adv: float = Field(default=1.0, description="Adversarial weight")
    lambda_feat: float = Field(default=2.0, description="Feature-matching weight")
    lambda_rec: float = Field(default=1.0, description="Spectral reconstruction weight")
    waveform_l1: float = Field(default=1.0, description="Weight of the time-domain L1 term inside L_rec")

    @field_validator("*")
    @classmethod
    def _nonnegative(cls, value: float) -> float:
        if not value >= 0.0 or value == float("inf"):
            raise ValueError("loss weights must be finite and >= 0")
        return value


LossName = Literal["recon_e", "mi", "adv", "feat", "rec"]

# Stage 1 runs without f0/uv input, stage 2 adds MI, stage 3 optimizes the full objective.
STAGE_LOSSES = {
    0: {"rec"},
    1: {"recon_e"},
    2: {"recon_e", "mi"},
    3: {"recon_e", "mi", "adv", "feat", "rec"},
}


class StageSchedule(Section):
    stage: int = Field(..., ge=0, le=3, description="0 = reference codec, 1..3 = PACE stages")
    steps: int = Field(..., ge=0, description="Optimizer steps")
    learning_rate: float = Field(..., gt=0, description="Adam learning rate")
    batch_size: int = Field(default=4, ge=1, description="Clips per step")
    losses_enabled: List[LossName] = Field(..., description="Loss components active in this stage")
    log_every: int = Field(default=50, ge=1, description="Step interval of progress log lines")

    @model_validator(mode="after")
    def _losses_allowed(self) -> "StageSchedule":
        extra = set(self.losses_enabled) - STAGE_LOSSES[self.stage]
        if extra:
            raise ValueError(f"stage {self.stage} cannot enable {sorted(extra)}")
        return self


class StagesConfig(Section):
    reference: StageSchedule = Field(
        default=StageSchedule(stage=0, steps=2000, learning_rate=3e-4, losses_enabled=["rec"])
    )
    stage1: StageSchedule = Field(
        default=StageSchedule(stage=1, steps=3000, learning_rate=3e-4, losses_enabled=["recon_e"])
    )
    stage2: StageSchedule = Field(
        default=StageSchedule(
            stage=2, steps=1000, learning_rate=3e-4, losses_enabled=["recon_e", "mi"]
        )
    )
    stage3: StageSchedule = Field(
        default=StageSchedule(
            stage=3,
            steps=2000,
            learning_rate=1e-4,
            losses_enabled=["recon_e", "mi", "adv", "feat", "rec"],
        )
    )

    def for_stage(self, stage: int) -> StageSchedule:
        return {0: self.reference, 1: self.stage1, 2: self.stage2, 3: self.stage3}[stage]


class EvalConfig(Section):
    variants: List[Literal["full", "no_mi", "no_scale", "no_recon_e"]] = Field(
        default=["full", "no_mi", "no_scale", "no_recon_e"],
        description="Model variants in the prosody report",
    )
    pairs: int = Field(default=20, description="Held-out (timbre x contour) pairs")
    dump_contours: bool = Field(default=False, description="Write per-pair z-scored contour dumps")


class Settings(BaseSettings):
    """Application settings loaded from a TOML document and environment variables."""

    config: Optional[Path] = Field(default=None, description="TOML document (env PACE_CONFIG)")
    seed: int = Field(default=1234, description="Global RNG seed")
    output_dir: Path = Field(default=Path("runs"), description="Where every command writes")
    precision: Literal["float64", "float32"] = Field(
        default="float32", description="Training dtype; tests use float64"
    )
    log_level: str = Field(default="INFO", description="structlog filtering level")

    data: DataConfig = Field(default_factory=DataConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    rvq: RvqConfig = Field(default_factory=RvqConfig)
    prosody: ProsodyConfig = Field(default_factory=ProsodyConfig)
    disentangle: DisentangleConfig = Field(default_factory=DisentangleConfig)
    losses: LossWeights = Field(default_factory=LossWeights)
    stages: StagesConfig = Field(default_factory=lambda: StagesConfig())
    eval: EvalConfig = Field(default_factory=EvalConfig)

    model_config = SettingsConfigDict(
        env_prefix="PACE_",
        env_nested_delimiter="__",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="forbid",
    )

    @property
    def database_url(self) -> str:
        return f"sqlite:///{self.output_dir / 'registry.db'}"


def full_scale() -> dict:
    """Overrides reproducing the published step counts (360k / 60k / 180k)."""
    return {
        "stages": {
            "stage1": {"stage": 1, "steps": 360_000, "learning_rate": 3e-4,
                       "losses_enabled": ["recon_e"]},
            "stage2": {"stage": 2, "steps": 60_000, "learning_rate": 3e-4,
                       "losses_enabled": ["recon_e", "mi"]},
            "stage3": {"stage": 3, "steps": 180_000, "learning_rate": 1e-4,
                       "losses_enabled": ["recon_e", "mi", "adv", "feat", "rec"]},
        }
    }


def toy() -> dict:
    """Channel widths divided by 4 with small codebooks, for acceptance runs on one core."""
    return {
        "model": {
            "encoder_widths": [8, 16, 32, 64],
            "embedding_dim": 64,
            "codec_dim": 32,
            "decoder_widths": [64, 32, 16, 8, 4],
            "scale_hidden": 16,
            "discriminator_channels": 8,
        },
        "rvq": {"codebook_size": 64},
        "disentangle": {"hidden": 64},
    }


def load_settings(path: Optional[Path] = None, **overrides) -> Settings:
    """
    Build settings from, in priority order: overrides, the TOML document at `path`
    (or PACE_CONFIG), environment, `.env`, defaults.
    """
    try:
        path = path or Settings().config
        document: dict = {}
        if path is not None:
            path = Path(path)
            if not path.is_file():
                raise ConfigurationError(f"config file not found: {path}")
            with path.open("rb") as fh:
                document = tomllib.load(fh)
            document["config"] = path
        document = _merge(document, overrides)
        return Settings(**document)
    except ValidationError as e:
        raise ConfigurationError(f"invalid configuration: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"cannot parse {path}: {e}") from e


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


# Global settings instance
settings = Settings()
