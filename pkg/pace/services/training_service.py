"""
Service layer for training: the reference codec and the three PACE stages.

Stage 1 trains the encoders against the reference embeddings with no prosody
input. Stage 2 adds the prosody path and the mutual-information penalty while
only the stage-1 encoder moves. Stage 3 optimizes the full generator objective
against a discriminator. The quantizer codebooks follow their EMA updates in
every stage.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from pace.codec import PaceCodec, ReferenceCodec, parameter_fingerprint, rvq_quantize
from pace.config import LossWeights, ModelConfig, RvqConfig, Settings, StageSchedule
from pace.disentangle import ClubEstimator, fit_q_step, frame_batch, mi_loss
from pace.exceptions import ConfigurationError, DependencyError, StateError
from pace.logger import get_logger
from pace.losses import (
    Discriminator,
    LossParts,
    adversarial_losses,
    commitment_loss,
    recon_embedding_loss,
    reconstruction_loss,
    total_generator_loss,
)
from pace.prosody import ProsodyFeatures
from pace.services.batch_producer import BatchProducer
from pace.services.checkpoint_service import (
    REFERENCE_VARIANT,
    CheckpointData,
    RegistryService,
    checkpoint_path,
    prefixed,
    write_pack,
)
from pace.tensor import Adam, Tensor, backward
from pace.types import AudioClip, AudioCodes, CodecEmbedding
from pace.utils.csv_log import CsvLog

logger = get_logger(__name__)

VARIANTS = ("full", "no_mi", "no_scale", "no_recon_e")
SKIPPED_STAGES: Dict[str, set] = {"no_mi": {2}, "no_recon_e": {1}}


def variant_weights(variant: str, weights: LossWeights) -> LossWeights:
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown variant {variant!r}; choose one of {', '.join(VARIANTS)}")
    if variant == "no_mi":
        return weights.model_copy(update={"lambda_mi": 0.0})
    if variant == "no_recon_e":
        return weights.model_copy(update={"lambda_recon_e": 0.0})
    return weights


def _clip_codes(codes: List[AudioCodes]) -> AudioCodes:
    return AudioCodes(np.concatenate([c.codes for c in codes], axis=0), codebook_size=codes[0].codebook_size)


def _seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2**31 - 1))


# --- reference codec ---


@dataclass
class TrainedReference:
    codec: ReferenceCodec
    model: ModelConfig
    rvq: RvqConfig
    steps: int
    history: List[dict] = field(default_factory=list)
    rng_state: dict = field(default_factory=dict)

    @property
    def fingerprint(self) -> str:
        return self.codec.fingerprint()

    def freeze(self) -> "TrainedReference":
        for p in self.codec.parameters():
            p.requires_grad = False
        self.codec.eval()
        return self


def train_reference(
    clips: Sequence[AudioClip],
    config: Settings,
    log: Optional[CsvLog] = None,
) -> TrainedReference:
    """
    Plain codec trained with the spectral and commitment losses; codebooks are
    seeded by k-means++ from the first batch and then follow EMA updates.
    """
    if len(clips) == 0:
        raise ConfigurationError("cannot train the reference codec on an empty dataset")
    schedule = config.stages.reference
    rng = np.random.default_rng([config.seed, 0])
    codec = ReferenceCodec(rng, config.model, config.rvq)
    opt = Adam(codec.parameters(), lr=schedule.learning_rate)
    history: List[dict] = []

    with BatchProducer(clips, schedule.batch_size, schedule.steps, _seed(rng),
                       config.data.queue_size, with_features=False) as producer:
        for batch in producer:
            if not codec.quantizer.is_initialized:
                data = np.concatenate([codec.encode(c).values.data for c in batch.clips], axis=0)
                codec.quantizer.initialize(data, rng)

            rec, embeddings, codes = None, [], []
            for clip in batch.clips:
                emb, quant, x_hat = codec.reconstruct(clip)
                term = reconstruction_loss(clip, x_hat, config.losses.waveform_l1) + commitment_loss(
                    quant, config.rvq.commitment_weight
                )
                rec = term if rec is None else rec + term
                embeddings.append(emb.values.data)
                codes.append(quant.codes)
            total = rec * (1.0 / len(batch.clips))

            opt.zero_grad()
            backward(total)
            opt.step()
            reseeded = codec.quantizer.update(np.concatenate(embeddings, axis=0), _clip_codes(codes), rng)

            row = {"step": batch.step, "l_rec": total.item(), "total": total.item()}
            history.append(row)
            if log is not None:
                log.append(row)
            if batch.step % schedule.log_every == 0:
                logger.info("Reference progress", step=batch.step, l_rec=row["l_rec"], reseeded=reseeded)

    logger.info("Reference codec trained", steps=schedule.steps)
    return TrainedReference(
        codec=codec,
        model=config.model,
        rvq=config.rvq,
        steps=schedule.steps,
        history=history,
        rng_state=rng.bit_generator.state,
    ).freeze()


def reference_checkpoint(reference: TrainedReference) -> CheckpointData:
    return CheckpointData(
        stage=0,
        variant=REFERENCE_VARIANT,
        steps=reference.steps,
        tensors=prefixed("reference", reference.codec.state_dict()),
        rng_state=reference.rng_state,
        loss_history=reference.history,
        meta={
            "fingerprint": reference.fingerprint,
            "model": reference.model.model_dump(mode="json"),
            "rvq": reference.rvq.model_dump(mode="json"),
        },
    )


def restore_reference(data: CheckpointData) -> TrainedReference:
    model = ModelConfig(**data.meta["model"])
    rvq = RvqConfig(**data.meta["rvq"])
    codec = ReferenceCodec(np.random.default_rng(0), model, rvq)
    codec.load_state_dict(data.section("reference"))
    reference = TrainedReference(
        codec=codec,
        model=model,
        rvq=rvq,
        steps=data.steps,
        history=data.loss_history,
        rng_state=data.rng_state,
    ).freeze()
    if reference.fingerprint != data.meta["fingerprint"]:
        raise StateError("reference codec parameters do not match the recorded fingerprint")
    return reference


# --- PACE stages ---


@dataclass
class TrainingState:
    """Everything one variant's stage loop mutates."""

    variant: str
    codec: PaceCodec
    reference: TrainedReference
    f0_est: ClubEstimator
    uv_est: ClubEstimator
    discriminator: Discriminator
    rng: np.random.Generator
    stage: int = 0
    steps: int = 0
    history: List[dict] = field(default_factory=list)

    @classmethod
    def create(cls, variant: str, reference: TrainedReference, config: Settings) -> "TrainingState":
        variant_weights(variant, config.losses)
        rng = np.random.default_rng([config.seed, 1 + VARIANTS.index(variant)])
        model = reference.model
        codec = PaceCodec(rng, model, reference.rvq, use_scale_layer=variant != "no_scale" and model.use_scale_layer)
        codec.adopt_reference(reference.codec)
        return cls(
            variant=variant,
            codec=codec,
            reference=reference,
            f0_est=ClubEstimator(rng, model.embedding_dim, "f0", config.disentangle),
            uv_est=ClubEstimator(rng, model.embedding_dim, "uv", config.disentangle),
            discriminator=Discriminator(rng, model),
            rng=rng,
        )

    def to_checkpoint(self) -> CheckpointData:
        tensors = {}
        tensors.update(prefixed("codec", self.codec.state_dict()))
        tensors.update(prefixed("f0_est", self.f0_est.state_dict()))
        tensors.update(prefixed("uv_est", self.uv_est.state_dict()))
        tensors.update(prefixed("disc", self.discriminator.state_dict()))
        return CheckpointData(
            stage=self.stage,
            variant=self.variant,
            steps=self.steps,
            tensors=tensors,
            rng_state=self.rng.bit_generator.state,
            loss_history=self.history,
            meta={
                "reference_fingerprint": self.reference.fingerprint,
                "use_scale_layer": self.codec.use_scale_layer,
            },
        )

    @classmethod
    def restore(cls, data: CheckpointData, reference: TrainedReference, config: Settings) -> "TrainingState":
        if data.meta["reference_fingerprint"] != reference.fingerprint:
            raise DependencyError(
                f"{data.variant} stage {data.stage} was trained against a different reference codec",
                stage=0,
            )
        state = cls.create(data.variant, reference, config)
        state.codec.use_scale_layer = data.meta["use_scale_layer"]
        state.codec.load_state_dict(data.section("codec"))
        state.f0_est.load_state_dict(data.section("f0_est"))
        state.uv_est.load_state_dict(data.section("uv_est"))
        state.discriminator.load_state_dict(data.section("disc"))
        state.rng.bit_generator.state = data.rng_state
        state.stage = data.stage
        state.steps = data.steps
        state.history = list(data.loss_history)
        return state


def _reference_targets(reference: TrainedReference, clip: AudioClip):
    with reference.codec.frozen():
        return reference.codec.encode(clip)


def _mi_terms(state: TrainingState, forwards, config: Settings, fit: bool) -> Tuple[Tensor, Dict[str, float]]:
    """L_MI over a frame batch drawn from `forwards`, after `fit_steps` estimator updates when `fit`."""
    x, pros = frame_batch(
        state.rng,
        [f.frame.values for f in forwards],
        [f.prosody for f in forwards],
        config.disentangle.frames_per_utterance,
    )
    nll: Dict[str, float] = {}
    if fit:
        for _ in range(config.disentangle.fit_steps):
            nll["q_nll_f0"] = fit_q_step(x, pros.e_f0, state.f0_est, config.disentangle.lr)
            nll["q_nll_uv"] = fit_q_step(x, pros.e_uv, state.uv_est, config.disentangle.lr)
    return mi_loss(x, pros, state.f0_est, state.uv_est), nll


def run_stage(
    schedule: StageSchedule,
    state: TrainingState,
    clips: Sequence[AudioClip],
    config: Settings,
    log: Optional[CsvLog] = None,
) -> CheckpointData:
    """
    Advance `state` through one stage. Loss components outside the schedule's
    enabled set are never added to the objective. A stage the variant skips still
    advances the stage tag, with zero steps.
    """
    stage = schedule.stage
    if stage not in (1, 2, 3):
        raise ConfigurationError(f"PACE stages are 1..3, got {stage}")
    if state.stage != stage - 1:
        raise DependencyError(
            f"stage {stage} needs the stage {stage - 1} checkpoint of variant {state.variant}",
            stage=stage - 1,
        )
    if len(clips) == 0:
        raise ConfigurationError("cannot train on an empty dataset")

    weights = variant_weights(state.variant, config.losses)
    before = state.reference.fingerprint

    if stage in SKIPPED_STAGES.get(state.variant, set()):
        logger.info("Stage skipped for variant", stage=stage, variant=state.variant)
        state.stage = stage
        return state.to_checkpoint()

    enabled = {name for name in schedule.losses_enabled if getattr(weights, f"lambda_{name}") > 0}
    codec = state.codec
    opt = Adam(codec.stage_parameters(stage), lr=schedule.learning_rate)
    disc_opt = Adam(state.discriminator.parameters(), lr=schedule.learning_rate) if stage == 3 else None

    with BatchProducer(clips, schedule.batch_size, schedule.steps, _seed(state.rng),
                       config.data.queue_size, with_features=stage >= 2,
                       prosody=config.prosody) as producer:
        for batch in producer:
            row = _train_step(state, batch.clips, batch.features, stage, enabled, weights,
                              opt, disc_opt, config)
            row["step"] = batch.step
            state.history.append({"stage": stage, **row})
            if log is not None:
                log.append(row)
            if batch.step % schedule.log_every == 0:
                logger.info("Training progress", stage=stage, variant=state.variant, **row)

    if state.reference.fingerprint != before:
        raise StateError("reference codec parameters changed during PACE training")
    state.stage = stage
    state.steps += schedule.steps
    logger.info("Stage finished", stage=stage, variant=state.variant, steps=schedule.steps)
    return state.to_checkpoint()


def _train_step(
    state: TrainingState,
    clips: List[AudioClip],
    features: List[Optional[ProsodyFeatures]],
    stage: int,
    enabled: set,
    weights: LossWeights,
    opt: Adam,
    disc_opt: Optional[Adam],
    config: Settings,
) -> dict:
    codec = state.codec
    scale = 1.0 / len(clips)
    forwards, quants, recon_e, rec, adv, feat, disc = [], [], None, None, None, None, None

    for clip, feats in zip(clips, features):
        if stage == 3:
            fwd, quant, x_hat = codec.reconstruct(clip, feats)
            quants.append(quant.codes)
        else:
            fwd = codec.embed(clip, feats if stage >= 2 else None)
            detached = CodecEmbedding(Tensor(fwd.scaled.values.data), fwd.scaled.variant)
            codes, _ = rvq_quantize(codec.quantizer, detached)
            quants.append(codes)
        forwards.append(fwd)

        if "recon_e" in enabled:
            term = recon_embedding_loss(fwd.scaled, _reference_targets(state.reference, clip))
            recon_e = term if recon_e is None else recon_e + term
        if stage == 3:
            if "rec" in enabled:
                term = reconstruction_loss(clip, x_hat, config.losses.waveform_l1) + commitment_loss(
                    quant, config.rvq.commitment_weight
                )
                rec = term if rec is None else rec + term
            if "adv" in enabled or "feat" in enabled:
                parts = adversarial_losses(state.discriminator, clip, x_hat)
                adv = parts.l_adv if adv is None else adv + parts.l_adv
                feat = parts.l_feat if feat is None else feat + parts.l_feat
                disc = parts.l_disc if disc is None else disc + parts.l_disc

    row: Dict[str, float] = {}
    mi = None
    if "mi" in enabled:
        mi, nll = _mi_terms(state, forwards, config, fit=True)
        row.update(nll)

    def mean(t: Optional[Tensor]) -> Optional[Tensor]:
        return None if t is None else t * scale

    parts = LossParts(
        mi=mi,
        recon_e=mean(recon_e),
        adv=mean(adv) if "adv" in enabled else None,
        feat=mean(feat) if "feat" in enabled else None,
        rec=mean(rec),
    )
    total = total_generator_loss(parts, weights)
    codec.zero_grad()
    state.f0_est.zero_grad()
    state.uv_est.zero_grad()
    if total.requires_grad:
        backward(total)
        opt.step()

    if disc is not None and disc_opt is not None:
        disc_opt.zero_grad()
        d_loss = disc * scale
        backward(d_loss)
        disc_opt.step()
        row["l_disc"] = d_loss.item()

    data = np.concatenate([f.scaled.values.data for f in forwards], axis=0)
    codec.quantizer.update(data, _clip_codes(quants), state.rng)

    values = parts.values()
    row.update({f"l_{name}": value for name, value in values.items()})
    row["total"] = total.item()
    return row


def measure_mi(state: TrainingState, clips: Sequence[AudioClip], config: Settings, seed: int) -> float:
    """L_MI of the current encoder on `clips`, with a fixed frame draw and no estimator update."""
    features = [ProsodyFeatures.from_clip(c, config.prosody) for c in clips]
    forwards = [state.codec.embed(c, f) for c, f in zip(clips, features)]
    saved = state.rng
    state.rng = np.random.default_rng(seed)
    try:
        return _mi_terms(state, forwards, config, fit=False)[0].item()
    finally:
        state.rng = saved


# --- persistence ---


class TrainingService:
    """Runs training commands and persists their checkpoints through the registry."""

    def __init__(self, config: Settings, registry: RegistryService, run_id: Optional[str] = None):
        self.config = config
        self.registry = registry
        self.run_id = run_id

    @property
    def output_dir(self) -> Path:
        return Path(self.config.output_dir)

    def _log(self, name: str) -> CsvLog:
        return CsvLog(self.output_dir / "logs" / f"{name}.csv")

    def load_reference(self) -> TrainedReference:
        return restore_reference(self.registry.require_checkpoint(REFERENCE_VARIANT, 0))

    def load_state(self, variant: str, stage: int) -> TrainingState:
        reference = self.load_reference()
        if stage == 0:
            return TrainingState.create(variant, reference, self.config)
        return TrainingState.restore(self.registry.require_checkpoint(variant, stage), reference, self.config)

    def train_reference(self, clips: Sequence[AudioClip]) -> Path:
        reference = train_reference(clips, self.config, self._log("reference"))
        data = reference_checkpoint(reference)
        path = write_pack(checkpoint_path(self.output_dir, REFERENCE_VARIANT, 0), data)
        self.registry.record_checkpoint(path, data, reference.fingerprint, self.run_id)
        return path

    def train_stage(self, stage: int, variant: str, clips: Sequence[AudioClip]) -> Path:
        state = self.load_state(variant, stage - 1)
        schedule = self.config.stages.for_stage(stage)
        try:
            data = run_stage(schedule, state, clips, self.config, self._log(f"{variant}_stage{stage}"))
        except Exception as e:
            logger.error("Stage failed", stage=stage, variant=variant, error=str(e))
            raise
        path = write_pack(checkpoint_path(self.output_dir, variant, stage), data)
        self.registry.record_checkpoint(path, data, parameter_fingerprint(state.codec), self.run_id)
        return path
