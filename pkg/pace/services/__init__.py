"""
Pipeline services: corpus, training, checkpoints, inference and evaluation.
"""
from pace.services.batch_producer import Batch, BatchProducer
from pace.services.checkpoint_service import (
    CheckpointData,
    RegistryService,
    checkpoint_path,
    read_pack,
    write_pack,
)
from pace.services.dataset_service import (
    Corpus,
    CorpusItem,
    SyntheticSpec,
    build_corpus,
    generate_synthetic_dataset,
    load_corpus,
    save_corpus,
)
from pace.services.evaluation_service import (
    EvaluationService,
    codec_comparison,
    matched_rate,
    prosody_transfer_report,
    transfer_pairs,
)
from pace.services.inference_service import InferenceService, prosody_swap_inference
from pace.services.training_service import (
    VARIANTS,
    TrainedReference,
    TrainingService,
    TrainingState,
    measure_mi,
    run_stage,
    train_reference,
)

__all__ = [
    "Batch",
    "BatchProducer",
    "CheckpointData",
    "RegistryService",
    "checkpoint_path",
    "read_pack",
    "write_pack",
    "Corpus",
    "CorpusItem",
    "SyntheticSpec",
    "build_corpus",
    "generate_synthetic_dataset",
    "load_corpus",
    "save_corpus",
    "EvaluationService",
    "codec_comparison",
    "matched_rate",
    "prosody_transfer_report",
    "transfer_pairs",
    "InferenceService",
    "prosody_swap_inference",
    "VARIANTS",
    "TrainedReference",
    "TrainingService",
    "TrainingState",
    "measure_mi",
    "run_stage",
    "train_reference",
]
