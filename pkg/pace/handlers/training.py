"""
Handler for training commands (reference codec and PACE stages).
"""
import argparse
from pathlib import Path
from typing import Any, Dict

from pace.config import Settings
from pace.exceptions import ConfigurationError
from pace.handlers.router import Router, arg
from pace.logger import get_logger
from pace.services.dataset_service import load_corpus
from pace.services.training_service import VARIANTS, TrainingService

logger = get_logger(__name__)

router = Router()


def _train_clips(config: Settings) -> list:
    clips = load_corpus(Path(config.output_dir) / "corpus").split("train").clips
    if not clips:
        raise ConfigurationError("the corpus has no training clips")
    return clips


@router.command("train-ref", "train the reference codec that produces embedding targets")
def cmd_train_reference(args: argparse.Namespace, data: Dict[str, Any]) -> int:
    config: Settings = data["config"]
    service = TrainingService(config, data["registry"], data["run_id"])
    path = service.train_reference(_train_clips(config))
    print(path)
    return 0


@router.command(
    "train",
    "run one PACE training stage",
    arg("--stage", type=int, choices=(1, 2, 3), required=True, help="stage to run"),
    arg("--variant", choices=VARIANTS, default="full", help="model variant"),
    usage="train --stage {1,2,3} [--variant VARIANT]",
)
def cmd_train(args: argparse.Namespace, data: Dict[str, Any]) -> int:
    config: Settings = data["config"]
    service = TrainingService(config, data["registry"], data["run_id"])
    path = service.train_stage(args.stage, args.variant, _train_clips(config))
    print(path)
    return 0
