"""
Handler for corpus commands.
"""
import argparse
from pathlib import Path
from typing import Any, Dict

from pace.config import Settings
from pace.handlers.router import Router, arg
from pace.logger import get_logger
from pace.prosody import ProsodyFeatures, export_prosody_csv
from pace.services.dataset_service import build_corpus, save_corpus

logger = get_logger(__name__)

router = Router()


@router.command(
    "synth",
    "generate the synthetic corpus (plus any WAVs under data.wav_dir)",
    arg("--export-prosody", action="store_true", help="also write per-clip prosody CSVs"),
)
def cmd_synth(args: argparse.Namespace, data: Dict[str, Any]) -> int:
    config: Settings = data["config"]
    corpus = build_corpus(config.data, config.seed)
    directory = save_corpus(corpus, Path(config.output_dir) / "corpus")
    if args.export_prosody:
        for i, item in enumerate(corpus.items):
            export_prosody_csv(
                ProsodyFeatures.from_clip(item.clip, config.prosody),
                directory / "prosody" / f"clip_{i:04d}.csv",
            )
    logger.info(
        "Corpus ready",
        directory=str(directory),
        train=len(corpus.split("train")),
        test=len(corpus.split("test")),
    )
    print(directory)
    return 0
