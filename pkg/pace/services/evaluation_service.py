"""
Service layer for evaluation: the prosody transfer report and the codec
round-trip comparison.
"""
import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from pace.config import EvalConfig, ProsodyConfig, Settings
from pace.eval import F0Contour, ProsodyReport, dump_contour, f0_scaled_distance
from pace.exceptions import ContractError, UndefinedDistanceError
from pace.logger import get_logger
from pace.losses import snr_db
from pace.prosody import ProsodyFeatures
from pace.services.checkpoint_service import RegistryService
from pace.services.dataset_service import Corpus, CorpusItem, load_corpus
from pace.services.inference_service import decode_codes, encode_clip, prosody_swap_inference
from pace.services.training_service import TrainedReference, TrainingService, TrainingState

logger = get_logger(__name__)

SCENARIOS = ("source", "target-prompt")


@dataclass
class TransferPair:
    """One conversion: content and timbre from `target`, prosody from `prompt`."""

    target: int
    prompt: int
    mismatched: int


def _contour(clip, config: Optional[ProsodyConfig]) -> F0Contour:
    return F0Contour.from_features(ProsodyFeatures.from_clip(clip, config))


def _other(items: Sequence[CorpusItem], start: int, avoid: Sequence[int]) -> int:
    """
    First item after `start` (cyclically) sharing neither timbre nor contour with
    any of `avoid`; failing that, one whose contour differs from all of them, and
    failing that, one whose contour differs from the last of them.
    """
    n = len(items)
    candidates = [(start + step) % n for step in range(1, n)]
    rules = (
        lambda j: all(items[j].timbre != items[k].timbre and items[j].contour != items[k].contour for k in avoid),
        lambda j: all(items[j].contour != items[k].contour for k in avoid),
        lambda j: items[j].contour != items[avoid[-1]].contour,
    )
    for rule in rules:
        for j in candidates:
            if rule(j):
                return j
    raise ContractError("the test set needs at least two distinct contours")


def transfer_pairs(testset: Corpus, scenario: str, limit: int) -> List[TransferPair]:
    """
    Deterministic pairs over the first `limit` test items. In the `source`
    scenario the prompt is the target itself; in `target-prompt` it is another
    clip with a different timbre and contour.
    """
    if scenario not in SCENARIOS:
        raise ContractError(f"unknown prosody source {scenario!r}")
    items = testset.items
    pairs = []
    for i in range(min(limit, len(items))):
        prompt = i if scenario == "source" else _other(items, i, [i])
        pairs.append(TransferPair(target=i, prompt=prompt, mismatched=_other(items, prompt, [i, prompt])))
    return pairs


@dataclass
class PairResult:
    matched: float
    mismatched: float


def evaluate_pairs(
    state: TrainingState,
    testset: Corpus,
    pairs: Sequence[TransferPair],
    config: Optional[ProsodyConfig] = None,
    dump_dir: Optional[Path] = None,
) -> List[PairResult]:
    """Distance of each conversion output to its own prompt and to a mismatched prompt."""
    items = testset.items
    contours: Dict[int, F0Contour] = {}

    def contour_of(index: int) -> F0Contour:
        if index not in contours:
            contours[index] = _contour(items[index].clip, config)
        return contours[index]

    results = []
    for n, pair in enumerate(pairs):
        output = prosody_swap_inference(state, items[pair.target].clip, items[pair.prompt].clip, config)
        produced = _contour(output, config)
        try:
            result = PairResult(
                matched=f0_scaled_distance(produced, contour_of(pair.prompt)),
                mismatched=f0_scaled_distance(produced, contour_of(pair.mismatched)),
            )
        except UndefinedDistanceError as e:
            logger.warning("Pair skipped", target=pair.target, prompt=pair.prompt, reason=str(e))
            continue
        results.append(result)
        if dump_dir is not None:
            dump_contour(dump_dir / f"pair_{n:03d}_output.txt", produced)
            dump_contour(dump_dir / f"pair_{n:03d}_prompt.txt", contour_of(pair.prompt))
    return results


def matched_rate(results: Sequence[PairResult]) -> float:
    """Share of pairs whose output is closer to its own prompt than to the mismatched one."""
    if not results:
        raise ContractError("no evaluated pairs")
    return float(np.mean([r.matched < r.mismatched for r in results]))


def prosody_transfer_report(
    states: Dict[str, TrainingState],
    testset: Corpus,
    config: EvalConfig,
    prosody: Optional[ProsodyConfig] = None,
    dump_dir: Optional[Path] = None,
) -> Tuple[ProsodyReport, Dict[Tuple[str, str], float]]:
    """
    Mean distance between conversion output and prompt per (variant, scenario),
    plus the matched-versus-mismatched rate of the same pairs.
    """
    report = ProsodyReport()
    rates: Dict[Tuple[str, str], float] = {}
    for variant, state in states.items():
        for scenario in SCENARIOS:
            pairs = transfer_pairs(testset, scenario, config.pairs)
            where = dump_dir / variant / scenario if dump_dir is not None else None
            results = evaluate_pairs(state, testset, pairs, prosody, where)
            if not results:
                logger.warning("No voiced pairs for row", variant=variant, scenario=scenario)
                continue
            row = report.add(variant, scenario, [r.matched for r in results])
            rates[(variant, scenario)] = matched_rate(results)
            logger.info(
                "Report row",
                variant=variant,
                scenario=scenario,
                mean_distance=round(row.mean_distance, 4),
                pairs=row.pair_count,
                matched_rate=rates[(variant, scenario)],
            )
    return report, rates


def codec_comparison(
    reference: TrainedReference,
    state: TrainingState,
    testset: Corpus,
    prosody: Optional[ProsodyConfig] = None,
) -> Dict[str, float]:
    """Mean round-trip SNR of the reference codec and of the PACE path on the same clips."""
    ref_snr, pace_snr = [], []
    for item in testset.items:
        clip = item.clip
        with reference.codec.frozen():
            _, _, x_ref = reference.codec.reconstruct(clip)
        ref_snr.append(snr_db(clip, x_ref))
        features = ProsodyFeatures.from_clip(clip, prosody)
        x_pace = decode_codes(state, encode_clip(state, clip, features))
        pace_snr.append(snr_db(clip, x_pace))
    return {
        "clips": len(testset),
        "reference_snr_db": float(np.mean(ref_snr)),
        "pace_snr_db": float(np.mean(pace_snr)),
    }


class EvaluationService:
    def __init__(self, config: Settings, registry: RegistryService):
        self.config = config
        self.training = TrainingService(config, registry)

    @property
    def output_dir(self) -> Path:
        return Path(self.config.output_dir)

    def testset(self) -> Corpus:
        corpus = load_corpus(self.output_dir / "corpus").split("test")
        if len(corpus) == 0:
            raise ContractError("the corpus has no test split")
        return corpus

    def report(self, path: Optional[Path] = None) -> Path:
        states = {variant: self.training.load_state(variant, 3) for variant in self.config.eval.variants}
        dump_dir = self.output_dir / "contours" if self.config.eval.dump_contours else None
        report, rates = prosody_transfer_report(
            states, self.testset(), self.config.eval, self.config.prosody, dump_dir
        )
        path = report.to_csv(path or self.output_dir / "report.csv")
        logger.info("Report written", path=str(path), rows=len(report.rows))
        return path

    def compare(self, variant: str = "full", path: Optional[Path] = None) -> Path:
        result = codec_comparison(
            self.training.load_reference(),
            self.training.load_state(variant, 3),
            self.testset(),
            self.config.prosody,
        )
        path = path or self.output_dir / "codec_comparison.csv"
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["variant", *result], lineterminator="\n")
            writer.writeheader()
            writer.writerow({"variant": variant, **{k: f"{v:.4f}" if isinstance(v, float) else v
                                                     for k, v in result.items()}})
        logger.info("Codec comparison written", path=str(path), **result)
        return path
