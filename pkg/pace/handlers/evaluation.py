"""
Handler for evaluation commands.
"""
import argparse
from pathlib import Path
from typing import Any, Dict

from pace.exceptions import UsageError
from pace.handlers.router import Router, arg
from pace.services.evaluation_service import EvaluationService
from pace.services.training_service import VARIANTS

router = Router()


@router.command(
    "eval",
    "write the prosody transfer report and/or the codec comparison",
    arg("--report", action="store_true", help="prosody transfer report over the test split"),
    arg("--compare", action="store_true", help="round-trip SNR of reference codec vs PACE"),
    arg("--variant", choices=VARIANTS, default="full", help="variant for --compare"),
    arg("--out", type=Path, default=None, help="report CSV path"),
    usage="eval --report [--out REPORT.csv] | eval --compare [--variant VARIANT]",
)
def cmd_eval(args: argparse.Namespace, data: Dict[str, Any]) -> int:
    if not (args.report or args.compare):
        raise UsageError("eval needs --report, --compare or both")
    service = EvaluationService(data["config"], data["registry"])
    if args.report:
        print(service.report(args.out))
    if args.compare:
        print(service.compare(args.variant))
    return 0
