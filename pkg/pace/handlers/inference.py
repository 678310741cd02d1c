"""
Handler for inference commands: prosody swap and the code stream.
"""
import argparse
from pathlib import Path
from typing import Any, Dict

from pace.config import Settings
from pace.exceptions import DependencyError, UsageError
from pace.handlers.router import Router, arg
from pace.services.inference_service import InferenceService
from pace.services.training_service import VARIANTS

router = Router()


def _require_file(path: Path) -> Path:
    if not Path(path).is_file():
        raise DependencyError(f"input file {path} does not exist")
    return Path(path)


@router.command(
    "infer",
    "reconstruct TARGET with the prosody of PROSODY",
    arg("--target", type=Path, required=True, help="WAV providing content and timbre"),
    arg("--prosody", type=Path, required=True, help="WAV providing the f0 contour"),
    arg("--out", type=Path, default=None, help="output WAV (default OUTPUT_DIR/out.wav)"),
    arg("--variant", choices=VARIANTS, default="full"),
    usage="infer --target TARGET.wav --prosody PROMPT.wav [--out OUT.wav]",
)
def cmd_infer(args: argparse.Namespace, data: Dict[str, Any]) -> int:
    config: Settings = data["config"]
    out = args.out or Path(config.output_dir) / "out.wav"
    service = InferenceService(config, data["registry"])
    print(service.swap(_require_file(args.target), _require_file(args.prosody), out, args.variant))
    return 0


@router.command(
    "codes",
    "encode a WAV to a code stream, or decode a code stream to a WAV",
    arg("action", choices=("encode", "decode")),
    arg("input", type=Path),
    arg("--out", type=Path, default=None),
    arg("--variant", choices=VARIANTS, default="full"),
    usage="codes encode IN.wav [--out OUT.codes] | codes decode IN.codes [--out OUT.wav]",
)
def cmd_codes(args: argparse.Namespace, data: Dict[str, Any]) -> int:
    config: Settings = data["config"]
    service = InferenceService(config, data["registry"])
    source = _require_file(args.input)
    if args.action == "encode":
        if source.suffix.lower() != ".wav":
            raise UsageError("codes encode expects a .wav input")
        print(service.encode(source, args.out or source.with_suffix(".codes"), args.variant))
    else:
        print(service.decode(source, args.out or source.with_suffix(".decoded.wav"), args.variant))
    return 0
