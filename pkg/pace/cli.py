"""
Command-line entry point: parses arguments, loads settings, and runs the chosen
handler through the middleware chain.
"""
import argparse
import sys
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Optional

from pace.config import Settings, full_scale, load_settings, toy
from pace.exceptions import PaceError, UsageError
from pace.handlers import Command, routers
from pace.logger import configure_logging, get_logger
from pace.middlewares import LockMiddleware, LoggingMiddleware, RegistryMiddleware
from pace.services.checkpoint_service import generate_run_id
from pace.tensor import set_default_dtype

logger = get_logger(__name__)

PRESETS = {"desk": dict, "toy": toy, "full-scale": full_scale}


class ArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of exiting, so bad flags map to exit code 1."""

    def error(self, message: str) -> None:
        forms = "\n  ".join(
            f"pace {c.usage or c.name}" for router in routers for c in router.commands
        )
        raise UsageError(f"{message}\nvalid forms:\n  {forms}")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="pace", description="Prosody-aware codec encoder pipeline")
    parser.add_argument("--config", type=Path, default=None, help="TOML config (or PACE_CONFIG)")
    parser.add_argument("--preset", choices=tuple(PRESETS), default="desk", help="model/schedule preset")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--output-dir", type=Path, default=None)
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    for router in routers:
        for command in router.commands:
            child = sub.add_parser(command.name, help=command.help)
            for flags, options in command.arguments:
                child.add_argument(*flags, **options)
            child.set_defaults(handler=command)
    return parser


def load_config(args: argparse.Namespace) -> Settings:
    overrides: Dict[str, Any] = dict(PRESETS[args.preset]())
    for key in ("seed", "output_dir", "log_level"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    return load_settings(args.config, **overrides)


def dispatch(command: Command, args: argparse.Namespace, data: Dict[str, Any]) -> int:
    handler = command.callback
    for middleware in (RegistryMiddleware(), LockMiddleware(), LoggingMiddleware()):
        handler = partial(middleware, handler)
    return handler(args, data)


def main(argv: Optional[List[str]] = None) -> int:
    """Exit status: 0 success, 1 usage, 2 configuration, 3 dependency, 4 runtime."""
    try:
        args = build_parser().parse_args(argv)
        config = load_config(args)
        configure_logging(config.log_level)
        set_default_dtype(config.precision)
        return dispatch(args.handler, args, {"config": config, "run_id": generate_run_id()})
    except PaceError as e:
        logger.error("Command failed", error=str(e), kind=type(e).__name__)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.error("Command crashed", error=str(e), exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 4


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
