"""
Middlewares that wrap every command handler.
"""
import argparse
import os
import time
from pathlib import Path
from typing import Any, Callable, Dict

import structlog

from pace.database import get_session
from pace.database.models import RunStatus
from pace.exceptions import PaceRuntimeError
from pace.logger import get_logger
from pace.services.checkpoint_service import RegistryService

logger = get_logger(__name__)

Handler = Callable[[argparse.Namespace, Dict[str, Any]], int]

LOCK_FILE = ".pace.lock"


class LoggingMiddleware:
    """Binds command and run id into the log context for the duration of a command."""

    def __call__(self, handler: Handler, args: argparse.Namespace, data: Dict[str, Any]) -> int:
        structlog.contextvars.bind_contextvars(command=args.command, run_id=data["run_id"])
        started = time.monotonic()
        logger.info("Command started", seed=data["config"].seed, output_dir=str(data["config"].output_dir))
        try:
            code = handler(args, data)
            logger.info("Command finished", seconds=round(time.monotonic() - started, 2))
            return code
        finally:
            structlog.contextvars.unbind_contextvars("command", "run_id")


class LockMiddleware:
    """Gives one command exclusive use of the output directory."""

    def __call__(self, handler: Handler, args: argparse.Namespace, data: Dict[str, Any]) -> int:
        directory = Path(data["config"].output_dir)
        directory.mkdir(parents=True, exist_ok=True)
        lock = directory / LOCK_FILE
        try:
            fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise PaceRuntimeError(
                f"{directory} is in use by another command; remove {lock} if that command died"
            )
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            return handler(args, data)
        finally:
            lock.unlink(missing_ok=True)


class RegistryMiddleware:
    """Records the command as a run and hands handlers a registry bound to one session."""

    def __call__(self, handler: Handler, args: argparse.Namespace, data: Dict[str, Any]) -> int:
        config = data["config"]
        failure = None
        with get_session(config.database_url) as session:
            registry = RegistryService(session)
            run = registry.start_run(args.command, config.seed, getattr(args, "variant", None), data["run_id"])
            data["registry"] = registry
            try:
                code = handler(args, data)
                registry.finish_run(run.id, RunStatus.COMPLETED)
            except Exception as e:
                # The failed run is committed with the session; the error goes on to the CLI.
                registry.finish_run(run.id, RunStatus.FAILED, str(e))
                failure = e
        if failure is not None:
            raise failure
        return code
