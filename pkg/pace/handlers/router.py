"""
Command registry: handler modules declare their subcommands on a Router and the
CLI turns every registered command into an argparse subparser.
"""
import argparse
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

Handler = Callable[[argparse.Namespace, Dict[str, Any]], int]
Argument = Tuple[tuple, dict]


def arg(*flags: str, **options: Any) -> Argument:
    return flags, options


@dataclass
class Command:
    name: str
    help: str
    callback: Handler
    arguments: List[Argument] = field(default_factory=list)
    usage: Optional[str] = None


class Router:
    def __init__(self) -> None:
        self.commands: List[Command] = []

    def command(self, name: str, help: str, *arguments: Argument, usage: Optional[str] = None):
        def register(callback: Handler) -> Handler:
            self.commands.append(Command(name, help, callback, list(arguments), usage))
            return callback

        return register
