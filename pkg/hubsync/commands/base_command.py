from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Tuple

from hubsync.grid_model import GridSpec
from hubsync.settings import IntegratorSettings, SolverSettings

# (flags, argparse keyword arguments)
Argument = Tuple[Tuple[str, ...], dict]


@dataclass
class CommandContext:
    args: object
    argv: List[str]
    spec: GridSpec | None
    config_path: Path | None
    out_dir: Path
    integrator: IntegratorSettings
    solver: SolverSettings
    seed: int
    jobs: int


@dataclass
class CommandResult:
    text: str
    outputs: List[Path] = field(default_factory=list)


class CommandDefinition:
    def __init__(self, name: str, description: str, arguments: List[Argument],
                 function: Callable[[CommandContext], CommandResult],
                 needs_config: bool = True, writes_manifest: bool = True):
        self.name = name
        self.description = description
        self.arguments = arguments
        self.function = function
        self.needs_config = needs_config
        self.writes_manifest = writes_manifest
