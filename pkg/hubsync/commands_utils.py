import argparse
from pathlib import Path
from typing import List

from hubsync import __version__
from hubsync.commands import (
    BoundaryDefinition,
    BracketDefinition,
    EnergySliceDefinition,
    EquilibriaDefinition,
    ReplayDefinition,
    ScalingDefinition,
    SimulateDefinition,
    StabilityDefinition,
    SweepDefinition,
    ValidateDefinition,
)
from hubsync.commands.base_command import CommandContext, CommandDefinition
from hubsync.errors import HubSyncError, UsageError
from hubsync.grid_model import config_digest, load_grid_config, validate
from hubsync.run_manifest import RunManifest, file_digest, write_manifest
from hubsync.settings import ATOL, RTOL, IntegratorSettings, SolverSettings
from hubsync.util import DEFAULT_JOBS, ERROR_LOG_FILE, log_exception, print_failure, print_success

DEFAULT_OUT_DIR = "hubsync-output"

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE = 2


def get_command_list() -> List[CommandDefinition]:
    """Return the list of subcommands, in the order --help shows them."""
    return [
        ValidateDefinition,
        SimulateDefinition,
        EquilibriaDefinition,
        StabilityDefinition,
        EnergySliceDefinition,
        BoundaryDefinition,
        SweepDefinition,
        BracketDefinition,
        ScalingDefinition,
        ReplayDefinition,
    ]


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=DEFAULT_JOBS, help="worker processes for sweeps and scaling runs")
    common.add_argument("--seed", type=int, default=0, help="seed of every random stream")
    common.add_argument("--tol-rel", type=float, default=RTOL, help="integrator relative tolerance")
    common.add_argument("--tol-abs", type=float, default=ATOL, help="integrator absolute tolerance")
    common.add_argument("--horizon", type=float, help="integration horizon, s (default: 2000 damping time constants)")
    common.add_argument("--out-dir", default=DEFAULT_OUT_DIR, help="directory for CSV outputs and manifest.json")
    common.add_argument("--validate-only", action="store_true", help="load and validate the configuration, then stop")
    return common


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def build_parser(commands: List[CommandDefinition]) -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hubsync",
        description="Synchronization and stability of hub-and-spoke power grids. "
                    "Angles are in rad, frequencies in rad/s, powers in per-unit.",
    )
    parser.add_argument("--version", action="version", version=f"hubsync {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common_arguments()
    for command in commands:
        sub = subparsers.add_parser(command.name, help=command.description, description=command.description,
                                    parents=[common])
        if command.needs_config:
            sub.add_argument("config", help="grid configuration JSON")
        for flags, options in command.arguments:
            sub.add_argument(*flags, **options)
    return parser


def _context(args, argv: List[str], command: CommandDefinition) -> CommandContext:
    try:
        integrator = IntegratorSettings(rtol=args.tol_rel, atol=args.tol_abs, horizon=args.horizon)
    except ValueError as e:
        raise UsageError(f"invalid integrator settings: {e}") from e
    if args.jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {args.jobs}")

    spec, config_path = None, None
    if command.needs_config:
        config_path = Path(args.config)
        spec = validate(load_grid_config(config_path))
    return CommandContext(
        args=args,
        argv=list(argv),
        spec=spec,
        config_path=config_path,
        out_dir=Path(args.out_dir),
        integrator=integrator,
        solver=SolverSettings(),
        seed=args.seed,
        jobs=args.jobs,
    )


def _manifest(command: CommandDefinition, context: CommandContext, outputs: List[Path]) -> RunManifest:
    return RunManifest(
        subcommand=command.name,
        argv=context.argv,
        config_path=str(context.config_path) if context.config_path else None,
        config_digest=config_digest(context.config_path) if context.config_path else None,
        seed=context.seed,
        settings={
            "integrator": context.integrator.model_dump(),
            "solver": context.solver.model_dump(),
            "jobs": context.jobs,
        },
        outputs=[path.name for path in outputs],
        output_digests={path.name: file_digest(path) for path in outputs},
    )


def execute_command(commands: List[CommandDefinition], argv: List[str]) -> int:
    """
    Parse argv, run the chosen subcommand and write its manifest.

    Returns the exit code: 0 on success, 1 on domain errors, 2 on usage errors.
    """
    try:
        args = build_parser(commands).parse_args(argv)
    except UsageError as e:
        print_failure(str(e))
        return EXIT_USAGE
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)

    command = next(c for c in commands if c.name == args.command)
    try:
        context = _context(args, argv, command)
        if args.validate_only:
            print_success(f"{context.config_path}: valid" if context.config_path else "nothing to validate")
            return EXIT_OK
        result = command.function(context)
        if command.writes_manifest:
            manifest = write_manifest(context.out_dir, _manifest(command, context, result.outputs))
            print_success(f"wrote {', '.join(p.name for p in result.outputs + [manifest])} to {context.out_dir}")
        print(result.text)
        return EXIT_OK
    except UsageError as e:
        print_failure(str(e))
        return EXIT_USAGE
    except HubSyncError as e:
        print_failure(f"{type(e).__name__}: {e}")
        return EXIT_DOMAIN_ERROR
    except Exception as e:
        log_exception(e)
        print_failure(f"An error occurred: {e}")
        print_failure(f"The error has been logged to {ERROR_LOG_FILE}")
        return EXIT_DOMAIN_ERROR
