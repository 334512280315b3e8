"""
Helpers for running a single command function against a temp config without the dispatcher.
"""
import pytest

from hubsync.commands_utils import _context, build_parser, get_command_list


@pytest.fixture
def run_command(config_file, tmp_path):
    """Parse argv for one subcommand, build its context and call the command function directly."""
    def run(name, spec, *extra):
        commands = get_command_list()
        command = next(c for c in commands if c.name == name)
        argv = [name, str(config_file(spec)), "--out-dir", str(tmp_path / "out"), *extra]
        args = build_parser(commands).parse_args(argv)
        return command.function(_context(args, argv, command))

    return run
