from pathlib import Path

from hubsync.commands.base_command import CommandContext, CommandDefinition, CommandResult
from hubsync.errors import HubSyncError
from hubsync.grid_model import config_digest
from hubsync.run_manifest import load_manifest
from hubsync.util import print_info, print_warning

# ------------------------------------------------------------------
# Arguments for the replay command
# ------------------------------------------------------------------
ReplayArguments = [
    (("manifest",), {"help": "manifest.json written by an earlier run"}),
    (("--into",), {"metavar": "DIR", "help": "write the outputs here instead of the recorded output directory"}),
]


def replay(context: CommandContext) -> CommandResult:
    from hubsync.commands_utils import execute_command, get_command_list

    manifest = load_manifest(context.args.manifest)
    if manifest.config_path and Path(manifest.config_path).exists():
        if config_digest(manifest.config_path) != manifest.config_digest:
            print_warning(f"{manifest.config_path} changed since the recorded run; outputs will differ")

    argv = list(manifest.argv)
    if context.args.into:
        argv += ["--out-dir", context.args.into]
    print_info(f"replaying: {' '.join(argv)}")
    code = execute_command(get_command_list(), argv)
    if code != 0:
        raise HubSyncError(f"replayed command exited with code {code}: {' '.join(argv)}")
    return CommandResult(text=f"replayed: {' '.join(argv)}")


# ------------------------------------------------------------------
# CommandDefinition instance
# ------------------------------------------------------------------
ReplayDefinition = CommandDefinition(
    name="replay",
    description="Re-run the command recorded in a run manifest.",
    arguments=ReplayArguments,
    function=replay,
    needs_config=False,
    writes_manifest=False,
)
