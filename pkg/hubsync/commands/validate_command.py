from hubsync.commands.base_command import CommandContext, CommandDefinition, CommandResult
from hubsync.equilibrium import absolute_sync_frequency, sync_frequency
from hubsync.stability import check_criterion

# ------------------------------------------------------------------
# Arguments for the validate command
# ------------------------------------------------------------------
ValidateArguments = []


def validate_config(context: CommandContext) -> CommandResult:
    """
    The dispatcher has already loaded and validated the grid; report the basic synchronization quantities.
    """
    spec = context.spec
    criterion = check_criterion(spec)
    lines = [
        f"valid: n={spec.n} omega_ref={spec.omega_ref:.17g} rad/s",
        f"dw_sync={sync_frequency(spec):.17g} rad/s omega_sync={absolute_sync_frequency(spec):.17g} rad/s",
        f"criterion={'satisfied' if criterion.satisfied else 'violated'} "
        f"worst_margin={min(criterion.margins):.17g} (spoke {criterion.worst_spoke})",
    ]
    return CommandResult(text="\n".join(lines))


# ------------------------------------------------------------------
# CommandDefinition instance
# ------------------------------------------------------------------
ValidateDefinition = CommandDefinition(
    name="validate",
    description="Check a grid configuration, listing every violated constraint (exit 1) or the sync frequency and criterion.",
    arguments=ValidateArguments,
    function=validate_config,
)
