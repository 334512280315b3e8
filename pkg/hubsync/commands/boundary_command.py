import json

import numpy as np

from hubsync.commands.base_command import CommandContext, CommandDefinition, CommandResult
from hubsync.export import write_boundary
from hubsync.stability import stability_boundary

# ------------------------------------------------------------------
# Arguments for the boundary command
# ------------------------------------------------------------------
BoundaryArguments = [
    (("--spoke",), {"type": int, "help": "spoke index 2..n (default: n)"}),
    (("--d-range",), {"type": float, "nargs": 2, "metavar": ("LO", "HI"),
                      "help": "damping range for the sampled lines (default: 0 to 4x the current damping)"}),
    (("--samples",), {"type": int, "default": 21, "help": "number of damping samples"}),
]


def boundary_lines(context: CommandContext) -> CommandResult:
    spec = context.spec
    args = context.args
    spoke = args.spoke if args.spoke is not None else spec.n
    lines = stability_boundary(spec, spoke)
    lo, hi = args.d_range if args.d_range else (0.0, 4.0 * spec.damping[spoke - 1])
    path = write_boundary(context.out_dir / "boundary.csv", lines, np.linspace(lo, hi, args.samples))
    return CommandResult(text=json.dumps(lines.model_dump(), indent=2), outputs=[path])


# ------------------------------------------------------------------
# CommandDefinition instance
# ------------------------------------------------------------------
BoundaryDefinition = CommandDefinition(
    name="boundary",
    description="Closed-form stability wedge of one spoke in the (damping, injection) plane.",
    arguments=BoundaryArguments,
    function=boundary_lines,
)
