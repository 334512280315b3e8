import numpy as np

from hubsync.bifurcation import SweepParameter, sweep
from hubsync.commands.base_command import CommandContext, CommandDefinition, CommandResult
from hubsync.errors import UsageError
from hubsync.export import write_sweep

# ------------------------------------------------------------------
# Arguments for the sweep command
# ------------------------------------------------------------------
SweepArguments = [
    (("--parameter",), {"required": True, "help": "parameter to vary, e.g. coupling[3], damping[10], injection[1]"}),
    (("--values",), {"type": float, "nargs": "+", "help": "explicit parameter values"}),
    (("--range",), {"type": float, "nargs": 2, "metavar": ("LO", "HI"), "help": "evenly spaced values from LO to HI"}),
    (("--count",), {"type": int, "default": 11, "help": "number of values for --range"}),
    (("--init-policy",), {"choices": ["continuation", "closed_form"], "default": "continuation",
                          "help": "warm start from the previous value, or start every value near its own fixed point"}),
]


def sweep_values(args) -> list:
    if args.values and args.range:
        raise UsageError("give either --values or --range, not both")
    if args.values:
        return sorted(args.values)
    if args.range:
        return list(np.linspace(min(args.range), max(args.range), args.count))
    raise UsageError("sweep needs --values or --range")


def run_sweep(context: CommandContext) -> CommandResult:
    parameter = SweepParameter.parse(context.args.parameter)
    result = sweep(context.spec, parameter, sweep_values(context.args), context.args.init_policy,
                   context.integrator, context.seed, context.jobs)
    path = write_sweep(context.out_dir / "sweep.csv", result)
    flips = ", ".join(f"{a:.17g}..{b:.17g}" for a, b in result.transitions()) or "none"
    return CommandResult(text=f"{parameter.label}: {len(result.points)} values, outcome changes in {flips}",
                         outputs=[path])


# ------------------------------------------------------------------
# CommandDefinition instance
# ------------------------------------------------------------------
SweepDefinition = CommandDefinition(
    name="sweep",
    description="Integrate across a range of one parameter and record each outcome (margins in per-unit power).",
    arguments=SweepArguments,
    function=run_sweep,
)
