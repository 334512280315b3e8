from hubsync.bifurcation import SweepParameter, period_scaling
from hubsync.commands.base_command import CommandContext, CommandDefinition, CommandResult
from hubsync.export import write_scaling

# ------------------------------------------------------------------
# Arguments for the scaling command
# ------------------------------------------------------------------
ScalingArguments = [
    (("--parameter",), {"required": True, "help": "parameter to move past its threshold, e.g. coupling[2]"}),
    (("--eps",), {"type": float, "nargs": "+", "default": [1e-4, 3e-4, 1e-3, 3e-3, 1e-2],
                  "help": "relative distances from the threshold (at least two decades)"}),
    (("--critical",), {"type": float, "help": "threshold value (default: nearest analytic threshold)"}),
]


def run_scaling(context: CommandContext) -> CommandResult:
    args = context.args
    result = period_scaling(context.spec, SweepParameter.parse(args.parameter), args.eps, args.critical,
                            context.integrator, context.jobs)
    path = write_scaling(context.out_dir / "scaling.csv", result)
    text = (f"{result.parameter}: critical={result.critical:.17g} side={result.side} "
            f"exponent={result.exponent:.6g} prefactor={result.prefactor:.6g} s")
    return CommandResult(text=text, outputs=[path])


# ------------------------------------------------------------------
# CommandDefinition instance
# ------------------------------------------------------------------
ScalingDefinition = CommandDefinition(
    name="scaling",
    description="Measure limit-cycle periods approaching the threshold and fit T ~ eps^exponent.",
    arguments=ScalingArguments,
    function=run_scaling,
)
