import json

from hubsync.bifurcation import SweepParameter, bracket_threshold
from hubsync.commands.base_command import CommandContext, CommandDefinition, CommandResult

# ------------------------------------------------------------------
# Arguments for the bracket command
# ------------------------------------------------------------------
BracketArguments = [
    (("--parameter",), {"required": True, "help": "parameter to bisect, e.g. coupling[2]"}),
    (("--lo",), {"type": float, "required": True, "help": "one end of the bracket"}),
    (("--hi",), {"type": float, "required": True, "help": "other end of the bracket"}),
    (("--tol",), {"type": float, "default": 1e-5, "help": "relative bracket width at which bisection stops"}),
]


def run_bracket(context: CommandContext) -> CommandResult:
    args = context.args
    result = bracket_threshold(context.spec, SweepParameter.parse(args.parameter), args.lo, args.hi, args.tol,
                               context.integrator, context.seed)
    return CommandResult(text=json.dumps(result.model_dump(), indent=2))


# ------------------------------------------------------------------
# CommandDefinition instance
# ------------------------------------------------------------------
BracketDefinition = CommandDefinition(
    name="bracket",
    description="Bisect the onset of rotation in one parameter and compare with the analytic threshold.",
    arguments=BracketArguments,
    function=run_bracket,
)
