import math

from hubsync.commands.base_command import CommandContext, CommandDefinition, CommandResult
from hubsync.energy import energy_slice
from hubsync.export import write_energy_slice

# ------------------------------------------------------------------
# Arguments for the energy-slice command
# ------------------------------------------------------------------
EnergySliceArguments = [
    (("--rho-range",), {"type": float, "nargs": 2, "metavar": ("LO", "HI"), "default": [-math.pi, math.pi],
                        "help": "phase offset range of the chosen spoke, rad"}),
    (("--sigma-range",), {"type": float, "nargs": 2, "metavar": ("LO", "HI"), "default": [-1.0, 1.0],
                          "help": "frequency offset range of the chosen spoke, rad/s"}),
    (("--resolution",), {"type": int, "default": 101, "help": "grid points per axis"}),
    (("--spoke",), {"type": int, "default": 2, "help": "spoke whose phase and frequency are perturbed (2..n)"}),
    (("--strict",), {"action": "store_true", "help": "fail on non-positive energy instead of leaving cells empty"}),
]


def write_slice(context: CommandContext) -> CommandResult:
    args = context.args
    result = energy_slice(context.spec, rho_range=tuple(args.rho_range), sigma_range=tuple(args.sigma_range),
                          resolution=args.resolution, spoke=args.spoke, strict=args.strict)
    path = write_energy_slice(context.out_dir / "energy_slice.csv", result)
    rho, sigma = result.minimizer()
    text = f"minimum at rho={rho:.17g} rad sigma={sigma:.17g} rad/s missing_cells={result.missing_cells}"
    return CommandResult(text=text, outputs=[path])


# ------------------------------------------------------------------
# CommandDefinition instance
# ------------------------------------------------------------------
EnergySliceDefinition = CommandDefinition(
    name="energy-slice",
    description="Evaluate the Lyapunov energy on a (rho, sigma) slice through the stable fixed point.",
    arguments=EnergySliceArguments,
    function=write_slice,
)
