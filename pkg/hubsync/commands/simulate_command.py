from hubsync.commands.base_command import CommandContext, CommandDefinition, CommandResult
from hubsync.dynamics import integrate, perturbed_state
from hubsync.equilibrium import enumerate_fixed_points, ghost_state
from hubsync.export import write_trajectory
from hubsync.grid_model import load_state
from hubsync.stability import check_criterion, classify_fixed_points

# ------------------------------------------------------------------
# Arguments for the simulate command
# ------------------------------------------------------------------
SimulateArguments = [
    (("--init",), {"metavar": "FILE", "help": "JSON initial condition {\"phases\": [...], \"freq_dev\": [...]}"}),
    (("--perturb",), {"type": int, "metavar": "SEED",
                      "help": "start from the stable point (or the ghost state) with a seeded Gaussian phase kick"}),
    (("--perturb-scale",), {"type": float, "default": 0.1, "help": "standard deviation of the phase kick, rad"}),
    (("--full-horizon",), {"action": "store_true", "help": "keep integrating after the outcome is decided"}),
]


def simulate(context: CommandContext) -> CommandResult:
    spec = context.spec
    args = context.args
    eq = enumerate_fixed_points(spec, context.solver.residual_tol)

    if args.init:
        init = load_state(args.init, spec.n)
    else:
        if check_criterion(spec).satisfied:
            base = eq.state_of(classify_fixed_points(spec, eq).stable_point)
        else:
            base = ghost_state(spec)
        seed = args.perturb if args.perturb is not None else context.seed
        init = perturbed_state(base, args.perturb_scale, seed)

    trajectory = integrate(spec, init, context.integrator.horizon, context.integrator, target=eq,
                           stop_on_outcome=not args.full_horizon)
    path = write_trajectory(context.out_dir / "trajectory.csv", trajectory)
    text = (f"{trajectory.outcome.summary()} samples={len(trajectory.times)} "
            f"steps_rejected={trajectory.steps_rejected}")
    return CommandResult(text=text, outputs=[path])


# ------------------------------------------------------------------
# CommandDefinition instance
# ------------------------------------------------------------------
SimulateDefinition = CommandDefinition(
    name="simulate",
    description="Integrate the swing equations and classify the outcome. Phases in rad, frequencies in rad/s.",
    arguments=SimulateArguments,
    function=simulate,
)
