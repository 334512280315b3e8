import json

from hubsync.commands.base_command import CommandContext, CommandDefinition, CommandResult
from hubsync.equilibrium import enumerate_fixed_points
from hubsync.export import write_spectrum
from hubsync.stability import classify_fixed_points, sync_deviation_band

# ------------------------------------------------------------------
# Arguments for the stability command
# ------------------------------------------------------------------
StabilityArguments = []


def report_stability(context: CommandContext) -> CommandResult:
    spec = context.spec
    eq = enumerate_fixed_points(spec, context.solver.residual_tol)
    report = classify_fixed_points(spec, eq)
    band = sync_deviation_band(spec)
    summary = {
        "criterion": report.criterion.model_dump(),
        "stable_point": report.stable_point,
        "regimes": {str(k): v for k, v in report.regimes.items()},
        "rogue_spokes": report.rogue_spokes,
        "sync_deviation_band": band.model_dump() if band else None,
        "points": [
            {"point_id": p.point_id, "classification": p.classification, "max_real": p.max_real}
            for p in report.points
        ],
    }
    path = write_spectrum(context.out_dir / "spectrum.csv", report)
    return CommandResult(text=json.dumps(summary, indent=2), outputs=[path])


# ------------------------------------------------------------------
# CommandDefinition instance
# ------------------------------------------------------------------
StabilityDefinition = CommandDefinition(
    name="stability",
    description="Check the critical-coupling criterion and classify every fixed point by its Jacobian spectrum (1/s).",
    arguments=StabilityArguments,
    function=report_stability,
)
