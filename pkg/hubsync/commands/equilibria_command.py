import json

import numpy as np

from hubsync.commands.base_command import CommandContext, CommandDefinition, CommandResult
from hubsync.equilibrium import EquilibriumSet, enumerate_fixed_points, scan_fixed_points
from hubsync.export import write_equilibria
from hubsync.grid_model import angle_difference
from hubsync.stability import classify_fixed_points
from hubsync.util import print_warning

# ------------------------------------------------------------------
# Arguments for the equilibria command
# ------------------------------------------------------------------
EquilibriaArguments = [
    (("--csv",), {"action": "store_true", "help": "also write equilibria.csv"}),
    (("--scan",), {"type": int, "metavar": "RESOLUTION",
                   "help": "cross-check the closed forms with a grid scan of the torus at this resolution"}),
]


def _scan_agrees(eq: EquilibriumSet, scanned, tol: float) -> bool:
    if len(scanned) != len(eq.points):
        return False
    return all(
        min(float(np.linalg.norm(angle_difference(np.asarray(p.phases), s.phases))) for s in scanned) < tol
        for p in eq.points
    )


def list_equilibria(context: CommandContext) -> CommandResult:
    spec = context.spec
    eq = enumerate_fixed_points(spec, context.solver.residual_tol)
    report = classify_fixed_points(spec, eq) if eq.exists else None
    summary = eq.model_dump()

    if context.args.scan:
        scanned = scan_fixed_points(spec, context.args.scan, context.solver.residual_tol, context.solver)
        agrees = _scan_agrees(eq, scanned, context.solver.duplicate_tol)
        if not agrees:
            print_warning(f"Grid scan found {len(scanned)} root(s), closed forms give {len(eq.points)}")
        summary["scan"] = {"resolution": context.args.scan, "roots": len(scanned), "agrees": agrees}

    outputs = []
    if context.args.csv:
        outputs.append(write_equilibria(context.out_dir / "equilibria.csv", eq, report))
    return CommandResult(text=json.dumps(summary, indent=2), outputs=outputs)


# ------------------------------------------------------------------
# CommandDefinition instance
# ------------------------------------------------------------------
EquilibriaDefinition = CommandDefinition(
    name="equilibria",
    description="Enumerate the closed-form synchronized fixed points (phases in rad, canonical in [0, 2pi)).",
    arguments=EquilibriaArguments,
    function=list_equilibria,
)
