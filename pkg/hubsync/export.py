"""CSV writers. One header row; floats at 17 significant digits; units in the column names."""

import csv
import math
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from hubsync.bifurcation import ScalingResult, SweepResult
from hubsync.dynamics import Trajectory
from hubsync.energy import EnergySlice
from hubsync.equilibrium import EquilibriumSet
from hubsync.stability import BoundaryLines, StabilityReport


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "" if math.isnan(value) else format(float(value), ".17g")
    if isinstance(value, (tuple, list)):
        return " ".join(format_value(v) for v in value)
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def phase_columns(n: int) -> List[str]:
    return [f"delta_{i}_rad" for i in range(1, n)]


def frequency_columns(n: int) -> List[str]:
    return [f"dw_{i}_rad_s" for i in range(1, n + 1)]


def write_trajectory(path: Path, trajectory: Trajectory) -> Path:
    """Unwrapped phases, then the same phases wrapped into [0, 2pi), then frequency deviations."""
    n = trajectory.n
    wrapped_columns = [f"delta_{i}_wrapped_rad" for i in range(1, n)]
    columns = ["t_s"] + phase_columns(n) + wrapped_columns + frequency_columns(n)
    table = np.column_stack([trajectory.times, trajectory.phases, trajectory.wrapped_phases, trajectory.freq_dev])
    return write_csv(path, columns, (list(row) for row in table))


def write_equilibria(path: Path, eq: EquilibriumSet, report: StabilityReport | None = None) -> Path:
    n = len(eq.mu) + 1
    columns = ["point_id", "branch"] + phase_columns(n) + ["dw_sync_rad_s", "residual", "classification", "max_real_1_s"]
    rows = []
    for point in eq.points:
        stability = report.of(point.point_id) if report is not None else None
        rows.append(
            [point.point_id, "".join(str(b) for b in point.branch)] + list(point.phases)
            + [eq.delta_omega_sync, point.residual,
               stability.classification if stability else None,
               stability.max_real if stability else None]
        )
    return write_csv(path, columns, rows)


def write_spectrum(path: Path, report: StabilityReport) -> Path:
    columns = ["point_id", "classification", "k", "real_1_s", "imag_1_s"]
    rows = []
    for point in report.points:
        for k, (re, im) in enumerate(zip(point.eigen_real, point.eigen_imag), start=1):
            rows.append([point.point_id, point.classification, k, re, im])
    return write_csv(path, columns, rows)


def write_energy_slice(path: Path, energy_slice: EnergySlice) -> Path:
    columns = ["rho_rad", "sigma_rad_s", "energy_pu", "log_energy"]
    log_energy = energy_slice.log_energy
    rows = []
    for a, rho in enumerate(energy_slice.rho):
        for b, sigma in enumerate(energy_slice.sigma):
            rows.append([rho, sigma, energy_slice.energy[a, b], log_energy[a, b]])
    return write_csv(path, columns, rows)


def write_boundary(path: Path, lines: BoundaryLines, damping_values: Sequence[float]) -> Path:
    columns = [f"damping_{lines.spoke}_pu", f"lower_injection_{lines.spoke}_pu", f"upper_injection_{lines.spoke}_pu"]
    lower, upper = lines.at(damping_values)
    return write_csv(path, columns, zip(damping_values, lower, upper))


def write_sweep(path: Path, result: SweepResult) -> Path:
    columns = [result.parameter, "margin_pu", "outcome", "point_id", "period_s", "windings", "spoke_windings", "error"]
    rows = [[p.value, p.margin, p.outcome, p.point_id, p.period, p.windings, p.spoke_windings, p.error]
            for p in result.points]
    return write_csv(path, columns, rows)


def write_scaling(path: Path, result: ScalingResult) -> Path:
    return write_csv(path, ["eps", f"{result.parameter}", "period_s"],
                     [[eps, result.critical * (1 + (1 if result.side == "above" else -1) * eps), period]
                      for eps, period in zip(result.eps, result.periods)])
