import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from hubsync.equilibrium import EquilibriumSet, effective_injections, enumerate_fixed_points, sync_frequency
from hubsync.errors import CriterionViolated, IndexOutOfRange, NonPositiveEnergy
from hubsync.grid_model import GridSpec, SystemState, check_dimension
from hubsync.stability import check_criterion, classify_fixed_points


def _energy(spec: GridSpec, phases: np.ndarray, freq: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Energy for arrays of phases (..., n-1) and frequency deviations (..., n) against reference phases."""
    masses = spec.masses()
    coupling = np.asarray(spec.coupling, dtype=float)
    p = effective_injections(spec)
    v = freq - sync_frequency(spec)

    kinetic = 0.5 * np.sum(masses * v ** 2, axis=-1)
    potential = -np.sum(p[:-1] * (phases - reference), axis=-1)

    zero = np.zeros(phases.shape[:-1] + (1,))
    diffs = phases[..., :1] - np.concatenate([phases[..., 1:], zero], axis=-1)
    ref_diffs = reference[0] - np.append(reference[1:], 0.0)
    bonds = -np.sum(coupling * (np.cos(diffs) - np.cos(ref_diffs)), axis=-1)
    return kinetic + potential + bonds


def lyapunov_energy(spec: GridSpec, state: SystemState, reference: SystemState) -> float:
    """
    Energy of `state` relative to the stable fixed point `reference`, per-unit.

    Kinetic term in the frame co-rotating at dw_sync, potential with the effective injections
    A_i - D_i dw_sync, and the hub-line coupling term. Phases are compared unwrapped.
    """
    check_dimension(spec, state)
    check_dimension(spec, reference)
    return float(_energy(spec, state.phases, state.freq_dev, reference.phases))


def energy_rate(spec: GridSpec, state: SystemState) -> float:
    """Analytic time derivative of the energy along the flow: -sum D_i (dw_i - dw_sync)^2."""
    check_dimension(spec, state)
    v = state.freq_dev - sync_frequency(spec)
    return float(-np.sum(np.asarray(spec.damping) * v ** 2))


@dataclass(frozen=True)
class EnergySlice:
    """Energy on a (rho, sigma) grid; energy[a, b] belongs to (rho[a], sigma[b])."""
    spoke: int
    rho: np.ndarray
    sigma: np.ndarray
    energy: np.ndarray

    @property
    def log_energy(self) -> np.ndarray:
        """Natural log of the energy with non-positive cells left missing (NaN)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.energy > 0, np.log(np.where(self.energy > 0, self.energy, 1.0)), np.nan)

    @property
    def missing_cells(self) -> int:
        return int(np.count_nonzero(~(self.energy > 0)))

    def minimizer(self) -> Tuple[float, float]:
        a, b = np.unravel_index(int(np.argmin(self.energy)), self.energy.shape)
        return float(self.rho[a]), float(self.sigma[b])


def _axis(bounds: Tuple[float, float], resolution: int) -> np.ndarray:
    """Uniform grid over bounds; a node within round-off of zero is snapped onto the centre."""
    axis = np.linspace(bounds[0], bounds[1], resolution)
    axis[np.abs(axis) <= 1e-12 * (abs(bounds[1] - bounds[0]) + 1.0)] = 0.0
    return axis


def energy_slice(spec: GridSpec, eq: EquilibriumSet | None = None,
                 rho_range: Tuple[float, float] = (-math.pi, math.pi),
                 sigma_range: Tuple[float, float] = (-1.0, 1.0),
                 resolution: int = 101, spoke: int = 2, strict: bool = False) -> EnergySlice:
    """
    Energy at (delta_s, dw_sync) + (rho e1, sigma e2), where e1 moves the absolute phase of `spoke`
    and e2 its frequency deviation.

    For spoke n (the phase reference) the phase offset is applied as -rho to every reduced phase.

    Raises:
        CriterionViolated: there is no stable fixed point to centre the slice on.
        NonPositiveEnergy: strict and a cell away from the centre has energy <= 0.
    """
    if spoke not in spec.spokes:
        raise IndexOutOfRange(f"spoke index {spoke} outside 2..{spec.n}")
    criterion = check_criterion(spec)
    if not criterion.satisfied:
        raise CriterionViolated(f"no stable fixed point: criterion margin of spoke {criterion.worst_spoke} "
                                f"is {min(criterion.margins):.6g}")
    eq = eq or enumerate_fixed_points(spec)
    report = classify_fixed_points(spec, eq)
    stable = eq.state_of(report.stable_point)

    rho = _axis(rho_range, resolution)
    sigma = _axis(sigma_range, resolution)
    n = spec.n

    phase_direction = -np.ones(n - 1) if spoke == n else np.eye(n - 1)[spoke - 1]
    freq_direction = np.eye(n)[spoke - 1]
    phases = stable.phases + rho[:, None, None] * phase_direction
    phases = np.broadcast_to(phases, (resolution, resolution, n - 1))
    freq = stable.freq_dev + sigma[None, :, None] * freq_direction
    freq = np.broadcast_to(freq, (resolution, resolution, n))
    energy = _energy(spec, phases, freq, stable.phases)

    if strict:
        off_centre = (np.abs(rho)[:, None] > 0) | (np.abs(sigma)[None, :] > 0)
        bad = off_centre & ~(energy > 0)
        if np.any(bad):
            a, b = np.argwhere(bad)[0]
            raise NonPositiveEnergy(
                f"energy {energy[a, b]:.6g} <= 0 at rho={rho[a]:.6g} rad, sigma={sigma[b]:.6g} rad/s"
            )
    return EnergySlice(spoke=spoke, rho=rho, sigma=sigma, energy=energy)
