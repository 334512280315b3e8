from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, List, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from hubsync.errors import SumIdentityViolated
from hubsync.grid_model import TWO_PI, GridSpec, SystemState, angle_difference, check_dimension, wrap_phase
from hubsync.rk_integrator import DormandPrince54, hermite_interpolate
from hubsync.settings import HORIZON_TIME_CONSTANTS, IntegratorSettings

if TYPE_CHECKING:
    from hubsync.equilibrium import EquilibriumSet


# ------------------------------------------------------------------
# Vector field
# ------------------------------------------------------------------

def make_power_balance(spec: GridSpec) -> Callable[[np.ndarray], np.ndarray]:
    """
    Returns g(y) = (delta_dot_1..delta_dot_{n-1}, imbalance_1..imbalance_n) for a flat state y,
    where imbalance_i = m_i * dw_dot_i is the per-unit power balance of generator i.
    """
    n = spec.n
    damping = np.asarray(spec.damping, dtype=float)
    injection = np.asarray(spec.injection, dtype=float)
    coupling = np.asarray(spec.coupling, dtype=float)

    def power_balance_vector(y: np.ndarray) -> np.ndarray:
        phases = y[:n - 1]
        freq = y[n - 1:]
        # delta_1 - delta_j for spokes j = 2..n, delta_n pinned at 0
        diffs = phases[0] - np.append(phases[1:], 0.0)
        flow = coupling * np.sin(diffs)
        imbalance = injection - damping * freq
        imbalance[0] -= flow.sum()
        imbalance[1:] += flow
        return np.concatenate([freq[:n - 1] - freq[n - 1], imbalance])

    return power_balance_vector


def make_rhs(spec: GridSpec) -> Callable[[float, np.ndarray], np.ndarray]:
    """Returns f(t, y), the reduced swing-equation vector field on flat state vectors."""
    n = spec.n
    balance = make_power_balance(spec)
    inverse_mass = 1.0 / spec.masses()

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        out = balance(y)
        out[n - 1:] *= inverse_mass
        return out

    return rhs


def vector_field(spec: GridSpec, state: SystemState) -> np.ndarray:
    """State derivative (delta_dot_1..delta_dot_{n-1}, dw_dot_1..dw_dot_n) of the reduced swing equations."""
    check_dimension(spec, state)
    return make_rhs(spec)(0.0, state.vector())


def power_balance(spec: GridSpec, state: SystemState) -> np.ndarray:
    """Phase rates (rad/s) and per-unit power imbalances m_i * dw_dot_i at the state."""
    check_dimension(spec, state)
    return make_power_balance(spec)(state.vector())


def balance_residual(spec: GridSpec, state: SystemState) -> float:
    """Max-norm of the power-balance form of the right-hand side; zero exactly at fixed points."""
    return float(np.max(np.abs(power_balance(spec, state))))


def sum_identity_defect(spec: GridSpec, states: np.ndarray, derivatives: np.ndarray) -> np.ndarray:
    """
    Relative defect of sum_i m_i dw_dot_i + sum_i D_i dw_i = sum_i A_i for each sample.

    The coupling terms cancel pairwise, so the defect is pure round-off for a correct right-hand side.
    """
    n = spec.n
    states = np.atleast_2d(states)
    derivatives = np.atleast_2d(derivatives)
    masses = spec.masses()
    damping = np.asarray(spec.damping)
    injection_total = float(np.sum(spec.injection))
    freq = states[:, n - 1:]
    lhs = derivatives[:, n - 1:] @ masses + freq @ damping
    scale = 1.0 + np.abs(freq) @ damping + float(np.sum(np.abs(spec.injection))) + float(np.sum(spec.coupling))
    return np.abs(lhs - injection_total) / scale


# ------------------------------------------------------------------
# Outcomes and trajectories
# ------------------------------------------------------------------

class ConvergedToFixedPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["converged"] = "converged"
    point_id: int
    time: float

    def summary(self) -> str:
        return f"outcome=converged point={self.point_id} time={self.time:.17g}"


class LimitCycle(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["limit_cycle"] = "limit_cycle"
    period: float
    windings: Tuple[int, ...]
    spoke_windings: Tuple[int, ...]

    def summary(self) -> str:
        return (f"outcome=limit_cycle period={self.period:.17g} "
                f"windings={list(self.windings)} spoke_windings={list(self.spoke_windings)}")


class Undecided(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["undecided"] = "undecided"
    horizon: float

    def summary(self) -> str:
        return f"outcome=undecided horizon={self.horizon:.17g}"


Outcome = Union[ConvergedToFixedPoint, LimitCycle, Undecided]


@dataclass(frozen=True)
class Trajectory:
    """Accepted integrator samples; `samples` rows are flat states with unwrapped phases."""
    n: int
    times: np.ndarray
    samples: np.ndarray
    outcome: Outcome
    steps_rejected: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def phases(self) -> np.ndarray:
        return self.samples[:, :self.n - 1]

    @property
    def wrapped_phases(self) -> np.ndarray:
        return wrap_phase(self.phases)

    @property
    def freq_dev(self) -> np.ndarray:
        return self.samples[:, self.n - 1:]

    @property
    def states(self) -> List[SystemState]:
        return [SystemState.from_vector(row, self.n) for row in self.samples]

    @property
    def final_state(self) -> SystemState:
        return SystemState.from_vector(self.samples[-1], self.n)


# ------------------------------------------------------------------
# Outcome detection
# ------------------------------------------------------------------

def _nearest_point_distances(samples: np.ndarray, n: int, target: EquilibriumSet) -> Tuple[np.ndarray, np.ndarray]:
    """Per sample: distance to the nearest enumerated fixed point and that point's id."""
    points = np.array([p.phases for p in target.points], dtype=float).reshape(len(target.points), n - 1)
    phases = samples[:, :n - 1]
    freq = samples[:, n - 1:]
    phase_part = np.linalg.norm(angle_difference(phases[:, None, :], points[None, :, :]), axis=2)
    freq_part = np.linalg.norm(freq - target.delta_omega_sync, axis=1)
    distances = phase_part + freq_part[:, None]
    ids = np.argmin(distances, axis=1)
    return distances[np.arange(len(ids)), ids], ids


def _dwell_start(times: np.ndarray, distances: np.ndarray, ids: np.ndarray, tol: float, dwell: float):
    """Index from which the samples stay within tol of one point for at least `dwell` seconds."""
    if len(times) == 0 or distances[-1] >= tol:
        return None
    outside = np.nonzero((distances >= tol) | (ids != ids[-1]))[0]
    start = int(outside[-1]) + 1 if outside.size else 0
    if times[-1] - times[start] >= dwell:
        return start
    return None


def detect_convergence(times: np.ndarray, samples: np.ndarray, target: EquilibriumSet,
                       tol: float, dwell: float):
    """
    Reports convergence once the window stays within `tol` of one enumerated fixed point for `dwell` seconds.

    Args:
        times: sample times of the window.
        samples: flat states, one row per sample.
        target: the enumerated fixed points to compare against.
        tol: distance threshold (torus phase distance + frequency distance).
        dwell: required dwell time, seconds.

    Returns:
        (point id, time the dwell started) or None when undecided.
    """
    times = np.asarray(times, dtype=float)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if not target.exists or not target.points or len(times) == 0:
        return None
    n = (samples.shape[1] + 1) // 2
    distances, ids = _nearest_point_distances(samples, n, target)
    start = _dwell_start(times, distances, ids, tol, dwell)
    if start is None:
        return None
    return target.points[int(ids[start])].point_id, float(times[start])


def _phase_at(times: np.ndarray, samples: np.ndarray, n: int, t: float) -> np.ndarray:
    """Unwrapped phases at time t by Hermite interpolation with the exact phase rates."""
    k = int(np.searchsorted(times, t))
    k = min(max(k, 1), len(times) - 1)
    y0, y1 = samples[k - 1], samples[k]
    rate0 = y0[n - 1:2 * n - 2] - y0[-1]
    rate1 = y1[n - 1:2 * n - 2] - y1[-1]
    return hermite_interpolate(times[k - 1], y0[:n - 1], rate0, times[k], y1[:n - 1], rate1, t)


def _first_arrivals(times: np.ndarray, samples: np.ndarray, n: int, column: int, direction: float,
                    max_crossings: int) -> List[float]:
    """Times at which the chosen phase first reaches successive multiples of 2*pi along `direction`."""
    psi = direction * samples[:, column]
    levels_reached = np.floor(np.maximum.accumulate(psi) / TWO_PI)
    jumps = np.nonzero(np.diff(levels_reached) > 0)[0] + 1
    crossings: List[float] = []
    for k in jumps[-max_crossings:]:
        level = levels_reached[k] * TWO_PI
        lo, hi = times[k - 1], times[k]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            value = direction * _phase_at(times, samples, n, mid)[column]
            if value >= level:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-13 * max(1.0, abs(hi)):
                break
        crossings.append(0.5 * (lo + hi))
    return crossings


def detect_limit_cycle(times: np.ndarray, samples: np.ndarray, spread_tol: float = 1e-4,
                       defect_tol: float = 1e-3, intervals_used: int = 4):
    """
    Poincare-section period and winding numbers of a rotating window.

    The section is the first arrival of the fastest-winding phase at each multiple of 2*pi in its
    direction of drift. The period is accepted once the trailing intervals agree to `spread_tol`
    relative spread; winding numbers must be within `defect_tol` of integers.

    Returns:
        (period, per-phase windings, hub-relative spoke windings) or None when not periodic.
    """
    times = np.asarray(times, dtype=float)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n = (samples.shape[1] + 1) // 2
    if len(times) < 3 or n < 2:
        return None
    net = samples[-1, :n - 1] - samples[0, :n - 1]
    column = int(np.argmax(np.abs(net)))
    if abs(net[column]) < 4 * TWO_PI:
        return None
    direction = 1.0 if net[column] > 0 else -1.0

    crossings = _first_arrivals(times, samples, n, column, direction, intervals_used + 1)
    if len(crossings) < 4:
        return None
    intervals = np.diff(crossings)
    mean = float(np.mean(intervals))
    if mean <= 0 or (np.max(intervals) - np.min(intervals)) / mean >= spread_tol:
        return None

    start, end = crossings[-2], crossings[-1]
    change = (_phase_at(times, samples, n, end) - _phase_at(times, samples, n, start)) / TWO_PI
    # hub-relative spoke phases: theta_i - theta_1 = delta_i - delta_1 (i < n), and -delta_1 for spoke n
    spoke_change = np.append(change[1:] - change[0], -change[0])
    windings = np.rint(change)
    spoke_windings = np.rint(spoke_change)
    if np.max(np.abs(change - windings)) >= defect_tol or np.max(np.abs(spoke_change - spoke_windings)) >= defect_tol:
        return None
    period = float(end - start)
    return period, tuple(int(w) for w in windings), tuple(int(w) for w in spoke_windings)


# ------------------------------------------------------------------
# Integration
# ------------------------------------------------------------------

def default_horizon(spec: GridSpec, settings: IntegratorSettings) -> float:
    if settings.horizon is not None:
        return settings.horizon
    return HORIZON_TIME_CONSTANTS * spec.max_time_constant()


def integrate(spec: GridSpec, init: SystemState, horizon: float | None = None,
              settings: IntegratorSettings | None = None, target: EquilibriumSet | None = None,
              stop_on_outcome: bool = True) -> Trajectory:
    """
    Integrates the reduced swing equations from `init` and classifies the outcome.

    Integration proceeds in chunks of one dwell time (or 1/100 of the horizon, whichever is longer);
    after each chunk the samples are checked for convergence to an enumerated fixed point and for a
    periodic rotation. With stop_on_outcome the integration ends at the first decided outcome.

    Raises:
        StepUnderflow: step control could not meet the tolerances.
        NonFiniteState: the state blew up.
        SumIdentityViolated: the power-sum identity broke along the trajectory.
    """
    from hubsync.equilibrium import enumerate_fixed_points

    check_dimension(spec, init)
    settings = settings or IntegratorSettings()
    horizon = horizon if horizon is not None else default_horizon(spec, settings)
    if horizon <= 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    if target is None:
        target = enumerate_fixed_points(spec)

    n = spec.n
    dwell = settings.dwell_time_constants * spec.max_time_constant()
    chunk = max(dwell, horizon / 100.0)
    stepper = DormandPrince54(make_rhs(spec), 0.0, init.vector(), settings.rtol, settings.atol,
                              min_step=settings.min_step)

    times: List[float] = [0.0]
    rows: List[np.ndarray] = [init.vector()]
    distances: List[np.ndarray] = []
    ids: List[np.ndarray] = []
    can_converge = target.exists and len(target.points) > 0
    if can_converge:
        d0, i0 = _nearest_point_distances(np.atleast_2d(rows[0]), n, target)
        distances.append(d0)
        ids.append(i0)

    outcome: Outcome | None = None
    steps_left = settings.max_steps
    while stepper.t < horizon and steps_left > 0:
        t_chunk = min(horizon, stepper.t + chunk)
        new_times, new_rows, new_derivs = stepper.advance_to(t_chunk, max_steps=steps_left)
        steps_left -= len(new_times)
        if not new_times:
            break
        times.extend(new_times)
        rows.extend(new_rows)

        if settings.check_sum_identity:
            defect = sum_identity_defect(spec, np.array(new_rows), np.array(new_derivs))
            worst = float(np.max(defect))
            if worst > settings.sum_identity_tol:
                raise SumIdentityViolated(f"power-sum identity defect {worst:.3e} near t={new_times[int(np.argmax(defect))]:.6g}")

        if can_converge:
            d, i = _nearest_point_distances(np.array(new_rows), n, target)
            distances.append(d)
            ids.append(i)
            all_times = np.asarray(times)
            start = _dwell_start(all_times, np.concatenate(distances), np.concatenate(ids),
                                 settings.convergence_distance(target.delta_omega_sync, n), dwell)
            if start is not None:
                point = target.points[int(np.concatenate(ids)[start])]
                outcome = ConvergedToFixedPoint(point_id=point.point_id, time=float(all_times[start]))

        if outcome is None:
            cycle = detect_limit_cycle(np.asarray(times), np.array(rows), settings.period_spread_tol,
                                       settings.winding_defect_tol)
            if cycle is not None:
                period, windings, spoke_windings = cycle
                outcome = LimitCycle(period=period, windings=windings, spoke_windings=spoke_windings)

        if outcome is not None and stop_on_outcome:
            break

    if outcome is None:
        outcome = Undecided(horizon=float(stepper.t))
    return Trajectory(
        n=n,
        times=np.asarray(times),
        samples=np.array(rows),
        outcome=outcome,
        steps_rejected=stepper.steps_rejected,
        diagnostics={"steps": stepper.steps_taken, "dwell": dwell},
    )


def self_convergence_defect(spec: GridSpec, init: SystemState, horizon: float,
                            settings: IntegratorSettings | None = None) -> float:
    """
    Max-norm difference of the final states integrated at the given and at halved tolerances.

    Both runs use the full horizon (no early stop), so the comparison is at the same time.
    """
    settings = settings or IntegratorSettings()
    coarse = integrate(spec, init, horizon, settings, stop_on_outcome=False)
    fine = integrate(spec, init, horizon, settings.halved(), stop_on_outcome=False)
    return float(np.max(np.abs(coarse.samples[-1] - fine.samples[-1])))


def perturbed_state(base: SystemState, scale: float, seed: int,
                    freq_scale: float = 0.0) -> SystemState:
    """Base state with seeded Gaussian perturbations of the phases (and optionally frequencies)."""
    rng = np.random.default_rng(seed)
    phases = base.phases + rng.normal(0.0, scale, size=base.phases.size)
    freq = base.freq_dev + rng.normal(0.0, freq_scale, size=base.freq_dev.size) if freq_scale > 0 else base.freq_dev
    return SystemState(phases=phases, freq_dev=freq)

