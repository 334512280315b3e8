import math
import re
from functools import partial
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from hubsync.dynamics import LimitCycle, default_horizon, integrate
from hubsync.equilibrium import EquilibriumSet, branch_parameters, enumerate_fixed_points, ghost_state
from hubsync.errors import (
    HubSyncError,
    InsufficientCyclePoints,
    NoConvergence,
    NotOnCyclicSide,
    SameOutcomeAtEndpoints,
    UsageError,
)
from hubsync.grid_model import GridSpec, SystemState, angle_difference, validate
from hubsync.settings import IntegratorSettings
from hubsync.stability import check_criterion, classify_fixed_points
from hubsync.util import parallel_map, print_warning

InitPolicy = Literal["continuation", "closed_form"]

PARAMETER_ALIASES = {"K": "coupling", "D": "damping", "A": "injection", "H": "inertia"}
PARAMETER_PATTERN = re.compile(r"^\s*(coupling|damping|injection|inertia|K|D|A|H)\s*\[\s*(\d+)\s*\]\s*$")

# fraction of the distance to the nearest other fixed point used to kick a run off the stable point
START_OFFSET = 0.05
HORIZON_SAFETY = 20.0


class SweepParameter(BaseModel):
    """One per-generator parameter, e.g. damping[10] (1-based; coupling is indexed by spoke)."""
    model_config = ConfigDict(frozen=True)

    field: Literal["coupling", "damping", "injection", "inertia"]
    index: int

    @classmethod
    def parse(cls, text: str) -> "SweepParameter":
        match = PARAMETER_PATTERN.match(text)
        if not match:
            raise UsageError(f"parameter must look like coupling[3], damping[2] or injection[1], got {text!r}")
        field = PARAMETER_ALIASES.get(match.group(1), match.group(1))
        return cls(field=field, index=int(match.group(2)))

    @property
    def label(self) -> str:
        return f"{self.field}[{self.index}]"

    @property
    def positive(self) -> bool:
        return self.field != "injection"

    def current(self, spec: GridSpec) -> float:
        if self.field == "coupling":
            return spec.coupling_of(self.index)
        return getattr(spec, self.field)[self.index - 1]

    def apply(self, spec: GridSpec, value: float) -> GridSpec:
        return spec.with_value(self.field, self.index, value)


# ------------------------------------------------------------------
# Analytic thresholds
# ------------------------------------------------------------------

def worst_margin(spec: GridSpec, parameter: SweepParameter, value: float) -> float:
    return min(check_criterion(parameter.apply(spec, value)).margins)


def _bisect_root(f: Callable[[float], float], a: float, b: float, fa: float) -> float:
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def analytic_thresholds(spec: GridSpec, parameter: SweepParameter, lo: float, hi: float,
                        samples: int = 2001) -> List[float]:
    """
    Parameter values in [lo, hi] where the worst criterion margin changes sign.

    The margin is sampled on a uniform grid and every sign change is refined by bisection to
    machine precision. Tangential zeros are not reported.
    """
    margin = partial(worst_margin, spec, parameter)
    grid = np.linspace(lo, hi, samples)
    values = [margin(float(p)) for p in grid]
    roots: List[float] = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(_bisect_root(margin, float(a), float(b), fa))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def nearest_threshold(spec: GridSpec, parameter: SweepParameter, max_doublings: int = 30) -> float:
    """
    The analytic threshold closest to the parameter's current value, searched in a window that
    doubles until a sign change of the worst margin is found.

    Raises:
        NoConvergence: no threshold within the largest window.
    """
    current = parameter.current(spec)
    width = max(abs(current), 1e-3)
    for _ in range(max_doublings):
        lo, hi = current - width, current + width
        if parameter.positive:
            lo = max(lo, 1e-12 * max(abs(current), 1.0))
        roots = analytic_thresholds(spec, parameter, lo, hi, samples=401)
        if roots:
            return min(roots, key=lambda r: abs(r - current))
        width *= 2.0
    raise NoConvergence(f"no synchronization threshold for {parameter.label} within +/-{width / 2:.3g} of {current:.6g}")


# ------------------------------------------------------------------
# Probes
# ------------------------------------------------------------------

def slip_time(spec: GridSpec) -> float:
    """2*pi times the slowest of the inertial, damping and coupling time scales of the grid."""
    masses = spec.masses()
    damping = np.asarray(spec.damping, dtype=float)
    stiffness = np.concatenate([[np.sum(spec.coupling)], spec.coupling])
    scales = np.concatenate([masses / damping, damping / stiffness, np.sqrt(masses / stiffness)])
    return 2.0 * math.pi * float(np.max(scales))


def threshold_distance(spec: GridSpec) -> float:
    """|1 - max |mu||: relative distance from the saddle-node, used to size horizons."""
    return abs(1.0 - float(np.max(np.abs(branch_parameters(spec)))))


def probe_horizon(spec: GridSpec, settings: IntegratorSettings) -> float:
    """
    Integration horizon for a run near the threshold: the default horizon, stretched to
    HORIZON_SAFETY slip times times eps^(-1/2) and capped at settings.max_horizon.
    """
    eps = max(threshold_distance(spec), 1e-12)
    stretched = HORIZON_SAFETY * slip_time(spec) / math.sqrt(eps)
    return min(settings.max_horizon, max(default_horizon(spec, settings), stretched))


def _stable_point_state(spec: GridSpec, eq: EquilibriumSet) -> Tuple[SystemState, float]:
    """Stable fixed point and its torus distance to the nearest other fixed point."""
    report = classify_fixed_points(spec, eq)
    stable = eq.point(report.stable_point)
    others = [p for p in eq.points if p.point_id != stable.point_id]
    gap = min((float(np.linalg.norm(angle_difference(stable.phases, p.phases))) for p in others), default=0.0)
    return stable.state(eq.delta_omega_sync), gap


def starting_state(spec: GridSpec, seed: int = 0, offset: float = START_OFFSET) -> SystemState:
    """
    Initial condition for a probe: the stable fixed point moved by `offset` times the distance to
    the nearest other fixed point in a seeded random phase direction, or, when no stable point
    exists, the ghost of the annihilated pair.
    """
    if not check_criterion(spec).satisfied:
        return ghost_state(spec)
    stable, gap = _stable_point_state(spec, enumerate_fixed_points(spec))
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=stable.phases.size)
    direction /= np.linalg.norm(direction)
    return SystemState(phases=stable.phases + offset * gap * direction, freq_dev=stable.freq_dev)


def is_cyclic(spec: GridSpec, settings: IntegratorSettings, seed: int = 0) -> bool:
    """Outcome predicate: a limit cycle is detected within the probe horizon."""
    trajectory = integrate(spec, starting_state(spec, seed), probe_horizon(spec, settings), settings)
    return isinstance(trajectory.outcome, LimitCycle)


# ------------------------------------------------------------------
# Sweep
# ------------------------------------------------------------------

class SweepPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    margin: float
    outcome: Literal["converged", "limit_cycle", "undecided", "error"]
    point_id: Optional[int] = None
    period: Optional[float] = None
    windings: Optional[Tuple[int, ...]] = None
    spoke_windings: Optional[Tuple[int, ...]] = None
    error: Optional[str] = None

    @property
    def cyclic(self) -> bool:
        return self.outcome == "limit_cycle"


class SweepResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    parameter: str
    init_policy: InitPolicy
    points: Tuple[SweepPoint, ...]

    @property
    def values(self) -> List[float]:
        return [p.value for p in self.points]

    @property
    def outcomes(self) -> List[str]:
        return [p.outcome for p in self.points]

    def transitions(self) -> List[Tuple[float, float]]:
        """Consecutive value pairs across which the cyclic/non-cyclic outcome flips."""
        return [(a.value, b.value) for a, b in zip(self.points[:-1], self.points[1:]) if a.cyclic != b.cyclic]


def _run_point(spec: GridSpec, parameter: SweepParameter, value: float, init: SystemState | None,
               settings: IntegratorSettings, seed: int) -> Tuple[SweepPoint, SystemState | None]:
    """Integrates one sweep value. Domain errors are recorded on the point instead of raised."""
    try:
        probe = validate(parameter.apply(spec, value))
        margin = min(check_criterion(probe).margins)
        start = init if init is not None else starting_state(probe, seed)
        trajectory = integrate(probe, start, probe_horizon(probe, settings), settings)
    except HubSyncError as e:
        print_warning(f"Sweep point {parameter.label}={value:.17g} failed: {e}")
        return SweepPoint(value=value, margin=float("nan"), outcome="error", error=str(e)), None

    outcome = trajectory.outcome
    if isinstance(outcome, LimitCycle):
        point = SweepPoint(value=value, margin=margin, outcome="limit_cycle", period=outcome.period,
                           windings=outcome.windings, spoke_windings=outcome.spoke_windings)
    elif outcome.kind == "converged":
        point = SweepPoint(value=value, margin=margin, outcome="converged", point_id=outcome.point_id)
    else:
        point = SweepPoint(value=value, margin=margin, outcome="undecided")
    return point, trajectory.final_state


def _closed_form_point(job: Tuple[GridSpec, SweepParameter, float, IntegratorSettings, int]) -> SweepPoint:
    spec, parameter, value, settings, seed = job
    return _run_point(spec, parameter, value, None, settings, seed)[0]


def sweep(spec: GridSpec, parameter: SweepParameter, values: Sequence[float],
          init_policy: InitPolicy = "continuation", settings: IntegratorSettings | None = None,
          seed: int = 0, jobs: int = 1) -> SweepResult:
    """
    Integrates the grid at each parameter value and records the outcome.

    continuation starts each value from the final state of the previous one (the first value
    starts like closed_form); closed_form starts every value independently from a seeded kick off
    its stable fixed point, or from the ghost state when there is none, and can run in parallel.
    """
    settings = settings or IntegratorSettings()
    values = [float(v) for v in values]
    if init_policy == "closed_form":
        jobs_list = [(spec, parameter, v, settings, seed + k) for k, v in enumerate(values)]
        points = parallel_map(_closed_form_point, jobs_list, jobs)
        return SweepResult(parameter=parameter.label, init_policy=init_policy, points=tuple(points))

    if jobs > 1:
        print_warning("continuation sweeps run sequentially; ignoring --jobs")
    points: List[SweepPoint] = []
    state: SystemState | None = None
    for k, value in enumerate(values):
        point, final = _run_point(spec, parameter, value, state, settings, seed + k)
        points.append(point)
        state = final
    return SweepResult(parameter=parameter.label, init_policy=init_policy, points=tuple(points))


# ------------------------------------------------------------------
# Bracketing
# ------------------------------------------------------------------

class BracketResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    parameter: str
    critical: float
    lo: float
    hi: float
    probes: int
    analytic: Optional[float]
    relative_error: Optional[float]


def bracket_threshold(spec: GridSpec, parameter: SweepParameter, lo: float, hi: float, tol: float = 1e-5,
                      settings: IntegratorSettings | None = None, seed: int = 0) -> BracketResult:
    """
    Bisection on "a limit cycle is detected" until the bracket is narrower than tol relative to
    its larger endpoint. The midpoint is compared with the analytic threshold inside [lo, hi].

    Raises:
        SameOutcomeAtEndpoints: the outcome does not differ at lo and hi.
    """
    settings = settings or IntegratorSettings()
    if lo == hi:
        raise SameOutcomeAtEndpoints(f"empty bracket: lo = hi = {lo:.17g}")
    lo, hi = min(lo, hi), max(lo, hi)

    def predicate(value: float) -> bool:
        return is_cyclic(validate(parameter.apply(spec, value)), settings, seed)

    cyclic_lo = predicate(lo)
    cyclic_hi = predicate(hi)
    probes = 2
    if cyclic_lo == cyclic_hi:
        state = "limit cycle" if cyclic_lo else "no limit cycle"
        raise SameOutcomeAtEndpoints(f"{parameter.label}: {state} at both {lo:.17g} and {hi:.17g}")

    while hi - lo > tol * max(abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        probes += 1
        if predicate(mid) == cyclic_lo:
            lo = mid
        else:
            hi = mid

    critical = 0.5 * (lo + hi)
    roots = analytic_thresholds(spec, parameter, min(lo, critical) - (hi - lo), max(hi, critical) + (hi - lo))
    analytic = min(roots, key=lambda r: abs(r - critical)) if roots else None
    relative_error = abs(critical - analytic) / abs(analytic) if analytic is not None and analytic != 0.0 else None
    return BracketResult(parameter=parameter.label, critical=critical, lo=lo, hi=hi, probes=probes,
                         analytic=analytic, relative_error=relative_error)


# ------------------------------------------------------------------
# Period scaling
# ------------------------------------------------------------------

class ScalingResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    parameter: str
    critical: float
    side: Literal["above", "below"]
    eps: Tuple[float, ...]
    periods: Tuple[float, ...]
    exponent: float
    prefactor: float


def _cyclic_side(spec: GridSpec, parameter: SweepParameter, critical: float, eps: float) -> Literal["above", "below"]:
    above = not check_criterion(parameter.apply(spec, critical * (1 + eps))).satisfied
    below = not check_criterion(parameter.apply(spec, critical * (1 - eps))).satisfied
    if above == below:
        raise NotOnCyclicSide(
            f"{parameter.label}: criterion is {'violated' if above else 'satisfied'} on both sides of "
            f"{critical:.17g} at eps={eps:g}"
        )
    return "above" if above else "below"


def period_scaling(spec: GridSpec, parameter: SweepParameter, eps_values: Sequence[float],
                   critical: float | None = None, settings: IntegratorSettings | None = None,
                   jobs: int = 1) -> ScalingResult:
    """
    Limit-cycle periods at parameter = critical * (1 +/- eps) on the side where the criterion is
    violated, and the least-squares fit ln T = exponent * ln eps + ln prefactor.

    Raises:
        InsufficientCyclePoints: eps spans under two decades or fewer than three periods were measured.
        NotOnCyclicSide: the criterion holds (or fails) on both sides of the threshold.
    """
    settings = settings or IntegratorSettings()
    eps_values = sorted(float(e) for e in eps_values)
    if not eps_values or eps_values[0] <= 0:
        raise UsageError("eps values must be positive")
    if eps_values[-1] / eps_values[0] < 100.0:
        raise InsufficientCyclePoints(
            f"eps values span {eps_values[0]:g}..{eps_values[-1]:g}, at least two decades are needed"
        )
    critical = nearest_threshold(spec, parameter) if critical is None else float(critical)

    side = _cyclic_side(spec, parameter, critical, eps_values[-1])
    for eps in eps_values:
        if _cyclic_side(spec, parameter, critical, eps) != side:
            raise NotOnCyclicSide(f"{parameter.label}: the cyclic side flips between eps values")
    sign = 1.0 if side == "above" else -1.0

    specs = [validate(parameter.apply(spec, critical * (1 + sign * eps))) for eps in eps_values]
    outcomes = parallel_map(partial(_cycle_period, settings=settings), specs, jobs)

    measured = [(eps, period) for eps, period in zip(eps_values, outcomes) if period is not None]
    for eps, period in zip(eps_values, outcomes):
        if period is None:
            print_warning(f"No limit cycle detected at eps={eps:g}; dropped from the fit")
    if len(measured) < 3:
        raise InsufficientCyclePoints(f"only {len(measured)} period(s) measured, at least 3 are needed")

    eps_arr = np.array([m[0] for m in measured])
    periods = np.array([m[1] for m in measured])
    exponent, log_prefactor = np.polyfit(np.log(eps_arr), np.log(periods), 1)
    return ScalingResult(
        parameter=parameter.label,
        critical=critical,
        side=side,
        eps=tuple(float(e) for e in eps_arr),
        periods=tuple(float(t) for t in periods),
        exponent=float(exponent),
        prefactor=float(np.exp(log_prefactor)),
    )


def _cycle_period(spec: GridSpec, settings: IntegratorSettings) -> float | None:
    trajectory = integrate(spec, ghost_state(spec), probe_horizon(spec, settings), settings)
    outcome = trajectory.outcome
    return outcome.period if isinstance(outcome, LimitCycle) else None
