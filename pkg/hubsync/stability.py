from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from hubsync.equilibrium import EquilibriumSet, sync_frequency
from hubsync.errors import (
    DegenerateSums,
    IndexOutOfRange,
    InconsistentWithCriterion,
    NoConvergence,
    NonFiniteState,
)
from hubsync.grid_model import GridSpec, SystemState, check_dimension, validate
from hubsync.settings import classification_band

Regime = Literal["adequate", "over_damped", "under_damped"]
Classification = Literal["stable", "unstable", "marginal"]


# ------------------------------------------------------------------
# Critical-coupling criterion
# ------------------------------------------------------------------

class CriterionReport(BaseModel):
    """Per-spoke margins K_1i - |D_i dw_sync - A_i| for spokes 2..n, in order."""
    model_config = ConfigDict(frozen=True)

    delta_omega_sync: float
    margins: Tuple[float, ...]
    satisfied: bool

    def margin_of(self, spoke: int) -> float:
        if not 2 <= spoke <= len(self.margins) + 1:
            raise IndexOutOfRange(f"spoke index {spoke} outside 2..{len(self.margins) + 1}")
        return self.margins[spoke - 2]

    @property
    def worst_spoke(self) -> int:
        return int(np.argmin(self.margins)) + 2


def check_criterion(spec: GridSpec) -> CriterionReport:
    """Evaluates |D_i dw_sync - A_i| < K_1i for every spoke; strict inequality is required."""
    dw = sync_frequency(spec)
    damping = np.asarray(spec.damping[1:], dtype=float)
    injection = np.asarray(spec.injection[1:], dtype=float)
    margins = np.asarray(spec.coupling, dtype=float) - np.abs(damping * dw - injection)
    return CriterionReport(
        delta_omega_sync=dw,
        margins=tuple(float(m) for m in margins),
        satisfied=bool(np.all(margins > 0)),
    )


def spoke_regimes(spec: GridSpec) -> Dict[int, Regime]:
    """
    Per spoke: adequate inside the criterion, over_damped when D_i dw_sync - A_i >= K_1i
    (the spoke lags the grid), under_damped when it is <= -K_1i (the spoke runs ahead).
    """
    dw = sync_frequency(spec)
    regimes: Dict[int, Regime] = {}
    for spoke in spec.spokes:
        load = spec.damping[spoke - 1] * dw - spec.injection[spoke - 1]
        k = spec.coupling_of(spoke)
        if load >= k:
            regimes[spoke] = "over_damped"
        elif load <= -k:
            regimes[spoke] = "under_damped"
        else:
            regimes[spoke] = "adequate"
    return regimes


def rogue_spokes(spec: GridSpec) -> List[int]:
    """Spokes whose damping/injection pair lies outside the synchronization wedge."""
    return [spoke for spoke, regime in spoke_regimes(spec).items() if regime != "adequate"]


class SyncDeviationBand(BaseModel):
    model_config = ConfigDict(frozen=True)

    lo: float
    hi: float
    relative_lo: float
    relative_hi: float


def sync_deviation_band(spec: GridSpec) -> Optional[SyncDeviationBand]:
    """
    Range of dw_sync (rad/s) over which every spoke satisfies the criterion, and the same range
    relative to omega_ref. None when the per-spoke intervals do not overlap.
    """
    damping = np.asarray(spec.damping[1:], dtype=float)
    injection = np.asarray(spec.injection[1:], dtype=float)
    coupling = np.asarray(spec.coupling, dtype=float)
    lo = float(np.max((injection - coupling) / damping))
    hi = float(np.min((injection + coupling) / damping))
    if lo >= hi:
        return None
    return SyncDeviationBand(lo=lo, hi=hi, relative_lo=lo / spec.omega_ref, relative_hi=hi / spec.omega_ref)


def admits_spoke(spec: GridSpec, inertia: float, damping: float, injection: float,
                 coupling: float) -> Tuple[GridSpec, CriterionReport]:
    """
    Appends a spoke to the grid and re-evaluates the criterion for every spoke.

    The shifted dw_sync can push an existing spoke out of the wedge even when the new one is fine.
    """
    extended = validate(GridSpec(
        n=spec.n + 1,
        omega_ref=spec.omega_ref,
        inertia=spec.inertia + (float(inertia),),
        damping=spec.damping + (float(damping),),
        injection=spec.injection + (float(injection),),
        coupling=spec.coupling + (float(coupling),),
    ))
    return extended, check_criterion(extended)


# ------------------------------------------------------------------
# Linearization
# ------------------------------------------------------------------

def jacobian(spec: GridSpec, state: SystemState) -> np.ndarray:
    """
    Analytic Jacobian of vector_field with respect to (delta_1..delta_{n-1}, dw_1..dw_n).

    Rows 0..n-2 are the phase rates, row n-1 the hub, rows n..2n-2 spokes 2..n.
    """
    check_dimension(spec, state)
    n = spec.n
    c = 1.0 / spec.masses()
    coupling = np.asarray(spec.coupling, dtype=float)
    damping = np.asarray(spec.damping, dtype=float)
    phases = state.phases
    # stiffness of each hub line, spokes 2..n (delta_n = 0)
    stiffness = coupling * np.cos(phases[0] - np.append(phases[1:], 0.0))

    J = np.zeros((2 * n - 1, 2 * n - 1))
    for i in range(n - 1):
        J[i, n - 1 + i] = 1.0
        J[i, 2 * n - 2] -= 1.0

    hub = n - 1
    J[hub, 0] = -c[0] * stiffness.sum()
    J[hub, 1:n - 1] = c[0] * stiffness[:-1]

    for spoke_pos in range(1, n):
        row = n - 1 + spoke_pos
        J[row, 0] += c[spoke_pos] * stiffness[spoke_pos - 1]
        if spoke_pos < n - 1:
            J[row, spoke_pos] -= c[spoke_pos] * stiffness[spoke_pos - 1]

    for i in range(n):
        J[n - 1 + i, n - 1 + i] = -c[i] * damping[i]
    return J


def spectrum(J: np.ndarray) -> np.ndarray:
    """All eigenvalues of a dense real matrix, sorted by real part (then imaginary part) descending."""
    J = np.asarray(J, dtype=float)
    if not np.all(np.isfinite(J)):
        raise NonFiniteState("matrix has non-finite entries")
    try:
        eigenvalues = np.linalg.eigvals(J)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"eigenvalue iteration did not converge: {e}") from e
    order = np.lexsort((-eigenvalues.imag, -eigenvalues.real))
    return eigenvalues[order]


# ------------------------------------------------------------------
# Classification
# ------------------------------------------------------------------

class PointStability(BaseModel):
    model_config = ConfigDict(frozen=True)

    point_id: int
    eigen_real: Tuple[float, ...]
    eigen_imag: Tuple[float, ...]
    max_real: float
    classification: Classification

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.asarray(self.eigen_real) + 1j * np.asarray(self.eigen_imag)


class StabilityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    criterion: CriterionReport
    points: Tuple[PointStability, ...]
    stable_point: Optional[int]
    regimes: Dict[int, Regime]

    @property
    def rogue_spokes(self) -> List[int]:
        return [spoke for spoke, regime in self.regimes.items() if regime != "adequate"]

    def of(self, point_id: int) -> PointStability:
        return next(p for p in self.points if p.point_id == point_id)


def _classify(max_real: float, band: float) -> Classification:
    if max_real < -band:
        return "stable"
    if max_real > band:
        return "unstable"
    return "marginal"


def classify_fixed_points(spec: GridSpec, eq: EquilibriumSet, tol: float | None = None) -> StabilityReport:
    """
    Spectrum and classification of every enumerated fixed point.

    Args:
        tol: half-width of the marginal band for the largest real part; defaults to 1e-9 * omega_ref.

    Raises:
        InconsistentWithCriterion: the criterion holds but the stable count is not exactly one.
    """
    band = classification_band(spec.omega_ref) if tol is None else tol
    criterion = check_criterion(spec)
    points: List[PointStability] = []
    for point in eq.points:
        eigenvalues = spectrum(jacobian(spec, point.state(eq.delta_omega_sync)))
        max_real = float(eigenvalues[0].real)
        points.append(PointStability(
            point_id=point.point_id,
            eigen_real=tuple(float(v) for v in eigenvalues.real),
            eigen_imag=tuple(float(v) for v in eigenvalues.imag),
            max_real=max_real,
            classification=_classify(max_real, band),
        ))

    stable = [p.point_id for p in points if p.classification == "stable"]
    if criterion.satisfied and len(stable) != 1:
        raise InconsistentWithCriterion(
            f"criterion holds (worst margin {min(criterion.margins):.3e}) but {len(stable)} point(s) "
            f"classified stable; tighten the classification band or check the tolerances"
        )
    return StabilityReport(
        criterion=criterion,
        points=tuple(points),
        stable_point=stable[0] if len(stable) == 1 else None,
        regimes=spoke_regimes(spec),
    )


# ------------------------------------------------------------------
# Stability boundary in the (D_i, A_i) plane
# ------------------------------------------------------------------

class BoundaryLines(BaseModel):
    """
    The wedge lower_intercept + lower_slope * D_i < A_i < upper_intercept + upper_slope * D_i
    inside which spoke i satisfies the criterion, all other parameters fixed.
    """
    model_config = ConfigDict(frozen=True)

    spoke: int
    coupling: float
    sum_injection: float
    sum_damping: float
    lower_intercept: float
    lower_slope: float
    upper_intercept: float
    upper_slope: float

    def at(self, damping) -> Tuple[np.ndarray, np.ndarray]:
        """Lower and upper boundary injections at the given damping value(s)."""
        d = np.asarray(damping, dtype=float)
        return self.lower_intercept + self.lower_slope * d, self.upper_intercept + self.upper_slope * d

    def contains(self, damping: float, injection: float) -> bool:
        lower, upper = self.at(damping)
        return bool(lower < injection < upper)


def stability_boundary(spec: GridSpec, spoke: int) -> BoundaryLines:
    """
    Closed-form boundary lines A_i = -/+K + D_i (S_A -/+ K) / S_D for spoke i,
    with S_A and S_D the injection and damping sums over all other generators.

    Raises:
        IndexOutOfRange: spoke is not in 2..n.
        DegenerateSums: S_D is not positive.
    """
    k = spec.coupling_of(spoke)
    s_a = float(np.sum(spec.injection) - spec.injection[spoke - 1])
    s_d = float(np.sum(spec.damping) - spec.damping[spoke - 1])
    if not s_d > 0:
        raise DegenerateSums(f"damping sum over generators other than {spoke} is {s_d}, must be > 0")
    return BoundaryLines(
        spoke=spoke,
        coupling=k,
        sum_injection=s_a,
        sum_damping=s_d,
        lower_intercept=-k,
        lower_slope=(s_a - k) / s_d,
        upper_intercept=k,
        upper_slope=(s_a + k) / s_d,
    )
