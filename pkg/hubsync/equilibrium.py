import itertools
import math
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from hubsync.dynamics import balance_residual, make_power_balance
from hubsync.errors import NoConvergence, ResidualExceeded, SingularJacobian
from hubsync.grid_model import TWO_PI, GridSpec, SystemState, angle_difference, check_dimension, wrap_phase
from hubsync.settings import RESIDUAL_TOL, SolverSettings


class FixedPoint(BaseModel):
    """A synchronized fixed point: canonical phases in [0, 2*pi), its branch indices and its residual."""
    model_config = ConfigDict(frozen=True)

    point_id: int
    branch: Tuple[int, ...]
    phases: Tuple[float, ...]
    residual: float

    def state(self, delta_omega_sync: float) -> SystemState:
        n = len(self.phases) + 1
        return SystemState(phases=self.phases, freq_dev=np.full(n, delta_omega_sync))


class EquilibriumSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta_omega_sync: float
    mu: Tuple[float, ...]
    points: Tuple[FixedPoint, ...]
    exists: bool

    def point(self, point_id: int) -> FixedPoint:
        return next(p for p in self.points if p.point_id == point_id)

    def state_of(self, point_id: int) -> SystemState:
        return self.point(point_id).state(self.delta_omega_sync)


# ------------------------------------------------------------------
# Closed forms
# ------------------------------------------------------------------

def sync_frequency(spec: GridSpec) -> float:
    """Synchronization frequency deviation (sum A_j) / (sum D_j), rad/s."""
    return float(math.fsum(spec.injection) / math.fsum(spec.damping))


def absolute_sync_frequency(spec: GridSpec) -> float:
    """omega_ref + delta_omega_sync, rad/s."""
    return spec.omega_ref + sync_frequency(spec)


def effective_injections(spec: GridSpec) -> np.ndarray:
    """P_i = A_i - D_i * delta_omega_sync: the power each generator exports at synchrony."""
    return np.asarray(spec.injection, dtype=float) - np.asarray(spec.damping, dtype=float) * sync_frequency(spec)


def branch_parameters(spec: GridSpec) -> np.ndarray:
    """
    mu values, length n-1.

    Element 0 is mu_1 = (D_n dw_sync - A_n) / K_{n1}; element k (k >= 1) is mu_{k+1} for spoke k+1.
    """
    dw = sync_frequency(spec)
    damping = np.asarray(spec.damping, dtype=float)
    injection = np.asarray(spec.injection, dtype=float)
    coupling = np.asarray(spec.coupling, dtype=float)
    per_spoke = (damping[1:] * dw - injection[1:]) / coupling
    return np.concatenate([per_spoke[-1:], per_spoke[:-1]])


def closed_form_phases(mu: np.ndarray, branch: Tuple[int, ...]) -> np.ndarray:
    """
    Unwrapped phases of the fixed point on the given branch.

    delta_1 = (-1)^k asin(mu_1) + k pi and delta_i = delta_1 + (-1)^(j+1) asin(mu_i) - j pi.
    """
    k = branch[0]
    delta_1 = (-1) ** k * math.asin(mu[0]) + k * math.pi
    phases = [delta_1]
    for mu_i, j in zip(mu[1:], branch[1:]):
        phases.append(delta_1 + (-1) ** (j + 1) * math.asin(mu_i) - j * math.pi)
    return np.array(phases)


def enumerate_fixed_points(spec: GridSpec, tol: float = RESIDUAL_TOL) -> EquilibriumSet:
    """
    All closed-form synchronized fixed points, verified by residual.

    Returns exists=False with no points when some |mu| > 1. Coincident branches (|mu| = 1 exactly)
    are merged, so the count is 2^(n-1) only when every |mu| < 1.

    Raises:
        ResidualExceeded: a closed-form point fails verification.
    """
    dw = sync_frequency(spec)
    mu = branch_parameters(spec)
    if np.any(np.abs(mu) > 1.0):
        return EquilibriumSet(delta_omega_sync=dw, mu=tuple(mu), points=(), exists=False)

    points: List[FixedPoint] = []
    for branch in itertools.product((0, 1), repeat=spec.n - 1):
        phases = wrap_phase(closed_form_phases(mu, branch))
        if any(np.max(np.abs(angle_difference(phases, p.phases))) < 1e-12 for p in points):
            continue
        state = SystemState(phases=phases, freq_dev=np.full(spec.n, dw))
        residual = balance_residual(spec, state)
        if not residual < tol:
            raise ResidualExceeded(
                f"closed-form fixed point on branch {branch} has residual {residual:.3e} >= {tol:.1e}"
            )
        points.append(FixedPoint(point_id=len(points), branch=branch, phases=tuple(phases), residual=residual))

    return EquilibriumSet(delta_omega_sync=dw, mu=tuple(mu), points=tuple(points), exists=True)


def ghost_state(spec: GridSpec) -> SystemState:
    """
    The stable-branch point built from mu clipped to [-1, 1] at dw_sync.

    Equal to the stable fixed point when it exists; past the threshold it sits where the
    annihilated pair collided, which is the bottleneck of the rotation.
    """
    mu = np.clip(branch_parameters(spec), -1.0, 1.0)
    phases = wrap_phase(closed_form_phases(mu, (0,) * (spec.n - 1)))
    return SystemState(phases=phases, freq_dev=np.full(spec.n, sync_frequency(spec)))


# ------------------------------------------------------------------
# Newton refinement
# ------------------------------------------------------------------

def _balance_jacobian(spec: GridSpec, y: np.ndarray) -> np.ndarray:
    from hubsync.stability import jacobian

    J = jacobian(spec, SystemState.from_vector(y, spec.n))
    J[spec.n - 1:, :] *= spec.masses()[:, None]
    return J


def refine_fixed_point(spec: GridSpec, guess: SystemState, tol: float = RESIDUAL_TOL,
                       settings: SolverSettings | None = None) -> SystemState:
    """
    Newton iteration on the power-balance form of the vector field, starting at `guess`.

    A step that increases the residual max-norm is shortened by the damping factor until it does not.

    Raises:
        SingularJacobian: the Jacobian is singular at an iterate.
        NoConvergence: the residual is still above tol after the iteration cap.
    """
    check_dimension(spec, guess)
    settings = settings or SolverSettings()
    balance = make_power_balance(spec)
    x = guess.vector()
    r = balance(x)
    norm = float(np.max(np.abs(r)))
    if norm < tol:
        return guess

    for iteration in range(settings.newton_max_iters):
        J = _balance_jacobian(spec, x)
        try:
            if np.linalg.cond(J) > 1e14:
                raise np.linalg.LinAlgError("ill-conditioned")
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as e:
            raise SingularJacobian(f"singular Jacobian at Newton iterate {iteration}: {e}") from e

        step = 1.0
        x_new = x + dx
        r_new = balance(x_new)
        new_norm = float(np.max(np.abs(r_new)))
        while new_norm > norm and step > 1e-10:
            step *= settings.newton_damping
            x_new = x + step * dx
            r_new = balance(x_new)
            new_norm = float(np.max(np.abs(r_new)))

        x, r, norm = x_new, r_new, new_norm
        if norm < tol:
            return SystemState.from_vector(x, spec.n)

    raise NoConvergence(
        f"Newton did not converge in {settings.newton_max_iters} iterations (residual {norm:.3e}, tol {tol:.1e})"
    )


# ------------------------------------------------------------------
# Brute-force scan
# ------------------------------------------------------------------

def _reduced_balance(spec: GridSpec, delta_1: float, others: List[np.ndarray]) -> List[np.ndarray]:
    """Spoke balances P_i - K_i sin(delta_i - delta_1) at dw_sync for a slab of fixed delta_1."""
    p = effective_injections(spec)
    k = np.asarray(spec.coupling, dtype=float)
    balances = [p[i - 1] - k[i - 2] * np.sin(others[i - 2] - delta_1) for i in range(2, spec.n)]
    balances.append(p[-1] + k[-1] * np.sin(delta_1) * np.ones_like(others[0] if others else np.zeros(())))
    return balances


def scan_fixed_points(spec: GridSpec, resolution: int = 200, tol: float = RESIDUAL_TOL,
                      settings: SolverSettings | None = None) -> List[SystemState]:
    """
    Independent oracle for the closed forms: grid scan of the phase torus followed by Newton polish.

    Every grid node whose spoke balances are within the Lipschitz bound K_i * h of zero seeds
    refine_fixed_point; converged roots are merged at settings.duplicate_tol on the torus.
    Returns the distinct roots with canonical phases.
    """
    settings = settings or SolverSettings()
    h = TWO_PI / resolution
    grid = np.arange(resolution) * h
    dw = sync_frequency(spec)
    bound = np.asarray(spec.coupling, dtype=float) * h
    n = spec.n

    others = list(np.meshgrid(*([grid] * (n - 2)), indexing="ij")) if n > 2 else []
    roots: List[np.ndarray] = []
    for delta_1 in grid:
        balances = _reduced_balance(spec, delta_1, others)
        mask = np.ones(balances[0].shape, dtype=bool)
        for i, b in enumerate(balances):
            # balances[-1] is spoke n; the rest are spokes 2..n-1 in order
            limit = bound[-1] if i == len(balances) - 1 else bound[i]
            mask &= np.abs(b) <= limit
        for index in zip(*np.nonzero(mask)) if n > 2 else ([()] if mask.item() else []):
            seed = np.array([delta_1] + [o[index] for o in others])
            if any(np.max(np.abs(angle_difference(seed, r))) < 3 * h for r in roots):
                continue
            guess = SystemState(phases=seed, freq_dev=np.full(n, dw))
            try:
                root = refine_fixed_point(spec, guess, tol, settings)
            except NoConvergence:
                continue
            phases = wrap_phase(root.phases)
            if not any(np.linalg.norm(angle_difference(phases, r)) < settings.duplicate_tol for r in roots):
                roots.append(phases)

    return [SystemState(phases=r, freq_dev=np.full(n, dw)) for r in roots]
