import math

from pydantic import BaseModel, ConfigDict, Field

# ------------------------------------------------------------------
# Solver defaults
# ------------------------------------------------------------------
RESIDUAL_TOL = 1e-10
NEWTON_MAX_ITERS = 50
NEWTON_DAMPING = 0.5
DUPLICATE_TOL = 1e-6

RTOL = 1e-8
ATOL = 1e-10
HORIZON_TIME_CONSTANTS = 2000.0
DWELL_TIME_CONSTANTS = 100.0
CLASSIFICATION_BAND = 1e-9  # times omega_ref


class SolverSettings(BaseModel):
    """Tolerances for closed-form verification and Newton refinement."""
    model_config = ConfigDict(frozen=True)

    residual_tol: float = Field(default=RESIDUAL_TOL, gt=0)
    newton_max_iters: int = Field(default=NEWTON_MAX_ITERS, ge=1)
    newton_damping: float = Field(default=NEWTON_DAMPING, gt=0, lt=1)
    duplicate_tol: float = Field(default=DUPLICATE_TOL, gt=0)


class IntegratorSettings(BaseModel):
    """
    Step control and outcome detection for trajectory integration.

    horizon=None means HORIZON_TIME_CONSTANTS times the slowest damping time constant of the grid.
    """
    model_config = ConfigDict(frozen=True)

    rtol: float = Field(default=RTOL, gt=0)
    atol: float = Field(default=ATOL, gt=0)
    horizon: float | None = Field(default=None, gt=0)
    max_horizon: float = Field(default=1e6, gt=0)
    min_step: float = Field(default=1e-12, gt=0)
    max_steps: int = Field(default=5_000_000, ge=1)
    dwell_time_constants: float = Field(default=DWELL_TIME_CONSTANTS, gt=0)
    convergence_tol: float = Field(default=1e-6, gt=0)
    tolerance_multiple: float = Field(default=10.0, ge=0)
    period_spread_tol: float = Field(default=1e-4, gt=0)
    winding_defect_tol: float = Field(default=1e-3, gt=0)
    check_sum_identity: bool = True
    sum_identity_tol: float = Field(default=1e-9, gt=0)

    def convergence_distance(self, delta_omega_sync: float, n: int) -> float:
        """
        Distance below which a state counts as sitting on a fixed point.

        Accepted steps only pin each component to about atol + rtol*|y|, so the frequency part of the
        distance cannot settle below that floor when delta_omega_sync is large.
        """
        floor = self.atol + self.rtol * abs(delta_omega_sync)
        return self.convergence_tol + self.tolerance_multiple * math.sqrt(n) * floor

    def halved(self) -> "IntegratorSettings":
        """Same settings with both error tolerances halved."""
        return self.model_copy(update={"rtol": self.rtol / 2, "atol": self.atol / 2})


def classification_band(omega_ref: float) -> float:
    """Half-width of the band around zero in which an eigenvalue real part counts as marginal."""
    return CLASSIFICATION_BAND * omega_ref
