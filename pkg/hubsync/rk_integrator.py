from typing import Callable, List

import numpy as np

from hubsync.errors import NonFiniteState, StepUnderflow

RHS = Callable[[float, np.ndarray], np.ndarray]


class DormandPrince54:
    """
    Dormand-Prince 5(4) embedded pair with FSAL and per-step error control.

    The 5th order solution is propagated; the difference to the embedded 4th order solution
    estimates the local error (Hairer, Norsett & Wanner, Nonstiff Problems, p. 178).
    """

    C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
    A = (
        (),
        (1 / 5,),
        (3 / 40, 9 / 40),
        (44 / 45, -56 / 15, 32 / 9),
        (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
        (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
        (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
    )
    B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
    B_HAT = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
    E = B - B_HAT

    ORDER = 5
    SAFETY = 0.9
    MIN_FACTOR = 0.2
    MAX_FACTOR = 5.0

    def __init__(self, rhs: RHS, t0: float, y0: np.ndarray, rtol: float, atol: float,
                 min_step: float = 1e-12, max_step: float = np.inf):
        self.rhs = rhs
        self.rtol = rtol
        self.atol = atol
        self.min_step = min_step
        self.max_step = max_step
        self.t = float(t0)
        self.y = np.array(y0, dtype=float)
        self.f = np.asarray(rhs(self.t, self.y), dtype=float)
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.f))):
            raise NonFiniteState(f"non-finite initial state or derivative at t={self.t}")
        self.h = self._initial_step()
        self.steps_taken = 0
        self.steps_rejected = 0

    def _error_norm(self, error: np.ndarray, y_old: np.ndarray, y_new: np.ndarray) -> float:
        scale = self.atol + self.rtol * np.maximum(np.abs(y_old), np.abs(y_new))
        return float(np.sqrt(np.mean((error / scale) ** 2)))

    def _initial_step(self) -> float:
        """Starting step size heuristic (Hairer, Norsett & Wanner, algorithm II.4)."""
        scale = self.atol + self.rtol * np.abs(self.y)
        d0 = np.sqrt(np.mean((self.y / scale) ** 2))
        d1 = np.sqrt(np.mean((self.f / scale) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        y1 = self.y + h0 * self.f
        f1 = self.rhs(self.t + h0, y1)
        d2 = np.sqrt(np.mean(((f1 - self.f) / scale) ** 2)) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1.0 / self.ORDER)
        return float(min(100 * h0, h1, self.max_step))

    def _attempt(self, h: float):
        t, y = self.t, self.y
        k = [self.f]
        for stage in range(1, 7):
            increment = sum(a * k_j for a, k_j in zip(self.A[stage], k) if a != 0.0)
            k.append(np.asarray(self.rhs(t + self.C[stage] * h, y + h * increment), dtype=float))
        y_new = y + h * sum(b * k_j for b, k_j in zip(self.B, k) if b != 0.0)
        error = h * sum(e * k_j for e, k_j in zip(self.E, k))
        return y_new, k[6], error

    def step(self, t_limit: float = np.inf):
        """Takes one accepted step, never passing t_limit. Returns (t, y, f) after the step."""
        while True:
            h = min(self.h, self.max_step, t_limit - self.t)
            if h < self.min_step and t_limit - self.t > self.min_step:
                raise StepUnderflow(
                    f"step size {h:.3e} s fell below the minimum {self.min_step:.3e} s at t={self.t:.6g}; "
                    f"the problem is too stiff for rtol={self.rtol:g}, atol={self.atol:g}"
                )
            y_new, f_new, error = self._attempt(h)
            if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new))):
                # overflow in a trial stage is handled like a rejected step
                self.h = h * self.MIN_FACTOR
                self.steps_rejected += 1
                if self.h < self.min_step:
                    raise NonFiniteState(f"non-finite state encountered near t={self.t:.6g}")
                continue
            err = self._error_norm(error, self.y, y_new)
            if err <= 1.0:
                factor = self.MAX_FACTOR if err == 0.0 else min(
                    self.MAX_FACTOR, max(self.MIN_FACTOR, self.SAFETY * err ** (-1.0 / self.ORDER))
                )
                truncated = h < self.h
                self.t = t_limit if h >= t_limit - self.t else self.t + h
                self.y = y_new
                self.f = f_new
                # landing on t_limit does not shrink the step size
                self.h = max(self.h, h * factor) if truncated else h * factor
                self.steps_taken += 1
                return self.t, self.y, self.f
            self.h = h * max(self.MIN_FACTOR, self.SAFETY * err ** (-1.0 / self.ORDER))
            self.steps_rejected += 1

    def advance_to(self, t_end: float, max_steps: int | None = None):
        """
        Integrates up to t_end, returning the accepted samples after the current time.

        Returns:
            (times, states, derivatives) as lists
        """
        times: List[float] = []
        states: List[np.ndarray] = []
        derivatives: List[np.ndarray] = []
        while self.t < t_end:
            if max_steps is not None and len(times) >= max_steps:
                break
            t, y, f = self.step(t_end)
            times.append(t)
            states.append(y)
            derivatives.append(f)
        return times, states, derivatives


def hermite_interpolate(t0: float, y0: np.ndarray, f0: np.ndarray,
                        t1: float, y1: np.ndarray, f1: np.ndarray, t: float) -> np.ndarray:
    """Cubic Hermite interpolation between two samples with known derivatives."""
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s ** 2 * (3 - 2 * s)
    h11 = s ** 2 * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
