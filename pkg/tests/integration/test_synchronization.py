"""Integration tests: fixed points -> stability -> trajectories agree with each other."""
import math

import numpy as np
import pytest

from hubsync.dynamics import ConvergedToFixedPoint, LimitCycle, integrate, perturbed_state, self_convergence_defect
from hubsync.energy import lyapunov_energy
from hubsync.equilibrium import enumerate_fixed_points, ghost_state, scan_fixed_points
from hubsync.grid_model import GridSpec, SystemState, load_grid_config
from hubsync.settings import IntegratorSettings
from hubsync.stability import check_criterion, classify_fixed_points

pytestmark = pytest.mark.integration


def _two_generator(coupling):
    """Overdamped pair with A = (1, -1): the criterion holds exactly when coupling >= 1."""
    return GridSpec(n=2, omega_ref=10.0, inertia=(0.25, 0.25), damping=(1.0, 1.0), injection=(1.0, -1.0),
                    coupling=(coupling,))


def _spoke_loaded(mu, coupling=(1.0, 1.0)):
    """Three generators at dw_sync = 0 with the given spoke branch parameters (spoke 2, spoke 3)."""
    loads = [-m * k for m, k in zip(mu, coupling)]
    return GridSpec(n=3, omega_ref=10.0, inertia=(0.25,) * 3, damping=(1.0,) * 3,
                    injection=(-sum(loads), *loads), coupling=coupling)


# ---------------------------------------------------------------------------
# Convergence inside the stability wedge
# ---------------------------------------------------------------------------

class TestConvergenceEnsemble:
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_perturbed_starts_reach_the_stable_point(self, random_grid, n):
        rng = np.random.default_rng(7 * n)
        for trial in range(3):
            spec = random_grid(rng, n, mu_lo=0.0, mu_hi=0.8)
            eq = enumerate_fixed_points(spec)
            report = classify_fixed_points(spec, eq)
            stable = eq.state_of(report.stable_point)

            trajectory = integrate(spec, perturbed_state(stable, 0.1, seed=trial), target=eq)

            assert isinstance(trajectory.outcome, ConvergedToFixedPoint), trajectory.outcome.summary()
            assert trajectory.outcome.point_id == report.stable_point
            final = trajectory.final_state
            assert final.distance_to(stable) <= 1e-6
            assert np.max(np.abs(final.freq_dev - eq.delta_omega_sync)) <= 1e-6

    def test_uniform_starts_on_the_torus_converge(self):
        rng = np.random.default_rng(2024)
        spec = _spoke_loaded((0.5, -0.6))
        eq = enumerate_fixed_points(spec)
        stable = classify_fixed_points(spec, eq).stable_point
        spread = 0.1 * spec.omega_ref
        for _ in range(10):
            init = SystemState(phases=rng.uniform(0.0, 2 * math.pi, size=2),
                               freq_dev=eq.delta_omega_sync + rng.uniform(-spread, spread, size=3))
            outcome = integrate(spec, init, target=eq).outcome
            assert isinstance(outcome, ConvergedToFixedPoint), outcome.summary()
            assert outcome.point_id == stable

    def test_shipped_ten_generator_grid_converges_with_default_settings(self, configs_dir):
        spec = load_grid_config(configs_dir / "ten-generator.json")
        eq = enumerate_fixed_points(spec)
        assert eq.delta_omega_sync == pytest.approx(432.0, rel=1e-3)
        stable = eq.state_of(classify_fixed_points(spec, eq).stable_point)

        trajectory = integrate(spec, perturbed_state(stable, 0.01, seed=0), target=eq)

        assert isinstance(trajectory.outcome, ConvergedToFixedPoint), trajectory.outcome.summary()
        assert trajectory.final_state.distance_to(stable) <= IntegratorSettings().convergence_distance(432.0, 10)

    def test_energy_decreases_on_the_way_in(self):
        spec = _spoke_loaded((0.3, -0.5))
        eq = enumerate_fixed_points(spec)
        stable = eq.state_of(0)
        trajectory = integrate(spec, perturbed_state(stable, 0.2, seed=1), target=eq)
        energies = np.array([lyapunov_energy(spec, s, stable) for s in trajectory.states[::10]])
        assert energies[-1] < 1e-6 * energies[0]
        assert np.all(np.diff(energies) <= 1e-9 * energies[0])


# ---------------------------------------------------------------------------
# Past the threshold
# ---------------------------------------------------------------------------

class TestLimitCycles:
    def test_violated_criterion_rotates(self, random_grid):
        rng = np.random.default_rng(11)
        for _ in range(3):
            spec = random_grid(rng, 2, mu_lo=1.05, mu_hi=1.5)
            assert not check_criterion(spec).satisfied
            outcome = integrate(spec, ghost_state(spec)).outcome
            assert isinstance(outcome, LimitCycle), outcome.summary()
            assert abs(outcome.windings[0]) == 1

    def test_two_generator_period_and_windings(self):
        spec = _two_generator(1.0 / 1.2)
        outcome = integrate(spec, ghost_state(spec)).outcome
        assert isinstance(outcome, LimitCycle)
        assert outcome.windings == (1,)
        assert outcome.spoke_windings == (-1,)
        # small-inertia limit: d(delta)/dt = 2K (mu - sin delta)
        assert outcome.period == pytest.approx(math.pi * 1.2 / math.sqrt(1.2 ** 2 - 1.0), rel=0.1)

    def test_rogue_spoke_winds_alone(self, configs_dir):
        spec = load_grid_config(configs_dir / "rogue-spoke.json")
        outcome = integrate(spec, ghost_state(spec)).outcome
        assert isinstance(outcome, LimitCycle), outcome.summary()
        assert outcome.spoke_windings[:2] == (0, 0)
        assert outcome.spoke_windings[2] != 0
        assert len(set(outcome.windings)) == 1

    def test_identical_spokes_wind_together(self):
        spec = GridSpec(n=4, omega_ref=10.0, inertia=(0.25,) * 4, damping=(1.0,) * 4,
                        injection=(3.0, -1.5, -1.5, 0.0), coupling=(1.0, 1.0, 5.0))
        outcome = integrate(spec, ghost_state(spec)).outcome
        assert isinstance(outcome, LimitCycle), outcome.summary()
        assert outcome.spoke_windings[0] == outcome.spoke_windings[1] != 0
        assert outcome.spoke_windings[2] == 0

    def test_cycle_is_stable_under_halved_tolerances(self):
        spec = _two_generator(1.0 / 1.2)
        assert self_convergence_defect(spec, ghost_state(spec), horizon=20.0) < 1e-5


# ---------------------------------------------------------------------------
# Root counts across the threshold
# ---------------------------------------------------------------------------

class TestRootsAcrossThreshold:
    def test_scan_agrees_just_inside(self):
        spec = _spoke_loaded((0.3, 0.99))
        assert len(scan_fixed_points(spec, resolution=200)) == len(enumerate_fixed_points(spec).points) == 4

    def test_scan_finds_nothing_just_past(self):
        spec = _spoke_loaded((0.3, 1.001))
        assert not enumerate_fixed_points(spec).exists
        assert scan_fixed_points(spec, resolution=200) == []
