"""Unit tests for hubsync/stability.py"""
import numpy as np
import pytest

from hubsync.dynamics import vector_field
from hubsync.equilibrium import enumerate_fixed_points
from hubsync.errors import DegenerateSums, IndexOutOfRange, InconsistentWithCriterion, NonFiniteState
from hubsync.grid_model import GridSpec, SystemState
from hubsync.stability import (
    admits_spoke,
    check_criterion,
    classify_fixed_points,
    jacobian,
    rogue_spokes,
    spectrum,
    spoke_regimes,
    stability_boundary,
    sync_deviation_band,
)

ROGUE = dict(n=4, omega_ref=10.0, inertia=(0.25,) * 4, damping=(1.0,) * 4,
             injection=(1.6, 0.4, 0.0, -2.0), coupling=(2.0, 2.0, 1.0))


def _near_threshold(margin):
    """Overdamped two-generator grid with mu_1 = 1 - margin."""
    return GridSpec(n=2, omega_ref=10.0, inertia=(0.25, 0.25), damping=(1.0, 1.0), injection=(1.0, -1.0),
                    coupling=(1.0 / (1.0 - margin),))


def _finite_difference_jacobian(spec, state, h=1e-5):
    y = state.vector()
    columns = []
    for k in range(y.size):
        step = np.zeros_like(y)
        step[k] = h
        forward = vector_field(spec, SystemState.from_vector(y + step, spec.n))
        backward = vector_field(spec, SystemState.from_vector(y - step, spec.n))
        columns.append((forward - backward) / (2 * h))
    return np.column_stack(columns)


# ---------------------------------------------------------------------------
# check_criterion
# ---------------------------------------------------------------------------

class TestCheckCriterion:
    def test_unloaded_grid_has_full_margins(self):
        spec = GridSpec(n=3, omega_ref=1.0, inertia=(1, 1, 1), damping=(1, 2, 3), injection=(0, 0, 0),
                        coupling=(1.5, 2.5))
        report = check_criterion(spec)
        assert report.delta_omega_sync == 0.0
        assert report.margins == (1.5, 2.5)
        assert report.satisfied

    def test_on_the_lower_boundary_line_the_margin_vanishes(self, ten_generator):
        lower, _ = stability_boundary(ten_generator, 10).at(0.01)
        on_line = ten_generator.with_value("injection", 10, float(lower))
        report = check_criterion(on_line)
        assert report.margin_of(10) == pytest.approx(0.0, abs=1e-12)
        assert report.worst_spoke == 10
        assert not check_criterion(on_line.with_value("injection", 10, float(lower) - 1e-9)).satisfied
        assert check_criterion(on_line.with_value("injection", 10, float(lower) + 1e-9)).satisfied

    def test_midway_between_the_lines_is_satisfied(self, ten_generator):
        lower, upper = stability_boundary(ten_generator, 10).at(0.01)
        report = check_criterion(ten_generator.with_value("injection", 10, float(lower + upper) / 2))
        assert report.satisfied
        assert report.margin_of(10) > 1.0

    def test_margin_of_checks_the_index(self, three_generator):
        report = check_criterion(three_generator)
        with pytest.raises(IndexOutOfRange):
            report.margin_of(1)
        with pytest.raises(IndexOutOfRange):
            report.margin_of(4)

    def test_invariant_under_inertia_scaling(self, three_generator):
        assert check_criterion(three_generator.scaled("inertia", 100.0)) == check_criterion(three_generator)


# ---------------------------------------------------------------------------
# Regimes, bands, admission
# ---------------------------------------------------------------------------

class TestRegimes:
    def test_only_the_overloaded_spoke_is_rogue(self):
        spec = GridSpec(**ROGUE)
        assert spoke_regimes(spec) == {2: "adequate", 3: "adequate", 4: "over_damped"}
        assert rogue_spokes(spec) == [4]

    def test_spoke_running_ahead_is_under_damped(self):
        spec = GridSpec(**{**ROGUE, "injection": (-1.6, -0.4, 0.0, 2.0)})
        assert spoke_regimes(spec)[4] == "under_damped"

    def test_boundary_counts_as_outside(self):
        spec = GridSpec(**{**ROGUE, "injection": (1.0, 0.0, 0.0, -1.0)})
        assert spoke_regimes(spec)[4] == "over_damped"


class TestSyncDeviationBand:
    def test_symmetric_band(self):
        spec = GridSpec(n=3, omega_ref=50.0, inertia=(1, 1, 1), damping=(1, 1, 1), injection=(0, 0, 0),
                        coupling=(1.0, 1.0))
        band = sync_deviation_band(spec)
        assert (band.lo, band.hi) == (-1.0, 1.0)
        assert band.relative_hi == pytest.approx(1.0 / 50.0)

    def test_disjoint_spoke_intervals_give_no_band(self):
        spec = GridSpec(n=3, omega_ref=50.0, inertia=(1, 1, 1), damping=(1, 1, 1), injection=(0, 5, -5),
                        coupling=(1.0, 1.0))
        assert sync_deviation_band(spec) is None

    def test_criterion_holds_exactly_inside_the_band(self, random_grid):
        rng = np.random.default_rng(21)
        for _ in range(20):
            spec = random_grid(rng, 4, 0.0, 1.3)
            band = sync_deviation_band(spec)
            inside = band is not None and band.lo < check_criterion(spec).delta_omega_sync < band.hi
            assert inside == check_criterion(spec).satisfied


class TestAdmitsSpoke:
    def test_new_spoke_extends_the_grid(self, three_generator):
        extended, report = admits_spoke(three_generator, inertia=2.0, damping=0.5, injection=-0.1, coupling=2.0)
        assert extended.n == 4
        assert extended.coupling_of(4) == 2.0
        assert len(report.margins) == 3

    def test_new_spoke_can_push_an_existing_one_out(self):
        spec = GridSpec(n=2, omega_ref=10.0, inertia=(1, 1), damping=(1, 1), injection=(0.0, 0.9), coupling=(1.0,))
        assert check_criterion(spec).satisfied
        _, report = admits_spoke(spec, inertia=1.0, damping=1.0, injection=6.0, coupling=10.0)
        assert not report.satisfied
        assert report.worst_spoke == 2
        assert report.margin_of(3) > 0


# ---------------------------------------------------------------------------
# Jacobian and spectrum
# ---------------------------------------------------------------------------

class TestJacobian:
    def test_matches_central_differences(self, random_grid):
        rng = np.random.default_rng(13)
        for _ in range(20):
            spec = random_grid(rng, int(rng.integers(2, 6)), 0.0, 0.9, overdamped=False)
            state = SystemState(phases=rng.uniform(-4, 4, size=spec.n - 1), freq_dev=rng.normal(0, 1, size=spec.n))
            np.testing.assert_allclose(jacobian(spec, state), _finite_difference_jacobian(spec, state), atol=1e-6)

    def test_shape(self, ten_generator):
        eq = enumerate_fixed_points(ten_generator.with_value("injection", 10, 0.0))
        assert jacobian(ten_generator, eq.state_of(0)).shape == (19, 19)


class TestSpectrum:
    def test_diagonal(self):
        eigenvalues = spectrum(np.diag([-1.0, -2.0, -3.0]))
        np.testing.assert_allclose(eigenvalues, [-1.0, -2.0, -3.0])

    def test_rotation(self):
        eigenvalues = spectrum(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        np.testing.assert_allclose(eigenvalues, [1j, -1j], atol=1e-15)

    def test_non_finite_matrix(self):
        with pytest.raises(NonFiniteState):
            spectrum(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_stable_point_has_negative_real_parts(self, three_generator):
        eq = enumerate_fixed_points(three_generator)
        assert np.all(spectrum(jacobian(three_generator, eq.state_of(0))).real < 0)


# ---------------------------------------------------------------------------
# classify_fixed_points
# ---------------------------------------------------------------------------

class TestClassifyFixedPoints:
    def test_two_generator_stable_and_unstable(self):
        spec = GridSpec(n=2, omega_ref=6283.0, inertia=(10.0, 1.0), damping=(1.0, 1.0), injection=(1.0, -1.0),
                        coupling=(5.0,))
        eq = enumerate_fixed_points(spec)
        report = classify_fixed_points(spec, eq)
        assert report.of(0).classification == "stable"
        assert report.of(1).classification == "unstable"
        assert report.stable_point == 0
        assert len(report.of(0).eigenvalues) == 3

    def test_unforced_grid_only_the_origin_is_stable(self):
        spec = GridSpec(n=3, omega_ref=10.0, inertia=(1, 1, 1), damping=(1, 1, 1), injection=(0, 0, 0),
                        coupling=(1.0, 1.0))
        eq = enumerate_fixed_points(spec)
        report = classify_fixed_points(spec, eq)
        origin = next(p.point_id for p in eq.points if max(p.phases) == 0.0)
        assert report.stable_point == origin
        assert all(p.classification == "unstable" for p in report.points if p.point_id != origin)

    def test_stable_point_persists_with_a_tiny_margin(self):
        spec = _near_threshold(1e-6)
        report = classify_fixed_points(spec, enumerate_fixed_points(spec))
        assert report.criterion.satisfied
        assert report.stable_point == 0
        assert -1e-2 < report.of(0).max_real < 0
        assert report.of(1).classification == "unstable"

    def test_criterion_matches_stability_on_random_grids(self, random_grid):
        rng = np.random.default_rng(2024)
        for k in range(200):
            n = int(rng.integers(2, 7))
            satisfied = k % 2 == 0
            spec = random_grid(rng, n, 0.0, 0.99, overdamped=False) if satisfied \
                else random_grid(rng, n, 1.01, 1.5, overdamped=False)
            eq = enumerate_fixed_points(spec)
            report = classify_fixed_points(spec, eq)
            assert report.criterion.satisfied == satisfied
            if satisfied:
                assert report.stable_point == 0
                assert sum(p.classification == "stable" for p in report.points) == 1
            else:
                assert report.stable_point is None

    def test_inertia_scaling_keeps_every_classification(self, three_generator):
        eq = enumerate_fixed_points(three_generator)
        before = classify_fixed_points(three_generator, eq)
        heavy = three_generator.scaled("inertia", 100.0)
        after = classify_fixed_points(heavy, enumerate_fixed_points(heavy))
        assert [p.classification for p in after.points] == [p.classification for p in before.points]

    def test_inconsistent_band_raises(self, three_generator):
        eq = enumerate_fixed_points(three_generator)
        with pytest.raises(InconsistentWithCriterion):
            classify_fixed_points(three_generator, eq, tol=1e6)

    def test_rogue_spokes_are_reported(self):
        spec = GridSpec(**ROGUE)
        report = classify_fixed_points(spec, enumerate_fixed_points(spec))
        assert report.rogue_spokes == [4]
        assert report.points == ()


# ---------------------------------------------------------------------------
# stability_boundary
# ---------------------------------------------------------------------------

class TestStabilityBoundary:
    def test_ten_generator_lines(self, ten_generator):
        lines = stability_boundary(ten_generator, 10)
        assert lines.sum_injection == pytest.approx(24.56)
        assert lines.sum_damping == pytest.approx(0.048)
        assert lines.lower_intercept == pytest.approx(-12.7)
        assert lines.upper_intercept == pytest.approx(12.7)
        assert lines.lower_slope == pytest.approx(247.08, rel=1e-4)
        assert lines.upper_slope == pytest.approx(776.25, rel=1e-4)

    def test_reported_slopes_invert_to_the_sums(self):
        s_d = 2 * 12.7 / (776.25 - 247.08)
        s_a = 247.08 * s_d + 12.7
        assert s_d == pytest.approx(0.048, rel=1e-4)
        assert s_a == pytest.approx(24.56, rel=1e-4)

    def test_symmetric_wedge_without_other_injections(self):
        spec = GridSpec(n=3, omega_ref=10.0, inertia=(1, 1, 1), damping=(0.5, 1.5, 1.0), injection=(0.0, 0.0, 0.3),
                        coupling=(1.0, 2.0))
        lines = stability_boundary(spec, 3)
        lower, upper = lines.at(1.0)
        assert lower == pytest.approx(-2.0 * (1 + 1.0 / 2.0))
        assert upper == pytest.approx(2.0 * (1 + 1.0 / 2.0))

    def test_points_on_the_lines_have_zero_margin(self, random_grid):
        rng = np.random.default_rng(31)
        for _ in range(10):
            spec = random_grid(rng, 5, 0.0, 0.9)
            spoke = int(rng.integers(2, 6))
            d = float(rng.uniform(0.2, 3.0))
            lower, upper = stability_boundary(spec, spoke).at(d)
            for a in (float(lower), float(upper)):
                on_line = spec.with_value("damping", spoke, d).with_value("injection", spoke, a)
                assert check_criterion(on_line).margin_of(spoke) == pytest.approx(0.0, abs=1e-9)

    def test_contains_agrees_with_the_criterion(self, ten_generator):
        lines = stability_boundary(ten_generator, 10)
        for a in np.linspace(-20.0, 20.0, 41):
            spec = ten_generator.with_value("injection", 10, float(a))
            assert lines.contains(0.01, float(a)) == (check_criterion(spec).margin_of(10) > 0)

    def test_hub_is_not_a_spoke(self, three_generator):
        with pytest.raises(IndexOutOfRange):
            stability_boundary(three_generator, 1)

    def test_degenerate_damping_sum(self):
        spec = GridSpec(n=2, omega_ref=1.0, inertia=(1, 1), damping=(0.0, 1.0), injection=(0, 0), coupling=(1.0,))
        with pytest.raises(DegenerateSums):
            stability_boundary(spec, 2)
