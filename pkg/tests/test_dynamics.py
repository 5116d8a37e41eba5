import math

import numpy as np
import pytest

from ergobound.dynamics import (
    IntegrationError,
    OrbitError,
    PeriodicOrbit,
    SectionSpec,
    close_return_seeds,
    find_periodic_orbit,
    integrate,
    lorenz_equilibria,
    lorenz_section,
    primitive_symbols,
    section_crossings,
    time_average,
)
from ergobound.polyalg import Polynomial, PolySystem, lie_derivative


def oscillator() -> PolySystem:
    """dx/dt = v, dv/dt = -x; circle through (1, 0) with period 2*pi."""
    return PolySystem(2, (Polynomial.variable(2, 1), -1.0 * Polynomial.variable(2, 0)),
                      {}, ("x", "v"))


class TestIntegrate:
    def test_oscillator_returns_home(self):
        traj = integrate(oscillator(), [1.0, 0.0], 2 * math.pi, 1e-10)
        assert np.linalg.norm(traj.states[-1] - [1.0, 0.0]) < 1e-8

    def test_lorenz_stays_bounded(self, lorenz):
        for tol in (1e-10, 5e-11):
            traj = integrate(lorenz, [1.0, 1.0, 1.0], 100.0, tol)
            assert np.abs(traj.states).max() < 100.0

    def test_equilibrium_is_constant(self, lorenz):
        traj = integrate(lorenz, np.zeros(3), 10.0, 1e-10)
        assert np.abs(traj.states).max() < 1e-12

    def test_dense_output_matches_grid(self, lorenz):
        traj = integrate(lorenz, [1.0, 1.0, 1.0], 5.0, 1e-10)
        mid = 0.5 * (traj.t[3] + traj.t[4])
        state = traj(mid)
        assert state.shape == (3,)
        assert np.allclose(traj(traj.t[5]), traj.states[5], atol=1e-12)

    def test_blowup_reports_partial_trajectory(self):
        system = PolySystem(1, (Polynomial.monomial((2,)),), {}, ("x",))
        with pytest.raises(IntegrationError) as err:
            integrate(system, [1.0], 2.0, 1e-9)
        assert err.value.trajectory is not None
        assert err.value.trajectory.t[-1] < 2.0

    def test_invalid_inputs(self, lorenz):
        with pytest.raises(ValueError, match="non-finite"):
            integrate(lorenz, [np.nan, 0, 0], 1.0)
        with pytest.raises(ValueError, match="t_end"):
            integrate(lorenz, [1, 1, 1], -1.0)
        with pytest.raises(ValueError, match="tol"):
            integrate(lorenz, [1, 1, 1], 1.0, tol=0.0)

    def test_fixed_step_order_five(self):
        # global error of the propagated solution scales like h^5
        errs, hs = [], [0.2, 0.1, 0.05, 0.025]
        for h in hs:
            traj = integrate(oscillator(), [1.0, 0.0], 2 * math.pi, fixed_step=h)
            errs.append(np.linalg.norm(traj.states[-1] - [1.0, 0.0]))
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert 4.5 <= slope <= 5.5

    def test_global_error_tracks_tolerance(self):
        # adaptive runs: global error roughly proportional to the tolerance
        tols = [1e-6, 1e-7, 1e-8, 1e-9, 1e-10]
        errs = []
        for tol in tols:
            traj = integrate(oscillator(), [1.0, 0.0], 2 * math.pi, tol)
            errs.append(np.linalg.norm(traj.states[-1] - [1.0, 0.0]))
        slope = np.polyfit(np.log(tols), np.log(errs), 1)[0]
        assert 0.8 <= slope <= 1.2


class TestTimeAverage:
    def test_constant_is_one(self, lorenz):
        traj = integrate(lorenz, [1.0, 1.0, 1.0], 10.0, 1e-9)
        assert time_average(traj, Polynomial.constant(3, 1.0)) == pytest.approx(1.0, abs=1e-12)

    def test_equilibrium_average_z(self, lorenz):
        eq = lorenz_equilibria()[1]
        traj = integrate(lorenz, eq, 5.0, 1e-11)
        assert time_average(traj, Polynomial.variable(3, 2)) == pytest.approx(27.0, abs=1e-8)

    def test_empty_window_rejected(self, lorenz):
        traj = integrate(lorenz, [1.0, 1.0, 1.0], 5.0, 1e-9)
        with pytest.raises(ValueError, match="empty"):
            time_average(traj, Polynomial.constant(3, 1.0), spinup=5.0)

    def test_spinup_drops_transient(self, lorenz):
        z = Polynomial.variable(3, 2)
        traj = integrate(lorenz, [1.0, 1.0, 1.0], 200.0, 1e-9)
        full = time_average(traj, z)
        settled = time_average(traj, z, spinup=20.0)
        assert abs(settled - full) < 1.0
        assert 20.0 < settled < 30.0


class TestSections:
    def test_missing_section_gives_empty(self, lorenz):
        traj = integrate(lorenz, np.zeros(3), 5.0, 1e-9)
        assert section_crossings(traj, lorenz_section()) == []

    def test_circle_crosses_diameter_once_per_period(self):
        traj = integrate(oscillator(), [1.0, 0.0], 6 * math.pi, 1e-11)
        section = SectionSpec((1.0, 0.0), 0.0, -1)
        crossings = section_crossings(traj, section)
        assert len(crossings) == 3
        for t, state in crossings:
            assert abs(state[0]) < 1e-9
            assert state[1] < 0.0  # downward through x = 0 means v < 0

    def test_chaotic_count_consistent_across_tolerance(self, lorenz):
        sec = lorenz_section()
        n1 = len(section_crossings(integrate(lorenz, [1., 1., 1.], 100.0, 1e-12), sec))
        n2 = len(section_crossings(integrate(lorenz, [1., 1., 1.], 100.0, 5e-13), sec))
        assert n1 == n2

    def test_crossing_times_refined(self, lorenz):
        traj = integrate(lorenz, [1.0, 1.0, 1.0], 20.0, 1e-10)
        for t, state in section_crossings(traj, lorenz_section()):
            assert abs(state[2] - 27.0) < 1e-8


class TestOrbits:
    def test_shortest_orbit(self, orbit_ab):
        assert orbit_ab.period == pytest.approx(1.5587, abs=2e-4)
        assert orbit_ab.residual <= 1e-9 * (1.0 + np.linalg.norm(orbit_ab.anchor))
        assert sorted(orbit_ab.symbols) == ["A", "B"]

    def test_shortest_orbit_z4_average(self, orbit_ab, z4):
        assert orbit_ab.average(z4) == pytest.approx(592827.338, abs=0.05)

    def test_reshoot_from_converged_anchor(self, lorenz, section, orbit_ab):
        again = find_periodic_orbit(lorenz, section, orbit_ab.symbols, orbit_ab.anchor)
        assert np.linalg.norm(again.anchor - orbit_ab.anchor) < 1e-8
        assert again.period == pytest.approx(orbit_ab.period, abs=1e-9)

    def test_aababb_orbit(self, orbit_aababb, orbit_ab, z4):
        assert set(orbit_aababb.symbols) == {"A", "B"}
        assert len(orbit_aababb.symbols) == 6
        gap = orbit_ab.average(z4) - orbit_aababb.average(z4)
        assert gap == pytest.approx(2798.0, abs=10.0)

    def test_flow_returns_to_anchor(self, lorenz, orbit_ab):
        traj = integrate(lorenz, orbit_ab.anchor, orbit_ab.period, 1e-13)
        gap = np.linalg.norm(traj.states[-1] - orbit_ab.anchor)
        assert gap <= 1e-9 * (1.0 + np.linalg.norm(orbit_ab.anchor))

    def test_averages_stable_under_quadrature_refinement(self, orbit_ab, z4):
        coarse = time_average(orbit_ab.trajectory, z4)
        fine = time_average(orbit_ab.trajectory, z4, subdivisions=2)
        assert fine == pytest.approx(coarse, rel=1e-9)

    def test_shifted_average_identity(self, lorenz, orbit_ab, z4, cert6):
        # adding the flow derivative of any smooth function cannot change a
        # closed-orbit average
        shifted = z4 + lie_derivative(lorenz, cert6.v)
        a = time_average(orbit_ab.trajectory, shifted)
        b = orbit_ab.average(z4)
        assert a == pytest.approx(b, rel=1e-7)

    def test_nonexistent_single_loop_fails(self, lorenz, section):
        seeds = close_return_seeds(lorenz, section, "A", 400.0)
        assert seeds
        for seed in seeds[:3]:
            with pytest.raises(OrbitError):
                find_periodic_orbit(lorenz, section, "A", seed.state)

    def test_bad_symbols_rejected(self, lorenz, section):
        with pytest.raises(ValueError, match="nonempty word"):
            find_periodic_orbit(lorenz, section, "AC", np.zeros(3))


class TestSeeds:
    def test_ab_seeds_found(self, ab_seeds):
        assert len(ab_seeds) > 0
        assert ab_seeds[0].distance < 0.5
        assert not ab_seeds[0].low_confidence

    def test_short_run_gives_nothing(self, lorenz, section):
        assert close_return_seeds(lorenz, section, "AB", 0.5) == []

    def test_low_confidence_flagging(self, lorenz, section):
        seeds = close_return_seeds(lorenz, section, "AAAAAA", 400.0)
        assert seeds
        assert all(s.low_confidence for s in seeds)

    def test_seeds_sorted_by_distance(self, ab_seeds):
        dists = [s.distance for s in ab_seeds]
        assert dists == sorted(dists)


class TestEquilibria:
    def test_standard_parameters(self):
        pts = lorenz_equilibria(8.0 / 3.0, 10.0, 28.0)
        assert len(pts) == 3
        w = math.sqrt(72.0)
        assert pts[1] == pytest.approx([w, w, 27.0])
        assert pts[2] == pytest.approx([-w, -w, 27.0])

    def test_merge_at_r_one(self):
        assert len(lorenz_equilibria(r=1.0)) == 1

    def test_field_vanishes(self, lorenz):
        for eq in lorenz_equilibria():
            assert np.abs(lorenz(eq)).max() < 1e-12


class TestSymbolsAndExport:
    def test_primitive_symbols(self):
        assert primitive_symbols("ABAB") == "AB"
        assert primitive_symbols("AABABB") == "AABABB"
        assert primitive_symbols("AAA") == "A"

    def test_csv_round_trip(self, orbit_ab, tmp_path):
        path = tmp_path / "orbit.csv"
        orbit_ab.trajectory.to_csv(path)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert np.array_equal(data[:, 0], orbit_ab.trajectory.t)
        assert np.array_equal(data[:, 1:], orbit_ab.trajectory.states)

    def test_orbit_json_round_trip(self, lorenz, orbit_ab, tmp_path):
        path = tmp_path / "orbit.json"
        orbit_ab.save(path)
        back = PeriodicOrbit.load(path, lorenz)
        assert np.array_equal(back.anchor, orbit_ab.anchor)
        assert back.period == orbit_ab.period
        assert back.symbols == orbit_ab.symbols
        assert back.average(Polynomial.monomial((0, 0, 4))) == pytest.approx(
            orbit_ab.average(Polynomial.monomial((0, 0, 4))), rel=1e-9)
