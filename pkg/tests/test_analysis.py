import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from magnoncat.analysis import (
    CatFit,
    MetricSeries,
    canonical_alpha,
    cat_fidelity,
    cat_fit_series,
    fidelity_series,
    optimal_cat_amplitude,
    qualifier_series,
    series_max,
)
from magnoncat.bell import bell_setting, chsh_qualifier
from magnoncat.dynamics import Trajectory, TwoModeParams, evolve, two_mode_model
from magnoncat.hilbert import (
    DensityMatrix,
    DimensionError,
    cat_state,
    coherent_state,
    entangled_cat,
    fidelity,
    single_mode,
    two_mode,
)
from magnoncat.modular import ModularGrid, project_joint

ALPHA = 1.4j
GRID = ModularGrid.for_amplitude(ALPHA)


@pytest.fixture(scope="module")
def uncoupled_run():
    """No collective loss and no cross-talk: the two modes never interact."""
    p = TwoModeParams(delta=1.0, pump=1.8, kerr=1.2, cross_talk=0.0, collective_rate=0.0)
    N = 12
    return N, evolve(two_mode_model(p, N), DensityMatrix.fock(two_mode(N), (0, 0)), 10.0, 5e-4, 200)


class TestMetricSeries:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            MetricSeries([0, 1], [1.0])

    def test_real_csv_round_trip(self, tmp_path):
        s = MetricSeries([0.0, 0.1, 0.2], [1.0, 1 / 3, math.pi], "f")
        s.to_csv(tmp_path / "s.csv")
        back = MetricSeries.from_csv(tmp_path / "s.csv")
        assert np.array_equal(back.times, s.times) and np.array_equal(back.values, s.values)
        assert (tmp_path / "s.csv").read_text().splitlines()[0] == "time,value"

    def test_complex_csv_round_trip(self, tmp_path):
        s = MetricSeries([0.0, 0.5], [1.4j, 0.3 - 0.2j])
        s.to_csv(tmp_path / "s.csv")
        back = MetricSeries.from_csv(tmp_path / "s.csv")
        assert np.array_equal(back.values, s.values)
        row = (tmp_path / "s.csv").read_text().splitlines()[1].split(",")
        assert float(row[1]) == pytest.approx(1.4)


class TestCatFit:
    def test_recovers_cat(self):
        fit = optimal_cat_amplitude(cat_state(ALPHA, 15).projector())
        assert abs(fit.alpha - ALPHA) < 1e-3
        assert fit.fidelity >= 0.999

    def test_real_axis_sign_is_stable(self):
        for a in (1.2, -1.2):
            fit = optimal_cat_amplitude(cat_state(a, 15).projector())
            assert fit.alpha.imag == 0 and fit.alpha.real == pytest.approx(1.2, abs=1e-3)

    def test_recovers_negated_cat_canonically(self):
        fit = optimal_cat_amplitude(cat_state(-ALPHA, 15).projector())
        assert abs(fit.alpha - ALPHA) < 1e-3

    def test_vacuum(self):
        fit = optimal_cat_amplitude(DensityMatrix.fock(single_mode(15), (0,)))
        assert fit.alpha == 0
        assert fit.fidelity == pytest.approx(1.0)

    @given(st.floats(0.5, 2.0), st.floats(0, 2 * math.pi))
    def test_recovers_arbitrary_cat(self, r, phi):
        a = r * complex(math.cos(phi), math.sin(phi))
        fit = optimal_cat_amplitude(cat_state(a, 20).projector())
        assert fit.fidelity >= 0.999
        assert abs(fit.alpha - canonical_alpha(a, tol=1e-6)) < 1e-3

    @given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
    def test_even_cat_symmetry(self, a):
        rho = coherent_state(0.8 + 0.3j, 15).projector()
        f = cat_fidelity(rho, [a, -a])
        assert f[0] == f[1]
        c = canonical_alpha(a)
        assert c in (a, -a) and (c.imag > 1e-12 or (abs(c.imag) <= 1e-12 and c.real >= 0))

    def test_global_phase_invariance(self):
        psi = cat_state(ALPHA, 15)
        a = optimal_cat_amplitude(psi.projector())
        b = optimal_cat_amplitude((psi * np.exp(0.7j)).projector())
        assert b.alpha == pytest.approx(a.alpha, abs=1e-6)  # refinement xatol
        assert b.fidelity == pytest.approx(a.fidelity, abs=1e-12)

    def test_fidelity_matches_direct_overlap(self):
        rho = coherent_state(1.0 + 0.5j, 15).projector()
        assert cat_fidelity(rho, [0.9j])[0] == pytest.approx(fidelity(rho, cat_state(0.9j, 15)), abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            CatFit(0j, 1.2)
        with pytest.raises(ValueError):
            optimal_cat_amplitude(cat_state(ALPHA, 8).projector(), search_radius=0)
        with pytest.raises(DimensionError):
            optimal_cat_amplitude(DensityMatrix.fock(two_mode(3), (0, 0)))

    def test_series(self):
        states = [cat_state(a, 15).projector() for a in (0.5j, 1.0j, -1.4j)]
        traj = Trajectory(np.array([0.0, 1.0, 2.0]), states)
        alphas, fids = cat_fit_series(traj)
        assert np.allclose(alphas.values, [0.5j, 1.0j, 1.4j], atol=1e-3)
        assert fids.values.min() >= 0.999


class TestFidelitySeries:
    def test_stationary_target(self):
        psi = entangled_cat(ALPHA, 10)
        traj = Trajectory(np.arange(4.0), [psi.projector()] * 4)
        assert np.allclose(fidelity_series(traj, psi).values, 1.0)

    def test_dimension_mismatch(self):
        traj = Trajectory(np.zeros(1), [DensityMatrix.fock(two_mode(5), (0, 0))])
        with pytest.raises(DimensionError):
            fidelity_series(traj, entangled_cat(ALPHA, 6))

    def test_no_entangling_channel(self, uncoupled_run):
        N, traj = uncoupled_run
        f = fidelity_series(traj, entangled_cat(ALPHA, N))
        assert f.values.max() < 0.6
        assert f.values.min() >= 0 and f.values.max() <= 1


class TestQualifierSeries:
    def test_product_trajectory_stays_classical(self, uncoupled_run):
        _, traj = uncoupled_run
        q = qualifier_series(traj, GRID)
        assert np.abs(q.values).max() <= 2.02
        assert q.diagnostics["max_projection_leak"] < 1e-3

    def test_vacuum_frame(self, uncoupled_run):
        _, traj = uncoupled_run
        q = qualifier_series(Trajectory(traj.times[:1], traj.states[:1]), GRID)
        direct = chsh_qualifier(project_joint(traj.states[0], GRID), bell_setting())
        assert q.values[0] == pytest.approx(direct, abs=1e-12)
        assert abs(q.values[0]) <= 2

    def test_ideal_entangled_cat(self):
        traj = Trajectory(np.zeros(1), [entangled_cat(ALPHA, 15).projector()])
        assert qualifier_series(traj, GRID).values[0] >= 2.5

    def test_single_mode_rejected(self):
        traj = Trajectory(np.zeros(1), [DensityMatrix.fock(single_mode(5), (0,))])
        with pytest.raises(DimensionError):
            qualifier_series(traj, GRID)


class TestSeriesMax:
    def test_constant_picks_first(self):
        assert series_max(MetricSeries([0.0, 1.0, 2.0], [3.0, 3.0, 3.0])) == (0.0, 3.0)

    def test_decreasing(self):
        assert series_max(MetricSeries([0.0, 1.0, 2.0], [3.0, 2.0, 1.0]))[0] == 0.0

    def test_interior_peak(self):
        assert series_max(MetricSeries([0.0, 1.0, 2.0, 3.0], [0.0, 2.5, 2.5, 1.0])) == (1.0, 2.5)

    def test_empty(self):
        with pytest.raises(ValueError):
            series_max(MetricSeries([], []))
