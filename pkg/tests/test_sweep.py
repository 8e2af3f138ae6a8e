import csv
import json
import math

import numpy as np
import pytest

from magnoncat import sweep
from magnoncat.sweep import (
    SweepResult,
    SweepSpec,
    linear_fit,
    locate_threshold,
    peak_qualifier,
    run_sweep,
    threshold_search,
)
from conftest import REFERENCE_POINT


def small_spec(values, axis="cross_talk", **kw):
    kw = {"t_final": 1.0, "dt": 2e-3, "N": 6, **kw}
    return SweepSpec(REFERENCE_POINT, axis, values, **kw)


def result(values, q):
    n = len(values)
    return SweepResult("cross_talk", np.array(values, float), np.array(q, float), np.zeros(n))


class TestSpec:
    @pytest.mark.parametrize("axis,values", [("kerr", (1.0,)), ("cross_talk", ()), ("cross_talk", (1.0, 1.0))])
    def test_rejects(self, axis, values):
        with pytest.raises(ValueError):
            SweepSpec(REFERENCE_POINT, axis, values)

    def test_frame_budget(self):
        assert SweepSpec(REFERENCE_POINT, "cross_talk", (0.0,)).save_every == 200
        assert small_spec((0.0,)).save_every == 3

    def test_params_at(self):
        p = small_spec((0.0,), axis="local_loss_rate").params_at(0.01)
        assert p.local_loss_rate == 0.01 and p.cross_talk == REFERENCE_POINT.cross_talk


class TestResult:
    def test_length_check(self):
        with pytest.raises(ValueError):
            SweepResult("cross_talk", np.zeros(2), np.zeros(3), np.zeros(2))

    def test_sign_change(self):
        assert result([0, 1, 2, 3], [2.5, 2.2, 1.9, 1.8]).sign_change() == (1, 2)
        assert result([0, 1, 2], [1.5, 1.9, 2.1]).sign_change() == (1, 2)
        assert result([0, 1], [2.5, 2.1]).sign_change() is None

    def test_sign_change_skips_failures(self):
        assert result([0, 1, 2], [2.5, math.nan, 1.8]).sign_change() is None
        assert result([0, 1, 2, 3], [2.5, math.nan, 2.2, 1.8]).sign_change() == (2, 3)

    def test_write(self, tmp_path):
        r = result([0.0, 0.5, 1.0], [2.5, 2.25, 2.0])
        r.write(tmp_path / "s.csv", tmp_path / "s.json")
        rows = list(csv.reader((tmp_path / "s.csv").open()))
        assert rows[0] == ["cross_talk", "q_max", "t_at_max"] and len(rows) == 4
        summary = json.loads((tmp_path / "s.json").read_text())
        assert summary["fit_slope"] == pytest.approx(-0.5)
        assert summary["fit_residual_rms"] == pytest.approx(0.0, abs=1e-12)


class TestLinearFit:
    def test_exact_line(self):
        slope, intercept, rms = linear_fit([0, 1, 2], [1, 3, 5])
        assert (slope, intercept) == pytest.approx((2, 1))
        assert rms == pytest.approx(0, abs=1e-12)

    def test_residual(self):
        # best line through (0,0),(1,1),(2,0) is y=1/3 with residuals -1/3, 2/3, -1/3
        assert linear_fit([0, 1, 2], [0, 1, 0])[2] == pytest.approx(math.sqrt(2) / 3)


class TestRun:
    def test_single_point_matches_direct_run(self):
        spec = small_spec((0.5,))
        r = run_sweep(spec)
        t, q = peak_qualifier(spec.params_at(0.5), spec)
        assert r.q_max[0] == q and r.t_at_max[0] == t
        assert set(r.diagnostics) == {"max_trace_drift", "max_projection_leak", "truncation_tail"}

    def test_deterministic(self):
        spec = small_spec((0.0, 0.5))
        a, b = run_sweep(spec), run_sweep(spec)
        assert np.array_equal(a.q_max, b.q_max) and np.array_equal(a.t_at_max, b.t_at_max)

    def test_parallel_matches_serial(self):
        spec = small_spec((0.0, 0.5))
        a = run_sweep(spec)
        b = run_sweep(small_spec((0.0, 0.5), workers=2))
        assert np.array_equal(a.q_max, b.q_max)

    def test_failure_recorded(self):
        r = run_sweep(small_spec((-0.1, 0.0), axis="local_loss_rate"))
        assert math.isnan(r.q_max[0]) and np.isfinite(r.q_max[1])
        assert list(r.failures) == [-0.1]
        assert "ValueError" in r.failures[-0.1]

    def test_step_size_failure_recorded(self):
        r = run_sweep(small_spec((0.0,), dt=0.05, N=10))
        assert math.isnan(r.q_max[0])
        assert "StepSizeError" in r.failures[0.0]


class TestThreshold:
    @pytest.fixture
    def linear_model(self, monkeypatch):
        # Q_max falls linearly through 2 at g = 0.37
        calls = []

        def fake(params, spec):
            calls.append(params.cross_talk)
            return 0.0, 2.0 - (params.cross_talk - 0.37)

        monkeypatch.setattr(sweep, "peak_qualifier", fake)
        return calls

    def test_bisection_converges(self, linear_model):
        spec = small_spec((0.0, 1.0))
        coarse = result([0.0, 1.0], [2.37, 1.37])
        found = threshold_search(spec, 1e-3, coarse)
        assert abs(found.estimate - 0.37) <= 1e-3
        assert found.bracket[1] - found.bracket[0] <= 1e-3
        assert found.bracket[0] <= 0.37 <= found.bracket[1]
        assert len(linear_model) == math.ceil(math.log2(1 / 1e-3))
        assert len(found.evaluations) == 2 + len(linear_model)

    def test_increasing_branch(self, monkeypatch):
        monkeypatch.setattr(sweep, "peak_qualifier", lambda p, s: (0.0, 1.5 + p.cross_talk))
        coarse = result([0.0, 1.0], [1.5, 2.5])
        assert locate_threshold(small_spec((0.0, 1.0)), 1e-4, coarse) == pytest.approx(0.5, abs=1e-4)

    def test_no_crossing(self):
        with pytest.raises(ValueError, match="does not cross"):
            threshold_search(small_spec((0.0, 1.0)), 0.1, result([0.0, 1.0], [2.5, 2.3]))

    def test_single_point_bracket(self):
        with pytest.raises(ValueError):
            threshold_search(small_spec((0.0,)), 0.1, result([0.0], [2.5]))

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            threshold_search(small_spec((0.0, 1.0)), 0.0, result([0.0, 1.0], [2.5, 1.5]))
