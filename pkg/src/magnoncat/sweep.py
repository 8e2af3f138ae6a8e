"""Parameter sweeps of the peak CHSH qualifier and threshold location."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analysis import qualifier_series, series_max
from .bell import CLASSICAL_BOUND, BellVariant, bell_setting
from .dynamics import TwoModeParams, evolve, two_mode_model
from .hilbert import DensityMatrix, top_level_population, two_mode
from .modular import ModularGrid

log = logging.getLogger(__name__)

AXES = {"cross_talk", "local_loss_rate"}
MAX_FRAMES = 200


@dataclass(frozen=True)
class SweepSpec:
    base: TwoModeParams
    axis: str
    values: tuple[float, ...]
    t_final: float = 20.0
    dt: float = 5e-4
    target_alpha: complex = 1.4j
    N: int = 15
    workers: int = 1

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {sorted(AXES)}, got {self.axis!r}")
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("sweep needs at least one value")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @property
    def save_every(self) -> int:
        steps = int(round(self.t_final / self.dt))
        return max(1, math.ceil(steps / MAX_FRAMES))

    def params_at(self, value: float) -> TwoModeParams:
        return replace(self.base, **{self.axis: float(value)})

    def with_values(self, values) -> SweepSpec:
        return replace(self, values=tuple(values))


@dataclass(frozen=True, eq=False)
class SweepResult:
    axis: str
    axis_values: np.ndarray
    q_max: np.ndarray
    t_at_max: np.ndarray
    threshold_estimate: float | None = None
    failures: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.axis_values)
        if not len(self.q_max) == len(self.t_at_max) == n:
            raise ValueError("sweep result vectors differ in length")

    def sign_change(self) -> tuple[int, int] | None:
        """First pair of neighbouring points whose ``q_max - 2`` changes sign."""
        s = self.q_max - CLASSICAL_BOUND
        for i in range(len(s) - 1):
            if np.isfinite(s[i]) and np.isfinite(s[i + 1]) and s[i] * s[i + 1] <= 0 and s[i] != s[i + 1]:
                return i, i + 1
        return None

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([self.axis, "q_max", "t_at_max"])
            for a, q, t in zip(self.axis_values, self.q_max, self.t_at_max):
                w.writerow([repr(float(a)), repr(float(q)), repr(float(t))])

    def summary(self) -> dict:
        ok = np.isfinite(self.q_max)
        out = {
            "axis": self.axis,
            "threshold": self.threshold_estimate,
            "failures": {repr(k): v for k, v in self.failures.items()},
        }
        if ok.sum() >= 2:
            slope, intercept, rms = linear_fit(self.axis_values[ok], self.q_max[ok] - CLASSICAL_BOUND)
            out.update(fit_slope=slope, fit_intercept=intercept, fit_residual_rms=rms)
        return out

    def write(self, csv_path, json_path) -> None:
        self.to_csv(csv_path)
        Path(json_path).write_text(json.dumps(self.summary(), indent=2), encoding="utf-8")


def linear_fit(x, y) -> tuple[float, float, float]:
    """Least-squares line; returns slope, intercept and residual RMS."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    rms = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), rms


def _evaluate(params: TwoModeParams, spec: SweepSpec) -> tuple[float, float, dict]:
    model = two_mode_model(params, spec.N)
    rho0 = DensityMatrix.fock(two_mode(spec.N), (0, 0))
    traj = evolve(model, rho0, spec.t_final, spec.dt, spec.save_every)
    grid = ModularGrid.for_amplitude(spec.target_alpha)
    q = qualifier_series(traj, grid, bell_setting(BellVariant.PSI_PLUS))
    t, qmax = series_max(q)
    diag = {
        "max_trace_drift": traj.max_trace_drift,
        "max_projection_leak": q.diagnostics["max_projection_leak"],
        "truncation_tail": max(top_level_population(s) for s in traj.states),
    }
    return t, qmax, diag


def peak_qualifier(params: TwoModeParams, spec: SweepSpec) -> tuple[float, float]:
    """Evolve one point from the two-mode vacuum; return ``(t_at_max, q_max)``."""
    t, q, _ = _evaluate(params, spec)
    return t, q


def _point(args):
    spec, value = args
    try:
        return _evaluate(spec.params_at(value), spec), None
    except Exception as exc:  # recorded per point, never dropped
        log.warning("sweep point %s=%g failed: %s", spec.axis, value, exc)
        return (math.nan, math.nan, {}), f"{type(exc).__name__}: {exc}"


def run_sweep(spec: SweepSpec) -> SweepResult:
    jobs = [(spec, v) for v in spec.values]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_point, jobs))
    else:
        results = [_point(j) for j in jobs]
    t = np.array([r[0][0] for r in results])
    q = np.array([r[0][1] for r in results])
    failures = {v: r[1] for v, r in zip(spec.values, results) if r[1] is not None}
    diag = {}
    for key in ("max_trace_drift", "max_projection_leak", "truncation_tail"):
        diag[key] = max((r[0][2][key] for r in results if r[1] is None), default=math.nan)
    return SweepResult(spec.axis, np.array(spec.values), q, t, failures=failures, diagnostics=diag)


@dataclass(frozen=True)
class ThresholdSearch:
    estimate: float
    bracket: tuple[float, float]
    evaluations: tuple[tuple[float, float], ...]


def threshold_search(spec: SweepSpec, tolerance: float, coarse: SweepResult | None = None) -> ThresholdSearch:
    """Bisect the axis value at which the peak qualifier crosses 2."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    coarse = coarse or run_sweep(spec)
    pair = coarse.sign_change()
    if pair is None:
        raise ValueError(f"peak qualifier does not cross {CLASSICAL_BOUND} over {spec.values}")
    lo, hi = (float(coarse.axis_values[i]) for i in pair)
    f_lo = float(coarse.q_max[pair[0]]) - CLASSICAL_BOUND
    evals = [(float(a), float(q)) for a, q in zip(coarse.axis_values, coarse.q_max)]
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        _, q = peak_qualifier(spec.params_at(mid), spec)
        evals.append((mid, q))
        log.info("threshold bisection %s=%.6g -> Q_max %.5f", spec.axis, mid, q)
        if (q - CLASSICAL_BOUND) * f_lo > 0:
            lo, f_lo = mid, q - CLASSICAL_BOUND
        else:
            hi = mid
    return ThresholdSearch(0.5 * (lo + hi), (lo, hi), tuple(evals))


def locate_threshold(spec: SweepSpec, tolerance: float, coarse: SweepResult | None = None) -> float:
    return threshold_search(spec, tolerance, coarse).estimate
