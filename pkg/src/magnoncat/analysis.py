"""Trajectory metrics: fidelities, fitted cat amplitudes and CHSH qualifiers."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .bell import BellSetting, bell_setting, chsh_qualifier
from .dynamics import Trajectory
from .hilbert import DensityMatrix, DimensionError, StateVector, fidelity
from .modular import ModularGrid, _finish, apply_joint, modular_tensor
from .quadrature import MOMENTUM_GRID, QuadGrid

N_ANGLES = 64
N_RADII = 40
# refinement leaves ~1e-9 noise on Im(alpha); snap below this before canonicalizing
FIT_AXIS_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class MetricSeries:
    times: np.ndarray
    values: np.ndarray
    label: str = ""
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values)
        if t.shape != v.shape:
            raise ValueError(f"times {t.shape} and values {v.shape} differ")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.times)

    def to_csv(self, path) -> None:
        complex_valued = np.iscomplexobj(self.values)
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "value", "re", "im"] if complex_valued else ["time", "value"])
            for t, v in zip(self.times, self.values):
                if complex_valued:
                    w.writerow([repr(float(t)), repr(float(abs(v))), repr(float(v.real)), repr(float(v.imag))])
                else:
                    w.writerow([repr(float(t)), repr(float(v))])

    @classmethod
    def from_csv(cls, path, label: str = "") -> MetricSeries:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        t = [float(r["time"]) for r in rows]
        if rows and "re" in rows[0]:
            v = [complex(float(r["re"]), float(r["im"])) for r in rows]
        else:
            v = [float(r["value"]) for r in rows]
        return cls(np.array(t), np.array(v), label)


@dataclass(frozen=True)
class CatFit:
    alpha: complex
    fidelity: float

    def __post_init__(self):
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError(f"fidelity {self.fidelity} outside [0, 1]")


def canonical_alpha(alpha: complex, tol: float = 1e-12) -> complex:
    """Pick the representative of ``{alpha, -alpha}`` with Im >= 0, then Re >= 0."""
    alpha = complex(alpha)
    if alpha.imag < -tol or (abs(alpha.imag) <= tol and alpha.real < 0):
        alpha = -alpha
    return alpha


def _cat_amplitudes(alphas: np.ndarray, N: int) -> np.ndarray:
    # Even cat on the truncated space: only even Fock levels, weight alpha^n/sqrt(n!).
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    c = np.zeros((alphas.size, N), dtype=complex)
    c[:, 0] = 1.0
    for n in range(1, N):
        c[:, n] = c[:, n - 1] * alphas / np.sqrt(n)
    c[:, 1::2] = 0.0
    return c / np.linalg.norm(c, axis=1, keepdims=True)


def cat_fidelity(rho: DensityMatrix, alphas) -> np.ndarray:
    """``<cat(alpha)|rho|cat(alpha)>`` for every amplitude in ``alphas``."""
    c = _cat_amplitudes(alphas, rho.space.dim)
    return np.einsum("ka,ab,kb->k", c.conj(), rho.matrix, c).real


def optimal_cat_amplitude(rho: DensityMatrix, search_radius: float = 3.0) -> CatFit:
    """Even cat with the highest fidelity to a single-mode state.

    A 64 x 40 polar grid over the disc locates the basin, Nelder-Mead refines
    it. Ties go to the smallest ``|alpha|``.
    """
    if rho.space.n_modes != 1:
        raise DimensionError(f"expected a single-mode state, got dims {rho.space.mode_dims}")
    if search_radius <= 0:
        raise ValueError("search radius must be positive")
    radii = search_radius * np.arange(1, N_RADII + 1) / N_RADII
    angles = 2 * np.pi * np.arange(N_ANGLES) / N_ANGLES
    grid = np.concatenate([[0.0], (radii[:, None] * np.exp(1j * angles[None, :])).ravel()])
    f = cat_fidelity(rho, grid)
    best = int(np.argmax(f))  # grid is ordered by radius, so argmax keeps the smallest |alpha|
    start = grid[best]

    def loss(v):
        a = complex(v[0], v[1])
        if abs(a) > search_radius:
            return 1.0 + abs(a) - search_radius
        return -cat_fidelity(rho, a)[0]

    # explicit simplex one grid cell wide; the default collapses for starts on an axis
    h = search_radius / N_RADII
    x0 = np.array([start.real, start.imag])
    simplex = np.array([x0, x0 + [h, 0.0], x0 + [0.0, h]])
    res = minimize(
        loss,
        x0,
        method="Nelder-Mead",
        options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 2000, "initial_simplex": simplex},
    )
    a_ref = complex(res.x[0], res.x[1])
    f_ref = -res.fun
    if abs(a_ref) <= search_radius and f_ref > f[best] + 1e-14:
        alpha, fid = a_ref, f_ref
    else:
        alpha, fid = start, f[best]
    if abs(alpha.imag) <= FIT_AXIS_TOL:
        alpha = complex(alpha.real, 0.0)
    return CatFit(canonical_alpha(alpha), float(min(max(fid, 0.0), 1.0)))


def cat_fit_series(traj: Trajectory, search_radius: float = 3.0) -> tuple[MetricSeries, MetricSeries]:
    """Fitted amplitude and its fidelity for every frame."""
    fits = [optimal_cat_amplitude(s, search_radius) for s in traj.states]
    alphas = np.array([f.alpha for f in fits])
    fids = np.array([f.fidelity for f in fits])
    return MetricSeries(traj.times, alphas, "cat_alpha"), MetricSeries(traj.times, fids, "cat_fidelity")


def fidelity_series(traj: Trajectory, target: StateVector, label: str = "fidelity") -> MetricSeries:
    if traj.states and traj.states[0].space != target.space:
        raise DimensionError(
            f"trajectory on {traj.states[0].space.mode_dims}, target on {target.space.mode_dims}"
        )
    vals = np.array([fidelity(s, target) for s in traj.states])
    return MetricSeries(traj.times, vals, label)


def qualifier_series(
    traj: Trajectory,
    grid: ModularGrid,
    setting: BellSetting | None = None,
    quad: QuadGrid = MOMENTUM_GRID,
) -> MetricSeries:
    """Project every frame onto two effective spins and evaluate the CHSH qualifier.

    The largest projection leak over the frames is kept in ``diagnostics``.
    """
    setting = setting or bell_setting()
    vals, leaks = [], []
    T = None
    for s in traj.states:
        dims = s.space.mode_dims
        if len(dims) != 2 or dims[0] != dims[1]:
            raise DimensionError(f"qualifier needs two equal modes, got dims {dims}")
        if T is None:
            T = modular_tensor(dims[0], grid, quad)
        es = _finish(apply_joint(T, T, s.matrix))
        vals.append(chsh_qualifier(es, setting))
        leaks.append(es.leak)
    return MetricSeries(
        traj.times, np.array(vals), "qualifier", {"max_projection_leak": float(max(leaks, default=0.0))}
    )


def series_max(series: MetricSeries) -> tuple[float, float]:
    """Largest value and its time; the earliest time wins ties."""
    if len(series) == 0:
        raise ValueError("empty series")
    v = np.real(series.values)
    k = int(np.argmax(v))
    return float(series.times[k]), float(v[k])
