"""Quadrature representations and Wigner functions of single-mode states.

Quadratures are ``x = (b + b^dag)/sqrt(2)`` and ``p = -i(b - b^dag)/sqrt(2)``,
so a coherent state ``|alpha>`` sits at ``(sqrt(2) Re alpha, sqrt(2) Im alpha)``
and the vacuum Wigner function peaks at ``1/pi``.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .hilbert import DensityMatrix, DimensionError

WIGNER_BOUND = 1 / np.pi


@dataclass(frozen=True)
class QuadGrid:
    minimum: float
    maximum: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.count}")
        if not self.maximum > self.minimum:
            raise ValueError(f"grid maximum {self.maximum} must exceed minimum {self.minimum}")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.minimum, self.maximum, self.count)

    @property
    def spacing(self) -> float:
        return (self.maximum - self.minimum) / (self.count - 1)

    def weights(self) -> np.ndarray:
        """Trapezoid weights."""
        w = np.full(self.count, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w


WIGNER_GRID = QuadGrid(-6.0, 6.0, 201)
MOMENTUM_GRID = QuadGrid(-12.0, 12.0, 2401)


def hermite_functions(N: int, points) -> np.ndarray:
    """Real oscillator eigenfunctions ``psi_n(q)``, shape ``(len(points), N)``.

    Three-term recurrence
    ``psi_{n+1} = sqrt(2/(n+1)) q psi_n - sqrt(n/(n+1)) psi_{n-1}``.
    """
    q = np.asarray(points, dtype=float)
    out = np.empty((q.size, N))
    out[:, 0] = np.pi**-0.25 * np.exp(-0.5 * q**2)
    if N > 1:
        out[:, 1] = np.sqrt(2.0) * q * out[:, 0]
    for n in range(1, N - 1):
        out[:, n + 1] = np.sqrt(2.0 / (n + 1)) * q * out[:, n] - np.sqrt(n / (n + 1)) * out[:, n - 1]
    return out


def momentum_wavefunctions(N: int, points) -> np.ndarray:
    """``<p|n> = (-i)^n psi_n(p)`` evaluated at arbitrary momenta."""
    return hermite_functions(N, points) * (-1j) ** np.arange(N)


def hermite_basis(N: int, grid: QuadGrid) -> np.ndarray:
    """Matrix ``M[k, n] = <p_k|n>`` on a uniform momentum grid."""
    reach = np.sqrt(2.0 * N)
    if grid.minimum > -reach or grid.maximum < reach:
        warnings.warn(
            f"grid [{grid.minimum}, {grid.maximum}] does not cover +-{reach:.3g} needed for N={N}",
            RuntimeWarning,
            stacklevel=2,
        )
    return momentum_wavefunctions(N, grid.points)


def _single_mode_matrix(rho: DensityMatrix) -> np.ndarray:
    if rho.space.n_modes != 1:
        raise DimensionError(f"expected a single-mode state, got dims {rho.space.mode_dims}")
    return np.asarray(rho.matrix)


def momentum_density(rho: DensityMatrix, grid: QuadGrid = MOMENTUM_GRID) -> np.ndarray:
    r = _single_mode_matrix(rho)
    M = hermite_basis(r.shape[0], grid)
    return np.einsum("ka,ab,kb->k", M, r, M.conj()).real


@dataclass(frozen=True, eq=False)
class WignerMap:
    x_grid: QuadGrid
    p_grid: QuadGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.x_grid.count, self.p_grid.count):
            raise ValueError(f"values {v.shape} do not match grids")
        object.__setattr__(self, "values", v)

    @property
    def minimum(self) -> float:
        return float(self.values.min())

    @property
    def maximum(self) -> float:
        return float(self.values.max())

    def integral(self) -> float:
        return float(self.x_grid.weights() @ self.values @ self.p_grid.weights())

    def p_marginal(self) -> np.ndarray:
        return self.x_grid.weights() @ self.values

    def to_csv(self, path) -> None:
        path = Path(path)
        x, p = self.x_grid.points, self.p_grid.points
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "p", "W"])
            for i, xi in enumerate(x):
                for j, pj in enumerate(p):
                    w.writerow([repr(float(xi)), repr(float(pj)), repr(float(self.values[i, j]))])

    def header(self) -> dict:
        grid = lambda g: {"minimum": g.minimum, "maximum": g.maximum, "count": g.count}
        return {
            "x_grid": grid(self.x_grid),
            "p_grid": grid(self.p_grid),
            "min": self.minimum,
            "max": self.maximum,
            "integral": self.integral(),
        }

    def write(self, csv_path, json_path) -> None:
        self.to_csv(csv_path)
        Path(json_path).write_text(json.dumps(self.header(), indent=2), encoding="utf-8")


def wigner(
    rho: DensityMatrix,
    x_grid: QuadGrid = WIGNER_GRID,
    p_grid: QuadGrid = WIGNER_GRID,
) -> WignerMap:
    """Wigner function from the Fock-basis Laguerre kernel.

    For ``m >= n`` the kernel of ``|m><n|`` is
    ``(-1)^n/pi sqrt(n!/m!) (sqrt(2)(x - ip))^(m-n) exp(-r^2) L_n^(m-n)(2 r^2)``.
    """
    r = _single_mode_matrix(rho)
    N = r.shape[0]
    X, P = np.meshgrid(x_grid.points, p_grid.points, indexing="ij")
    r2 = X**2 + P**2
    z = np.sqrt(2.0) * (X - 1j * P)
    gauss = np.exp(-r2) / np.pi
    W = np.zeros(X.shape, dtype=complex)
    zpow = np.ones_like(z)
    for k in range(N):  # k = m - n
        for n in range(N - k):
            m = n + k
            c = r[m, n] if k == 0 else 2.0 * r[m, n]
            if c == 0:
                continue
            norm = (-1) ** n * np.exp(0.5 * (gammaln(n + 1) - gammaln(m + 1)))
            W += c * norm * zpow * eval_genlaguerre(n, k, 2.0 * r2)
        zpow = zpow * z
    return WignerMap(x_grid, p_grid, (W.real * gauss))
