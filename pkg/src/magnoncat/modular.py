"""Modular-variable projection of momentum-space states onto effective spins.

A momentum ``p = pbar + l_p N_p`` (``pbar`` in ``[0, l_p)`` measured from the
grid offset) is split into the integer momentum ``N_p`` and the modular part
``pbar``. Integer momenta are grouped as ``N_p = 2m + n + 1`` into a cell ``m``
and a spin label ``n``; tracing ``pbar`` and ``m`` leaves a qubit. So the box
``N_p = 0`` maps to ``(m, n) = (-1, 1)`` and ``N_p = -1`` to ``(-1, 0)``.

Each single-mode projection is a linear map from ``N x N`` matrices to
``2 x 2`` matrices. It is tabulated once as a tensor ``T[n, n', a, b]`` and
applied by contraction, mode by mode for two-mode states.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .hilbert import DensityMatrix, DimensionError
from .quadrature import MOMENTUM_GRID, QuadGrid, momentum_wavefunctions

MIN_POINTS_PER_BOX = 20
MIN_WINDOW_MASS = 0.999


class ResolutionError(ValueError):
    """The momentum grid is too coarse for the requested boxes."""


class MassDeficitError(ValueError):
    """The retained index window misses too much of the state's momentum mass."""


@dataclass(frozen=True)
class ModularGrid:
    modular_length: float
    offset: float = 0.0
    index_min: int = -8
    index_max: int = 7

    def __post_init__(self):
        if not self.modular_length > 0:
            raise ValueError(f"modular length must be positive, got {self.modular_length}")
        if self.index_max < self.index_min:
            raise ValueError("empty index window")

    @classmethod
    def for_amplitude(cls, alpha: complex, **kw) -> ModularGrid:
        return cls(optimal_modular_length(alpha), **kw)

    def box(self, p) -> np.ndarray:
        """Integer momentum of each ``p``."""
        return np.floor((np.asarray(p) - self.offset) / self.modular_length).astype(int)


def cell_and_spin(index: int) -> tuple[int, int]:
    """``N_p -> (m, n)`` with ``N_p = 2m + n + 1``."""
    n = (index - 1) % 2
    return (index - 1 - n) // 2, n


def optimal_modular_length(alpha: complex) -> float:
    """Separation of the two momentum peaks of ``|alpha>`` and ``|-alpha>``."""
    a = abs(complex(alpha))
    if a == 0:
        raise ValueError("the optimal modular length is undefined for alpha = 0")
    return 2.0 * math.sqrt(2.0) * a


@dataclass(frozen=True, eq=False)
class EffectiveSpinState:
    """Projected 2x2 (one mode) or 4x4 (two modes) state.

    ``raw_trace`` is the trace before renormalisation; its shortfall from one
    is the mass lost to the finite index window and discretisation.
    """

    matrix: np.ndarray = field(repr=False)
    raw_trace: float = 1.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape not in ((2, 2), (4, 4)):
            raise DimensionError(f"effective spin state must be 2x2 or 4x4, got {m.shape}")
        if np.abs(m - m.conj().T).max() > 1e-8:
            raise ValueError("effective spin state is not Hermitian")
        if abs(np.trace(m).real - 1) > 1e-6:
            raise ValueError(f"effective spin state trace {np.trace(m).real} != 1")
        if np.linalg.eigvalsh(m)[0] < -1e-6:
            raise ValueError("effective spin state is not positive")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def coherence(self) -> complex:
        """``rho[1, 0]`` of a single-spin state."""
        return complex(self.matrix[1, 0])

    @property
    def leak(self) -> float:
        return 1.0 - self.raw_trace

    def to_dict(self) -> dict:
        return {
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix],
            "raw_trace": self.raw_trace,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> EffectiveSpinState:
        d = json.loads(text)
        m = np.array([[complex(re, im) for re, im in row] for row in d["matrix"]])
        return cls(m, d["raw_trace"])


def _points_per_box(length: float, quad: QuadGrid) -> int:
    k = math.ceil(length / quad.spacing - 1e-9)
    if k < MIN_POINTS_PER_BOX:
        raise ResolutionError(
            f"grid spacing {quad.spacing:.4g} gives only {k} points per box of length {length:.4g}"
        )
    return k


@lru_cache(maxsize=32)
def _modular_tensor(N: int, length: float, offset: float, imin: int, imax: int, k: int) -> np.ndarray:
    # Midpoint rule on a grid re-meshed so that k cells tile each box exactly.
    h = length / k
    pbar = (np.arange(k) + 0.5) * h
    wf = {i: momentum_wavefunctions(N, offset + length * i + pbar) for i in range(imin, imax + 1)}
    T = np.zeros((2, 2, N, N), dtype=complex)
    for i in range(imin, imax + 1):
        m, n = cell_and_spin(i)
        for j in range(imin, imax + 1):
            m2, n2 = cell_and_spin(j)
            if m2 == m:
                T[n, n2] += h * wf[i].T @ wf[j].conj()
    T.setflags(write=False)
    return T


def modular_tensor(N: int, grid: ModularGrid, quad: QuadGrid = MOMENTUM_GRID) -> np.ndarray:
    """Tabulated single-mode projection ``rho_es[n, n'] = sum_ab T[n, n', a, b] rho[a, b]``."""
    k = _points_per_box(grid.modular_length, quad)
    return _modular_tensor(
        N, float(grid.modular_length), float(grid.offset), grid.index_min, grid.index_max, k
    )


@lru_cache(maxsize=8)
def _sign_tensor(N: int, reach: float, k: int) -> np.ndarray:
    h = reach / k
    p = (np.arange(k) + 0.5) * h
    wf = (momentum_wavefunctions(N, -p), momentum_wavefunctions(N, p))
    T = np.empty((2, 2, N, N), dtype=complex)
    for n in (0, 1):
        for n2 in (0, 1):
            T[n, n2] = h * wf[n].T @ wf[n2].conj()
    T.setflags(write=False)
    return T


def _finish(raw: np.ndarray) -> EffectiveSpinState:
    raw = 0.5 * (raw + raw.conj().T)
    tr = float(np.trace(raw).real)
    if tr < MIN_WINDOW_MASS:
        raise MassDeficitError(f"projection keeps only {tr:.6f} of the state's momentum mass")
    return EffectiveSpinState(raw / tr, tr)


def project_single(
    rho: DensityMatrix, grid: ModularGrid, quad: QuadGrid = MOMENTUM_GRID
) -> EffectiveSpinState:
    if rho.space.n_modes != 1:
        raise DimensionError(f"expected a single-mode state, got dims {rho.space.mode_dims}")
    T = modular_tensor(rho.space.dim, grid, quad)
    return _finish(np.einsum("xyab,ab->xy", T, rho.matrix))


def apply_joint(T1: np.ndarray, T2: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Apply single-mode projection tensors to both modes of a two-mode matrix."""
    N1, N2 = T1.shape[2], T2.shape[2]
    r = np.asarray(rho).reshape(N1, N2, N1, N2)
    # r[a, c, b, d]: (a, b) index mode 1, (c, d) mode 2
    half = np.einsum("ikab,acbd->ikcd", T1, r)
    out = np.einsum("jlcd,ikcd->ijkl", T2, half)
    return out.reshape(4, 4)


def project_joint(
    rho: DensityMatrix, grid: ModularGrid, quad: QuadGrid = MOMENTUM_GRID
) -> EffectiveSpinState:
    """Two-mode projection; basis order of the result is ``|n1 n2>``."""
    dims = rho.space.mode_dims
    if len(dims) != 2:
        raise DimensionError(f"expected a two-mode state, got dims {dims}")
    T1 = modular_tensor(dims[0], grid, quad)
    T2 = T1 if dims[1] == dims[0] else modular_tensor(dims[1], grid, quad)
    return _finish(apply_joint(T1, T2, rho.matrix))


def sign_projection(rho: DensityMatrix, quad: QuadGrid = MOMENTUM_GRID) -> EffectiveSpinState:
    """Split momentum at zero: ``n = 1`` for ``p > 0``, ``n = 0`` for ``p < 0``.

    The coherence pairs ``p`` with its mirror image,
    ``rho_es[1, 0] = int_0^inf dp <p|rho|-p>``.
    """
    if rho.space.n_modes != 1:
        raise DimensionError(f"expected a single-mode state, got dims {rho.space.mode_dims}")
    reach = max(abs(quad.minimum), abs(quad.maximum))
    k = math.ceil(reach / quad.spacing - 1e-9)
    T = _sign_tensor(rho.space.dim, float(reach), k)
    return _finish(np.einsum("xyab,ab->xy", T, rho.matrix))
