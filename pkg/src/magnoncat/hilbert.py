"""Truncated Fock-space linear algebra.

Dense complex matrices over a product of truncated bosonic modes. Every
mode with cutoff ``N`` keeps the levels ``0..N-1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-9
TRACE_TOL = 1e-7
POSITIVITY_TOL = 1e-7
NORM_TOL = 1e-9
TAIL_WARN = 1e-4


class DimensionError(ValueError):
    """Raised when operands live on incompatible mode spaces."""


class TruncationWarning(UserWarning):
    """The Fock cutoff discards a non-negligible part of a state."""


@dataclass(frozen=True)
class ModeSpace:
    mode_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.mode_dims)
        if not dims:
            raise ValueError("a mode space needs at least one mode")
        if any(n < 2 for n in dims):
            raise DimensionError(f"every Fock cutoff must be >= 2, got {dims}")
        object.__setattr__(self, "mode_dims", dims)

    @property
    def dim(self) -> int:
        return math.prod(self.mode_dims)

    @property
    def n_modes(self) -> int:
        return len(self.mode_dims)

    def __add__(self, other: ModeSpace) -> ModeSpace:
        return ModeSpace(self.mode_dims + other.mode_dims)


def single_mode(N: int) -> ModeSpace:
    return ModeSpace((N,))


def two_mode(N: int) -> ModeSpace:
    return ModeSpace((N, N))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Operator:
    space: ModeSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _freeze(self.matrix)
        d = self.space.dim
        if m.shape != (d, d):
            raise DimensionError(f"operator matrix {m.shape} does not match space dimension {d}")
        object.__setattr__(self, "matrix", m)

    def dag(self) -> Operator:
        return Operator(self.space, self.matrix.conj().T)

    def _check(self, other):
        if other.space != self.space:
            raise DimensionError(f"{self.space.mode_dims} vs {other.space.mode_dims}")

    def __add__(self, other: Operator) -> Operator:
        self._check(other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: Operator) -> Operator:
        self._check(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __mul__(self, c: complex) -> Operator:
        return Operator(self.space, c * self.matrix)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            self._check(other)
            return StateVector(self.space, self.matrix @ other.amplitudes)
        return NotImplemented

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) <= tol


@dataclass(frozen=True, eq=False)
class StateVector:
    space: ModeSpace
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = _freeze(self.amplitudes).reshape(-1)
        if v.shape != (self.space.dim,):
            raise DimensionError(f"state of length {v.size} does not match space dimension {self.space.dim}")
        object.__setattr__(self, "amplitudes", v)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> StateVector:
        return StateVector(self.space, self.amplitudes / self.norm)

    def projector(self) -> DensityMatrix:
        v = self.amplitudes
        return DensityMatrix(self.space, np.outer(v, v.conj()))

    def inner(self, other: StateVector) -> complex:
        """Return ``<self|other>``."""
        if other.space != self.space:
            raise DimensionError(f"{self.space.mode_dims} vs {other.space.mode_dims}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __add__(self, other: StateVector) -> StateVector:
        if other.space != self.space:
            raise DimensionError(f"{self.space.mode_dims} vs {other.space.mode_dims}")
        return StateVector(self.space, self.amplitudes + other.amplitudes)

    def __sub__(self, other: StateVector) -> StateVector:
        return self + other * -1

    def __mul__(self, c: complex) -> StateVector:
        return StateVector(self.space, c * self.amplitudes)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite state.

    Validation runs at construction; pass ``check=False`` only for
    intermediate objects that are known to be valid by construction.
    """

    space: ModeSpace
    matrix: np.ndarray = field(repr=False)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = _freeze(self.matrix)
        d = self.space.dim
        if m.shape != (d, d):
            raise DimensionError(f"density matrix {m.shape} does not match space dimension {d}")
        object.__setattr__(self, "matrix", m)
        if self.check:
            herm = float(np.max(np.abs(m - m.conj().T)))
            if herm > HERMITIAN_TOL:
                raise ValueError(f"density matrix not Hermitian (deviation {herm:.2e})")
            tr = np.trace(m).real
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"density matrix trace {tr!r} != 1")
            lam = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
            if lam < -POSITIVITY_TOL:
                raise ValueError(f"density matrix has negative eigenvalue {lam:.2e}")

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def purity(self) -> float:
        return float(np.einsum("ij,ji->", self.matrix, self.matrix).real)

    def expect(self, op: Operator) -> complex:
        if op.space != self.space:
            raise DimensionError(f"{self.space.mode_dims} vs {op.space.mode_dims}")
        return complex(np.einsum("ij,ji->", op.matrix, self.matrix))

    @classmethod
    def from_state(cls, psi: StateVector) -> DensityMatrix:
        return psi.projector()

    @classmethod
    def fock(cls, space: ModeSpace, levels) -> DensityMatrix:
        return basis(space, levels).projector()

    @classmethod
    def mixture(cls, states, weights) -> DensityMatrix:
        states = list(states)
        w = np.asarray(weights, dtype=float)
        m = sum(wi * s.matrix for wi, s in zip(w, states))
        return cls(states[0].space, m)


def ladder(N: int) -> np.ndarray:
    """Single-mode annihilation matrix, ``a[n-1, n] = sqrt(n)``."""
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1).astype(complex)


def embed(space: ModeSpace, local: np.ndarray, mode_index: int) -> Operator:
    """Place a single-mode matrix on ``mode_index``, identity elsewhere."""
    if not 0 <= mode_index < space.n_modes:
        raise IndexError(f"mode index {mode_index} out of range for {space.n_modes} mode(s)")
    out = np.ones((1, 1), dtype=complex)
    for k, n in enumerate(space.mode_dims):
        out = np.kron(out, local if k == mode_index else np.eye(n))
    return Operator(space, out)


def annihilation(space: ModeSpace, mode_index: int = 0) -> Operator:
    if not 0 <= mode_index < space.n_modes:
        raise IndexError(f"mode index {mode_index} out of range for {space.n_modes} mode(s)")
    return embed(space, ladder(space.mode_dims[mode_index]), mode_index)


def creation(space: ModeSpace, mode_index: int = 0) -> Operator:
    return annihilation(space, mode_index).dag()


def number(space: ModeSpace, mode_index: int = 0) -> Operator:
    b = annihilation(space, mode_index)
    return b.dag() @ b


def identity(space: ModeSpace) -> Operator:
    return Operator(space, np.eye(space.dim))


def tensor(*ops):
    """Kronecker product of operators, state vectors or density matrices."""
    if not ops:
        raise ValueError("tensor needs at least one factor")
    first = ops[0]
    space = first.space
    if isinstance(first, StateVector):
        v = first.amplitudes
        for o in ops[1:]:
            v = np.kron(v, o.amplitudes)
            space = space + o.space
        return StateVector(space, v)
    m = first.matrix
    for o in ops[1:]:
        m = np.kron(m, o.matrix)
        space = space + o.space
    if all(isinstance(o, DensityMatrix) for o in ops):
        return DensityMatrix(space, m)
    return Operator(space, m)


def basis(space: ModeSpace, levels) -> StateVector:
    levels = (levels,) if np.isscalar(levels) else tuple(levels)
    if len(levels) != space.n_modes:
        raise DimensionError(f"need {space.n_modes} occupation numbers, got {levels}")
    idx = np.ravel_multi_index(levels, space.mode_dims)
    v = np.zeros(space.dim, dtype=complex)
    v[idx] = 1.0
    return StateVector(space, v)


def coherent_amplitudes(alpha: complex, N: int) -> tuple[np.ndarray, float]:
    """Untruncated-normalised Fock amplitudes of ``|alpha>`` on ``N`` levels.

    Returns the amplitude vector and the Poisson mass captured below the
    cutoff. The recursion ``c[n+1] = c[n] alpha / sqrt(n+1)`` sidesteps
    factorial overflow.
    """
    alpha = complex(alpha)
    c = np.empty(N, dtype=complex)
    c[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, N):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    return c, float(np.sum(np.abs(c) ** 2))


def coherent_state(alpha: complex, N: int) -> StateVector:
    c, captured = coherent_amplitudes(alpha, N)
    tail = 1.0 - captured
    if tail > TAIL_WARN:
        warnings.warn(
            f"coherent state alpha={complex(alpha)} loses {tail:.2e} of its norm above N={N}",
            TruncationWarning,
            stacklevel=2,
        )
    return StateVector(single_mode(N), c / np.sqrt(captured))


def coherent_overlap(beta: complex, alpha: complex) -> complex:
    """Closed form ``<beta|alpha>`` for untruncated coherent states."""
    alpha, beta = complex(alpha), complex(beta)
    return complex(np.exp(-0.5 * (abs(alpha) ** 2 + abs(beta) ** 2) + beta.conjugate() * alpha))


def epsilon_single(alpha: complex) -> float:
    """Overlap correction of the single-mode even cat norm, ``2 exp(-2|alpha|^2)``."""
    return 2.0 * math.exp(-2.0 * abs(alpha) ** 2)


def epsilon_separable(alpha: complex) -> float:
    return 2.0 * math.exp(-2.0 * abs(alpha) ** 2)


def epsilon_entangled(alpha: complex) -> float:
    return 2.0 * math.exp(-4.0 * abs(alpha) ** 2)


def cat_state(alpha: complex, N: int) -> StateVector:
    """Even cat ``(|alpha> + |-alpha>)`` normalised on the truncated space."""
    psi = coherent_state(alpha, N) + coherent_state(-alpha, N)
    return psi.normalized()


def separable_cat(alpha: complex, N: int) -> StateVector:
    c = cat_state(alpha, N)
    return tensor(c, c)


def entangled_cat(alpha: complex, N: int) -> StateVector:
    """``|alpha>|-alpha> + |-alpha>|alpha>``, normalised."""
    plus, minus = coherent_state(alpha, N), coherent_state(-alpha, N)
    psi = tensor(plus, minus) + tensor(minus, plus)
    return psi.normalized()


def fidelity(rho: DensityMatrix, psi: StateVector) -> float:
    if rho.space != psi.space:
        raise DimensionError(f"{rho.space.mode_dims} vs {psi.space.mode_dims}")
    v = psi.amplitudes
    f = complex(v.conj() @ rho.matrix @ v) / float(np.vdot(v, v).real)
    return float(min(max(f.real, 0.0), 1.0))


def partial_trace(rho: DensityMatrix, keep_mode: int) -> DensityMatrix:
    dims = rho.space.mode_dims
    if len(dims) != 2:
        raise DimensionError(f"partial_trace expects a two-mode state, got dims {dims}")
    if keep_mode not in (0, 1):
        raise IndexError(f"keep_mode must be 0 or 1, got {keep_mode}")
    r = rho.matrix.reshape(dims[0], dims[1], dims[0], dims[1])
    if keep_mode == 0:
        red = np.einsum("ikjk->ij", r)
    else:
        red = np.einsum("kikj->ij", r)
    return DensityMatrix(single_mode(dims[keep_mode]), red)


def top_level_population(rho: DensityMatrix) -> float:
    """Largest population of the highest Fock level over all modes."""
    dims = rho.space.mode_dims
    p = np.real(np.diag(rho.matrix)).reshape(dims)
    worst = 0.0
    for axis, n in enumerate(dims):
        worst = max(worst, float(np.take(p, n - 1, axis=axis).sum()))
    return worst
