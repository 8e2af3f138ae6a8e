"""Pumped Kerr magnon Hamiltonians, Lindblad dynamics and effective parameters."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._kernels import lindblad_rhs_csr, rk4_advance
from .hilbert import (
    DensityMatrix,
    DimensionError,
    ModeSpace,
    Operator,
    annihilation,
    ladder,
    single_mode,
    two_mode,
)

log = logging.getLogger(__name__)

MAX_STEP_DRIFT = 1e-6


class StepSizeError(RuntimeError):
    """The per-step trace drift exceeded the allowed bound; dt is too large."""


@dataclass(frozen=True)
class SingleModeParams:
    delta: float = 1.0
    pump: complex = 1.2j
    kerr: float = 1.2

    def __post_init__(self):
        if self.kerr < 0:
            raise ValueError(f"Kerr coefficient must be non-negative, got {self.kerr}")


@dataclass(frozen=True)
class TwoModeParams:
    delta: float = 1.0
    pump: float = 1.8
    kerr: float = 1.2
    cross_talk: float = 0.0
    collective_rate: float = 5.0
    local_loss_rate: float = 0.0

    def __post_init__(self):
        if self.collective_rate < 0 or self.local_loss_rate < 0:
            raise ValueError("loss rates must be non-negative")
        if self.kerr < 0:
            raise ValueError(f"Kerr coefficient must be non-negative, got {self.kerr}")


@dataclass(frozen=True)
class EffectiveParamsInput:
    """Bare cavity-magnon parameters; detunings are taken from half the pump frequency."""

    omega_c: float
    omega_m: float
    omega_d: float
    coupling_g: complex
    pump_G: complex
    kerr: float = 0.0

    @property
    def delta_c(self) -> float:
        return self.omega_c - self.omega_d / 2

    @property
    def delta_m(self) -> float:
        return self.omega_m - self.omega_d / 2


def effective_params(inp: EffectiveParamsInput) -> SingleModeParams:
    """Single-mode parameters after adiabatically eliminating the pumped cavity.

    The contribution of other cavity modes to the detuning is not included.
    """
    dc = inp.delta_c
    G = complex(inp.pump_G)
    g2 = abs(complex(inp.coupling_g)) ** 2
    denom = dc**2 - abs(G) ** 2
    if denom <= 0:
        raise ValueError(f"Delta_c^2 - |G|^2 = {denom} must be positive for the elimination")
    if g2 > 0 and abs(dc) < 10 * math.sqrt(g2):
        warnings.warn(
            f"|Delta_c| = {abs(dc)} is not large compared with |g| = {math.sqrt(g2)}",
            RuntimeWarning,
            stacklevel=2,
        )
    delta = inp.delta_m - g2 * dc / denom
    pump = g2 * G / (2 * denom)
    if pump.imag == 0:
        pump = complex(pump.real, 0.0)
    return SingleModeParams(delta=delta, pump=pump, kerr=inp.kerr)


def parametric_stability(delta: float, pump_magnitude: float) -> bool:
    """True iff the squeezed normal mode exists, ``|delta| > 2 S``.

    The boundary ``|delta| == 2 S`` counts as unstable.
    """
    return abs(delta) > 2 * abs(pump_magnitude)


def _single_mode_matrix(delta, pump, kerr, N):
    b = ladder(N)
    bd = b.conj().T
    return (
        delta * bd @ b
        + np.conj(pump) * bd @ bd
        + pump * b @ b
        + 0.5 * kerr * bd @ bd @ b @ b
    )


def single_mode_hamiltonian(p: SingleModeParams, N: int) -> Operator:
    """``delta b^dag b + S^* b^dag^2 + S b^2 + K/2 b^dag^2 b^2``."""
    return Operator(single_mode(N), _single_mode_matrix(p.delta, complex(p.pump), p.kerr, N))


def two_mode_hamiltonian(p: TwoModeParams, N: int) -> Operator:
    """Two independently pumped Kerr modes with cross-talk ``g (b1^dag b2 + b1 b2^dag)``.

    The pump is real here: ``S (b^2 + b^dag^2)`` on each mode.
    """
    local = _single_mode_matrix(p.delta, p.pump, p.kerr, N)
    eye = np.eye(N)
    h = np.kron(local, eye) + np.kron(eye, local)
    if p.cross_talk:
        b = ladder(N)
        hop = np.kron(b.conj().T, b)
        h = h + p.cross_talk * (hop + hop.conj().T)
    return Operator(two_mode(N), h)


def collective_loss(gamma_c: float, N: int) -> Operator:
    """``sqrt(gamma_c) (b1 + b2)``."""
    if gamma_c < 0:
        raise ValueError(f"collective loss rate must be non-negative, got {gamma_c}")
    space = two_mode(N)
    return math.sqrt(gamma_c) * (annihilation(space, 0) + annihilation(space, 1))


def local_loss(gamma_s: float, mode: int, N: int, n_modes: int = 2) -> Operator:
    if gamma_s < 0:
        raise ValueError(f"single-photon loss rate must be non-negative, got {gamma_s}")
    return math.sqrt(gamma_s) * annihilation(ModeSpace((N,) * n_modes), mode)


@dataclass(frozen=True, eq=False)
class LindbladModel:
    hamiltonian: Operator
    collapse_ops: tuple[Operator, ...] = ()

    def __post_init__(self):
        ops = tuple(self.collapse_ops)
        object.__setattr__(self, "collapse_ops", ops)
        if not self.hamiltonian.is_hermitian():
            raise ValueError("Hamiltonian is not Hermitian")
        for L in ops:
            if L.space != self.hamiltonian.space:
                raise DimensionError("collapse operator lives on a different space than H")

    @property
    def space(self) -> ModeSpace:
        return self.hamiltonian.space

    def effective_hamiltonian(self) -> np.ndarray:
        heff = self.hamiltonian.matrix.copy()
        for L in self.collapse_ops:
            heff = heff - 0.5j * (L.matrix.conj().T @ L.matrix)
        return heff

    def csr(self):
        """CSR triplets of ``H_eff`` and the stacked collapse operators, plus their count."""
        L = [op.matrix for op in self.collapse_ops]
        return _csr(self.effective_hamiltonian()), _stacked_csr(L, self.space.dim, self.space.dim), len(L)


def _csr(m: np.ndarray):
    a = sp.csr_matrix(m)
    a.eliminate_zeros()
    return (
        np.ascontiguousarray(a.indptr, dtype=np.int64),
        np.ascontiguousarray(a.indices, dtype=np.int64),
        np.ascontiguousarray(a.data, dtype=np.complex128),
    )


def _stacked_csr(mats, rows, cols):
    if not mats:
        return _csr(np.zeros((0, cols), dtype=complex))
    return _csr(np.vstack([m.reshape(rows, cols) for m in mats]))


def total_parity(space: ModeSpace) -> np.ndarray:
    """``(-1)^(n_1 + n_2 + ...)`` for every basis index."""
    grids = np.indices(space.mode_dims).reshape(space.n_modes, -1)
    return np.where(grids.sum(axis=0) % 2 == 0, 1, -1)


def _parity_split(model: LindbladModel, rho0: np.ndarray):
    """Index sets of the even/odd sectors if the dynamics never couples them, else None.

    Requires H to conserve total parity, every collapse operator to flip it
    and the initial state to have no coherence between the sectors.
    """
    par = total_parity(model.space)
    even, odd = np.flatnonzero(par == 1), np.flatnonzero(par == -1)
    if len(odd) == 0:
        return None
    tiny = 1e-14
    if np.abs(model.hamiltonian.matrix[np.ix_(even, odd)]).max() > tiny:
        return None
    if np.abs(rho0[np.ix_(even, odd)]).max() > tiny:
        return None
    for L in model.collapse_ops:
        m = L.matrix
        if max(np.abs(m[np.ix_(even, even)]).max(), np.abs(m[np.ix_(odd, odd)]).max()) > tiny:
            return None
    return even, odd


def two_mode_model(p: TwoModeParams, N: int) -> LindbladModel:
    ops = []
    if p.collective_rate > 0:
        ops.append(collective_loss(p.collective_rate, N))
    if p.local_loss_rate > 0:
        ops += [local_loss(p.local_loss_rate, m, N) for m in (0, 1)]
    return LindbladModel(two_mode_hamiltonian(p, N), tuple(ops))


def single_mode_model(p: SingleModeParams, N: int) -> LindbladModel:
    return LindbladModel(single_mode_hamiltonian(p, N))


def lindblad_rhs(model: LindbladModel, rho: DensityMatrix | np.ndarray) -> np.ndarray:
    """Dense ``d rho / dt`` straight from the master equation."""
    r = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    H = model.hamiltonian.matrix
    if r.shape != H.shape:
        raise DimensionError(f"state {r.shape} vs generator {H.shape}")
    out = -1j * (H @ r - r @ H)
    for L in model.collapse_ops:
        A = L.matrix
        AdA = A.conj().T @ A
        out += A @ r @ A.conj().T - 0.5 * (r @ AdA + AdA @ r)
    return out


def lindblad_rhs_fast(model: LindbladModel, rho: np.ndarray) -> np.ndarray:
    """Same as :func:`lindblad_rhs` through the compiled CSR kernel (``rho`` Hermitian)."""
    (hp, hi, hd), (lp, li, ld), n_ops = model.csr()
    r = np.ascontiguousarray(rho, dtype=np.complex128)
    out = np.empty_like(r)
    return lindblad_rhs_csr(r, hp, hi, hd, lp, li, ld, n_ops, out, np.empty_like(r), np.empty_like(r))


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: list = field(repr=False)
    max_trace_drift: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if len(t) != len(self.states):
            raise ValueError("times and states differ in length")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        object.__setattr__(self, "times", t)

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]


def evolve(
    model: LindbladModel,
    rho0: DensityMatrix,
    t_final: float = 20.0,
    dt: float = 5e-4,
    save_every: int = 200,
) -> Trajectory:
    """Fixed-step RK4 integration of the master equation.

    Every step is followed by Hermitization and trace renormalisation. A raw
    trace drift above ``1e-6`` in any step, or a saved frame that is not a
    valid density matrix, raises :class:`StepSizeError`.
    Frames are stored every ``save_every`` steps, plus the initial and final
    states.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_final < 0:
        raise ValueError(f"t_final must be non-negative, got {t_final}")
    if save_every < 1:
        raise ValueError("save_every must be >= 1")
    if rho0.space != model.space:
        raise DimensionError(f"{rho0.space.mode_dims} vs {model.space.mode_dims}")
    n_steps = int(round(t_final / dt))
    if abs(n_steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"t_final={t_final} is not a whole number of steps dt={dt}")
    r0 = np.asarray(rho0.matrix)
    d = model.space.dim
    heff = model.effective_hamiltonian()
    Ls = [L.matrix for L in model.collapse_ops]
    split = _parity_split(model, r0)
    if split is None:
        sectors = (np.arange(d), np.arange(0))
        cross = False
        le = _stacked_csr(Ls, d, d)
        lo = _stacked_csr([], 0, 0)
    else:
        sectors = split
        cross = True
        e, o = split
        le = _stacked_csr([L[np.ix_(e, o)] for L in Ls], len(e), len(o))
        lo = _stacked_csr([L[np.ix_(o, e)] for L in Ls], len(o), len(e))
    e, o = sectors
    he = _csr(heff[np.ix_(e, e)])
    ho = _csr(heff[np.ix_(o, o)])
    re = np.ascontiguousarray(r0[np.ix_(e, e)], dtype=np.complex128)
    ro = np.ascontiguousarray(r0[np.ix_(o, o)], dtype=np.complex128)
    log.debug("evolve: %d steps, sectors %d/%d", n_steps, len(e), len(o))

    times, states = [0.0], [rho0]
    worst = 0.0
    done = 0
    while done < n_steps:
        chunk = min(save_every, n_steps - done)
        drift = rk4_advance(re, ro, chunk, dt, he, ho, le, lo, len(Ls), cross)
        worst = max(worst, drift)
        if not drift <= MAX_STEP_DRIFT:  # also catches NaN from a diverging step
            raise StepSizeError(
                f"trace drift {drift:.2e} per step before t={(done + chunk) * dt:.4g}; reduce dt={dt}"
            )
        done += chunk
        full = np.zeros((d, d), dtype=complex)
        full[np.ix_(e, e)] = re
        full[np.ix_(o, o)] = ro
        try:
            state = DensityMatrix(model.space, full)
        except ValueError as exc:
            raise StepSizeError(f"invalid state at t={done * dt:.4g} ({exc}); reduce dt={dt}") from None
        times.append(done * dt)
        states.append(state)
    return Trajectory(np.array(times), states, worst)
