"""CHSH qualifier on two-qubit effective spin states."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .hilbert import DimensionError
from .modular import EffectiveSpinState

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SQ2 = np.sqrt(2.0)
CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * SQ2


class BellVariant(str, enum.Enum):
    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"


@dataclass(frozen=True, eq=False)
class BellSetting:
    A0: np.ndarray
    A1: np.ndarray
    B0: np.ndarray
    B1: np.ndarray

    def __post_init__(self):
        for name in ("A0", "A1", "B0", "B1"):
            m = np.asarray(getattr(self, name), dtype=complex)
            if m.shape != (2, 2) or np.abs(m - m.conj().T).max() > 1e-12:
                raise ValueError(f"{name} must be a Hermitian 2x2 matrix")
            if np.abs(np.linalg.eigvalsh(m)).max() > 1 + 1e-12:
                raise ValueError(f"{name} has eigenvalues outside [-1, 1]")
            object.__setattr__(self, name, m)

    @property
    def observables(self):
        return self.A0, self.A1, self.B0, self.B1


_SETTINGS = {
    BellVariant.PHI_PLUS: (SZ, SX, (SZ - SX) / SQ2, (SX + SZ) / SQ2),
    BellVariant.PHI_MINUS: (SX, SZ, -(SX + SZ) / SQ2, (SZ - SX) / SQ2),
    BellVariant.PSI_PLUS: (SZ, SX, -(SX + SZ) / SQ2, (SX - SZ) / SQ2),
    BellVariant.PSI_MINUS: (SX, SZ, (SZ - SX) / SQ2, -(SZ + SX) / SQ2),
}


def bell_setting(variant: BellVariant | str = BellVariant.PSI_PLUS) -> BellSetting:
    return BellSetting(*_SETTINGS[BellVariant(variant)])


def bell_state(variant: BellVariant | str) -> np.ndarray:
    """State vector in the ``|00>, |01>, |10>, |11>`` basis."""
    v = np.zeros(4, dtype=complex)
    variant = BellVariant(variant)
    if variant in (BellVariant.PHI_PLUS, BellVariant.PHI_MINUS):
        v[0], v[3] = 1, (1 if variant is BellVariant.PHI_PLUS else -1)
    else:
        v[1], v[2] = 1, (1 if variant is BellVariant.PSI_PLUS else -1)
    return v / SQ2


def correlators(rho, setting: BellSetting) -> dict[str, float]:
    m = rho.matrix if isinstance(rho, EffectiveSpinState) else np.asarray(rho)
    if m.shape != (4, 4):
        raise DimensionError(f"CHSH needs a 4x4 state, got {m.shape}")
    out = {}
    for a, A in (("A0", setting.A0), ("A1", setting.A1)):
        for b, B in (("B0", setting.B0), ("B1", setting.B1)):
            e = np.einsum("ij,ji->", m, np.kron(A, B))
            out[a + b] = e
    return out


def chsh_qualifier(rho, setting: BellSetting | None = None) -> float:
    """``<A0 B0> + <A0 B1> - <A1 B0> + <A1 B1>`` (signed)."""
    setting = setting or bell_setting()
    e = correlators(rho, setting)
    q = e["A0B0"] + e["A0B1"] - e["A1B0"] + e["A1B1"]
    if abs(q.imag) > 1e-10:
        raise ValueError(f"qualifier has imaginary part {q.imag:.2e}; state not Hermitian?")
    return float(q.real)


def is_entangled_by_chsh(q: float) -> bool:
    return abs(q) > CLASSICAL_BOUND
