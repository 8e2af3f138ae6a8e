"""Shared fixtures. Long master-equation runs are computed once per session."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from magnoncat.analysis import qualifier_series  # noqa: E402
from magnoncat.bell import bell_setting  # noqa: E402
from magnoncat.dynamics import (  # noqa: E402
    SingleModeParams,
    TwoModeParams,
    evolve,
    single_mode_model,
    two_mode_model,
)
from magnoncat.hilbert import DensityMatrix, single_mode, two_mode  # noqa: E402
from magnoncat.modular import ModularGrid  # noqa: E402
from magnoncat.sweep import SweepSpec, run_sweep  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

N = 15
ALPHA = 1.4j
REFERENCE_POINT = TwoModeParams(delta=1.0, pump=1.8, kerr=1.2, cross_talk=0.0, collective_rate=5.0)


@pytest.fixture(scope="session")
def reference_trajectory():
    """Two-mode reference point from the vacuum, t in [0, 20], frames every 0.1."""
    rho0 = DensityMatrix.fock(two_mode(N), (0, 0))
    return evolve(two_mode_model(REFERENCE_POINT, N), rho0, 20.0, 5e-4, 200)


@pytest.fixture(scope="session")
def reference_qualifier(reference_trajectory):
    return qualifier_series(reference_trajectory, ModularGrid.for_amplitude(ALPHA), bell_setting("PsiPlus"))


@pytest.fixture(scope="session")
def single_mode_runs():
    """Single-mode runs for both pump phases, frames every 0.05."""
    out = {}
    for label, pump in (("imag", 1.2j), ("real", -1.2)):
        model = single_mode_model(SingleModeParams(1.0, pump, 1.2), N)
        out[label] = evolve(model, DensityMatrix.fock(single_mode(N), (0,)), 20.0, 5e-4, 100)
    return out


@pytest.fixture(scope="session")
def g_sweep_spec():
    return SweepSpec(REFERENCE_POINT, "cross_talk", (1.0, 1.5), target_alpha=ALPHA, N=N)


@pytest.fixture(scope="session")
def g_sweep(g_sweep_spec):
    return run_sweep(g_sweep_spec)


@pytest.fixture(scope="session")
def gamma_sweep_spec():
    return SweepSpec(REFERENCE_POINT, "local_loss_rate", (0.0, 0.004, 0.008, 0.012, 0.016), target_alpha=ALPHA, N=N)


@pytest.fixture(scope="session")
def gamma_sweep(gamma_sweep_spec):
    return run_sweep(gamma_sweep_spec)


# criterion number -> list of (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[n]
        verdict = "PASS" if all(ok for ok, _ in checks) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  " + "; ".join(d for _, d in checks))
