"""Command-line front end: ``magnoncat run | validate | version``.

Each run reads one JSON experiment config, writes plot-ready CSV/JSON files
into the output directory and finishes with ``manifest.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, format_complex, parse_config

log = logging.getLogger("magnoncat")

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_NUMERICS = 3
EXIT_RESOLUTION = 4
DIAGNOSTIC_KEYS = ("truncation_tail", "max_trace_drift", "max_projection_leak")


@dataclass
class RunManifest:
    config: dict
    version: str = __version__
    duration_seconds: float = 0.0
    threads: int = 1
    status: str = "ok"
    error: str | None = None
    files: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=lambda: {k: 0.0 for k in DIAGNOSTIC_KEYS})

    def record(self, **values) -> None:
        for key, v in values.items():
            if key not in DIAGNOSTIC_KEYS:
                raise KeyError(key)
            if v is not None and not math.isnan(v):
                self.diagnostics[key] = max(self.diagnostics[key], float(v))

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "status": self.status,
            "error": self.error,
            "duration_seconds": self.duration_seconds,
            "threads": self.threads,
            "files": sorted(self.files),
            "diagnostics": dict(self.diagnostics),
            "config": self.config,
        }

    def write(self, directory) -> Path:
        path = Path(directory) / "manifest.json"
        path.write_text(dump_json(self.to_dict()), encoding="utf-8")
        return path


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


class _Writer:
    """Writes result files honouring ``output.formats`` and logs them in the manifest."""

    def __init__(self, directory: Path, formats, manifest: RunManifest):
        self.dir = directory
        self.formats = set(formats)
        self.manifest = manifest

    def csv(self, name: str, obj) -> None:
        if "csv" in self.formats:
            obj.to_csv(self.dir / name)
            self.manifest.files.append(name)

    def json(self, name: str, data) -> None:
        if "json" in self.formats:
            (self.dir / name).write_text(dump_json(data), encoding="utf-8")
            self.manifest.files.append(name)


# -- experiment pieces ------------------------------------------------------


def _single_params(cfg: ExperimentConfig):
    from .dynamics import SingleModeParams

    p = cfg.params
    return SingleModeParams(delta=p["delta"], pump=p["S"], kerr=p["K"])


def _two_params(cfg: ExperimentConfig):
    from .dynamics import TwoModeParams

    p = cfg.params
    return TwoModeParams(
        delta=p["delta"],
        pump=float(p["S"].real),
        kerr=p["K"],
        cross_talk=p["g"],
        collective_rate=p["gamma_c"],
        local_loss_rate=p["gamma_s"],
    )


def _evolve(cfg: ExperimentConfig, manifest: RunManifest):
    from .dynamics import evolve, single_mode_model, two_mode_model
    from .hilbert import DensityMatrix, single_mode, top_level_population, two_mode

    N, num = cfg.N, cfg.numerics
    if num["system"] == "single":
        model = single_mode_model(_single_params(cfg), N)
        rho0 = DensityMatrix.fock(single_mode(N), (0,))
    else:
        model = two_mode_model(_two_params(cfg), N)
        rho0 = DensityMatrix.fock(two_mode(N), (0, 0))
    log.info("evolving %s-mode model to t=%g (dt=%g)", num["system"], num["t_final"], num["dt"])
    traj = evolve(model, rho0, num["t_final"], num["dt"], num["save_every"])
    manifest.record(
        max_trace_drift=traj.max_trace_drift,
        truncation_tail=max(top_level_population(s) for s in traj.states),
    )
    return traj


def _prepared_state(cfg: ExperimentConfig, manifest: RunManifest):
    """Reference state named by ``numerics.state`` built on ``alpha_target``."""
    from .hilbert import (
        DensityMatrix,
        cat_state,
        coherent_amplitudes,
        coherent_state,
        entangled_cat,
        separable_cat,
    )

    a, N = cfg.params["alpha_target"], cfg.N
    _, captured = coherent_amplitudes(a, N)
    manifest.record(truncation_tail=1.0 - captured)
    kind = cfg.numerics["state"]
    if kind == "cat":
        return cat_state(a, N).projector()
    if kind == "coherent":
        return coherent_state(a, N).projector()
    if kind == "mixture":
        return DensityMatrix.mixture(
            [coherent_state(a, N).projector(), coherent_state(-a, N).projector()], [0.5, 0.5]
        )
    if kind == "separable_cat":
        return separable_cat(a, N).projector()
    if kind == "entangled_cat":
        return entangled_cat(a, N).projector()
    raise ConfigError(f"numerics.state: {kind!r} is not a prepared state")


def _modular_grid(cfg: ExperimentConfig):
    from .modular import ModularGrid

    lo, hi = cfg.numerics["index_window"]
    return ModularGrid.for_amplitude(
        cfg.params["alpha_target"], offset=cfg.numerics["modular_offset"], index_min=lo, index_max=hi
    )


def _quad(spec):
    from .quadrature import QuadGrid

    return QuadGrid(*spec)


def _peak(series) -> dict:
    from .analysis import series_max

    t, v = series_max(series)
    return {"time": t, "value": v, "final": float(series.values[-1].real)}


# -- modes ------------------------------------------------------------------


def _run_single_evolve(cfg, out: _Writer, manifest):
    import numpy as np

    from .analysis import MetricSeries, fidelity_series
    from .hilbert import basis, number, single_mode

    traj = _evolve(cfg, manifest)
    vac = fidelity_series(traj, basis(single_mode(cfg.N), (0,)), "vacuum_fidelity")
    n_op = number(single_mode(cfg.N))
    n_mean = MetricSeries(traj.times, np.array([s.expect(n_op).real for s in traj.states]), "photon_number")
    purity = MetricSeries(traj.times, np.array([s.purity for s in traj.states]), "purity")
    out.csv("vacuum_fidelity.csv", vac)
    out.csv("photon_number.csv", n_mean)
    out.csv("purity.csv", purity)
    out.json("summary.json", {"photon_number_max": _peak(n_mean), "final_vacuum_fidelity": float(vac.values[-1])})


def _run_catfit(cfg, out, manifest):
    from .analysis import cat_fit_series, fidelity_series
    from .hilbert import basis, single_mode

    traj = _evolve(cfg, manifest)
    alphas, fids = cat_fit_series(traj, cfg.numerics["search_radius"])
    vac = fidelity_series(traj, basis(single_mode(cfg.N), (0,)), "vacuum_fidelity")
    out.csv("cat_alpha.csv", alphas)
    out.csv("cat_fidelity.csv", fids)
    out.csv("vacuum_fidelity.csv", vac)
    summary = {"best": _best_frame(alphas, fids, 0.0), "best_nontrivial": _best_frame(alphas, fids, 1.0)}
    out.json("summary.json", summary)


def _best_frame(alphas, fids, min_abs: float):
    """Highest-fidelity frame among those with ``|alpha| >= min_abs``."""
    import numpy as np

    ok = np.abs(alphas.values) >= min_abs
    if not ok.any():
        return None
    k = int(np.flatnonzero(ok)[np.argmax(fids.values[ok])])
    return {
        "time": float(fids.times[k]),
        "fidelity": float(fids.values[k]),
        "alpha": format_complex(alphas.values[k]),
        "alpha_abs": float(abs(alphas.values[k])),
    }


def _run_two_evolve(cfg, out, manifest):
    from .analysis import fidelity_series
    from .hilbert import entangled_cat, separable_cat

    traj = _evolve(cfg, manifest)
    a = cfg.params["alpha_target"]
    ent = fidelity_series(traj, entangled_cat(a, cfg.N), "fidelity")
    sep = fidelity_series(traj, separable_cat(a, cfg.N), "separable_fidelity")
    out.csv("fidelity.csv", ent)
    out.csv("separable_fidelity.csv", sep)
    out.json("summary.json", {"fidelity_max": _peak(ent), "separable_fidelity_max": _peak(sep)})


def _run_wigner(cfg, out, manifest):
    from .hilbert import partial_trace
    from .quadrature import wigner

    g = _quad(cfg.numerics["wigner_grid"])
    frames = []
    if cfg.numerics["state"] == "evolved":
        traj = _evolve(cfg, manifest)
        times = cfg.numerics["wigner_times"] or [float(traj.times[-1])]
        for t in times:
            k = int(abs(traj.times - t).argmin())
            if abs(traj.times[k] - t) > 1e-9 * max(1.0, t):
                raise ConfigError(f"numerics.wigner_times: t={t} is not a saved frame")
            frames.append((f"t{traj.times[k]:g}", traj.states[k]))
    else:
        frames.append((cfg.numerics["state"], _prepared_state(cfg, manifest)))
    summary = {}
    for tag, rho in frames:
        if rho.space.n_modes == 2:
            rho = partial_trace(rho, 0)
        w = wigner(rho, g, g)
        out.csv(f"wigner_{tag}.csv", w)
        summary[tag] = w.header()
    out.json("wigner.json", summary)


def _run_project(cfg, out, manifest):
    from .modular import project_joint, project_single

    quad = _quad(cfg.numerics["momentum_grid"])
    if cfg.numerics["state"] == "evolved":
        rho = _evolve(cfg, manifest).final
    else:
        rho = _prepared_state(cfg, manifest)
    grid = _modular_grid(cfg)
    es = project_single(rho, grid, quad) if rho.space.n_modes == 1 else project_joint(rho, grid, quad)
    manifest.record(max_projection_leak=es.leak)
    out.json("effective_spin.json", es.to_dict())


def _run_chsh(cfg, out, manifest):
    from .analysis import qualifier_series
    from .bell import bell_setting, chsh_qualifier, is_entangled_by_chsh
    from .modular import project_joint

    quad = _quad(cfg.numerics["momentum_grid"])
    grid = _modular_grid(cfg)
    setting = bell_setting(cfg.numerics["bell_variant"])
    if cfg.numerics["state"] == "evolved":
        traj = _evolve(cfg, manifest)
        q = qualifier_series(traj, grid, setting, quad)
        manifest.record(max_projection_leak=q.diagnostics["max_projection_leak"])
        out.csv("qualifier.csv", q)
        above = traj.times[abs(q.values) > 2.0]
        out.json(
            "summary.json",
            {
                "qualifier_max": _peak(q),
                "first_violation_time": float(above[0]) if above.size else None,
                "violated": bool(above.size),
            },
        )
    else:
        rho = _prepared_state(cfg, manifest)
        es = project_joint(rho, grid, quad)
        manifest.record(max_projection_leak=es.leak)
        value = chsh_qualifier(es, setting)
        out.json("effective_spin.json", es.to_dict())
        out.json("summary.json", {"qualifier": value, "violated": is_entangled_by_chsh(value)})


def _run_sweep(cfg, out, manifest, axis: str):
    from dataclasses import replace

    from .sweep import SweepSpec, run_sweep, threshold_search

    num = cfg.numerics
    spec = SweepSpec(
        base=_two_params(cfg),
        axis=axis,
        values=tuple(num["sweep_values"]),
        t_final=num["t_final"],
        dt=num["dt"],
        target_alpha=cfg.params["alpha_target"],
        N=cfg.N,
        workers=num["workers"],
    )
    res = run_sweep(spec)
    manifest.record(**{k: v for k, v in res.diagnostics.items()})
    extra = {}
    if num["threshold_tolerance"] is not None:
        search = threshold_search(spec, num["threshold_tolerance"], res)
        res = replace(res, threshold_estimate=search.estimate)
        extra = {"bracket": list(search.bracket), "evaluations": [list(e) for e in search.evaluations]}
    if res.failures:
        manifest.status = "partial"
    out.csv("sweep.csv", res)
    out.json("sweep.json", {**res.summary(), **extra})


def _run_stability(cfg, out, manifest):
    from .dynamics import parametric_stability

    delta, S = cfg.params["delta"], cfg.params["S"]
    stable = parametric_stability(delta, abs(S))
    out.json(
        "stability.json",
        {"delta": delta, "pump_magnitude": abs(S), "verdict": "stable" if stable else "unstable"},
    )
    print("stable" if stable else "unstable")


MODE_RUNNERS = {
    "single_evolve": _run_single_evolve,
    "catfit": _run_catfit,
    "two_evolve": _run_two_evolve,
    "wigner": _run_wigner,
    "project": _run_project,
    "chsh": _run_chsh,
    "sweep_g": lambda c, o, m: _run_sweep(c, o, m, "cross_talk"),
    "sweep_gamma": lambda c, o, m: _run_sweep(c, o, m, "local_loss_rate"),
    "stability": _run_stability,
}


def exit_code_for(exc: BaseException) -> tuple[int, str]:
    """Map an exception to ``(exit code, category)``."""
    from .dynamics import StepSizeError
    from .modular import MassDeficitError, ResolutionError

    if isinstance(exc, ConfigError):
        return EXIT_CONFIG, "config"
    if isinstance(exc, (ResolutionError, MassDeficitError)):
        return EXIT_RESOLUTION, "resolution"
    if isinstance(exc, (StepSizeError, FloatingPointError)):
        return EXIT_NUMERICS, "numerics"
    return EXIT_OTHER, "error"


def run(cfg: ExperimentConfig, out_dir=None, threads: int = 1) -> int:
    """Execute one experiment; returns the process exit status."""
    directory = Path(out_dir or cfg.output["directory"])
    directory.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(cfg.to_dict(), threads=threads)
    writer = _Writer(directory, cfg.output["formats"], manifest)
    start = time.perf_counter()
    code = EXIT_OK
    try:
        MODE_RUNNERS[cfg.mode](cfg, writer, manifest)
    except Exception as exc:
        code, category = exit_code_for(exc)
        if code == EXIT_OTHER:
            log.exception("run failed")
        manifest.status = f"failed:{category}"
        manifest.error = f"{type(exc).__name__}: {exc}"
        print(f"error[{category}]: {exc}", file=sys.stderr)
    manifest.duration_seconds = round(time.perf_counter() - start, 3)
    manifest.write(directory)
    return code


def _set_threads(k: int) -> None:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
        os.environ[var] = str(k)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="magnoncat", description="Two-photon driven magnon cat simulations.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("--config", required=True, help="path to the JSON config")
    r.add_argument("--out", help="output directory (overrides output.directory)")
    r.add_argument("--threads", type=int, default=1, help="worker processes / BLAS threads")
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("--config", required=True)
    sub.add_parser("version", help="print the package version")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"ok: mode={cfg.mode}")
        return EXIT_OK
    if args.threads < 1:
        print("error[config]: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    _set_threads(args.threads)
    if cfg.mode in ("sweep_g", "sweep_gamma"):
        cfg.numerics["workers"] = max(cfg.numerics["workers"], args.threads)
    return run(cfg, args.out, args.threads)


if __name__ == "__main__":
    sys.exit(main())
