"""Library side of the command line: build runs from a config and write artifacts.

Exit codes: 0 success, 1 acceptance failure, 2 hypothesis failure,
3 blow-up suspected, 64 configuration error.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics as D
from . import kernels
from ._numerics import radial_derivative
from .config import SWEEP_KEYS, RunConfig
from .errors import (BlowUpSuspected, CflViolation, ConfigError, DiagnosticsError,
                     ProfileError)
from .mms import convergence_study, default_case
from .nonlinearity import ModelParams, check_hypotheses, get_profile
from .solver import RadialGrid, SolverConfig, evolve, make_bump, zero_state

EXIT_OK = 0
EXIT_ACCEPTANCE = 1
EXIT_HYPOTHESIS = 2
EXIT_BLOWUP = 3
EXIT_CONFIG = 64

FLUX_FLOOR = -1e-10


def _clean(obj):
    """JSON-ready copy: numpy scalars unwrapped, non-finite floats named."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


# -- building blocks ---------------------------------------------------------

def model_of(cfg: RunConfig):
    try:
        params = ModelParams(cfg.model.n, cfg.model.alpha)
        profile = get_profile(cfg.model.profile, **cfg.model.profile_params)
    except (ValueError, TypeError, ProfileError) as exc:
        raise ConfigError(f"model: {exc}") from exc
    return params, profile


def build_run(cfg: RunConfig):
    """``(grid, params, profile, data, solver_config)`` for a config."""
    params, profile = model_of(cfg)
    s, d = cfg.solver, cfg.data
    try:
        grid = RadialGrid.from_radius(cfg.grid.R, cfg.grid.spacing())
        solver = SolverConfig(cfl=s.cfl, t0=s.t0, t_end=s.t_end, snapshot_stride=s.snapshot_stride,
                              blowup_threshold=s.blowup_threshold, apex=s.apex, dt=s.dt,
                              closure=s.closure, energy_jump=s.energy_jump)
        if d.family == "zero":
            data = zero_state(grid, s.t0)
        else:
            data = make_bump(d.amplitude, d.center, d.width, grid, cutoff=d.cutoff,
                             velocity=d.velocity, t=s.t0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return grid, params, profile, data, solver


def _relative(value, scale):
    return abs(value) / scale if scale > 0 else abs(value)


def _default_top(history):
    return min(history.apex - history.config.t0, history.grid.R)


def run_diagnostics(history, cfg: RunConfig) -> tuple:
    """``(diagnostics, acceptance)`` dictionaries for a finished run."""
    dg = cfg.diagnostics
    checks = set(dg.checks)
    params, profile = history.params, history.profile
    out, accept = {}, {}

    regions = [D.region(history, float(S), float(T)) for S, T in dg.regions]

    if "energy_flux" in checks:
        rows = []
        for reg in regions:
            sT, sS = D.cone_state(history, reg.T), D.cone_state(history, reg.S)
            e_T = D.cone_energy(sT, sT.t, params, profile)
            e_S = D.cone_energy(sS, sS.t, params, profile)
            F = D.flux(history, sS.t, sT.t)
            res = e_T - e_S - F
            rows.append({"S": sS.t, "T": sT.t, "E_S": e_S, "E_T": e_T, "flux": F,
                         "residual": res, "relative": _relative(res, e_T)})
        out["energy_flux"] = rows
        accept["energy_flux"] = all(r["relative"] <= dg.residual_tolerance for r in rows)

    if "ledger" in checks:
        led = D.energy_ledger(history)
        e0 = float(led.energies[-1]) if led.energies.size else 0.0
        out["ledger"] = {
            "slices": int(led.times.size),
            "min_flux": led.min_flux,
            "min_pair_flux": led.min_pair_flux(),
            "monotonicity_defect": led.monotonicity_defect,
            "relative_monotonicity_defect": _relative(led.monotonicity_defect, e0),
            "max_residual": led.max_residual,
        }
        accept["flux_nonnegative"] = out["ledger"]["min_pair_flux"] >= FLUX_FLOOR

    if "bogomolny" in checks:
        if params.alpha >= 2 * (params.n - 1):
            v, t, r = D.bogomolny_history(history)
            out["bogomolny"] = {"max_violation": v, "t": t, "r": r,
                                "tolerance": dg.bogomolny_tolerance}
            accept["bogomolny"] = v <= dg.bogomolny_tolerance
        else:
            out["bogomolny"] = {"skipped": "alpha < 2(n-1)"}

    if "multiplier" in checks:
        out["multiplier"] = [
            D.multiplier_residual(history, m, reg).to_dict()
            for reg in regions
            for m in (D.energy_multiplier(), D.scaling_multiplier(params.n))
        ]

    if "energyint" in checks:
        out["energyint"] = [D.energyint_decomposition(history, reg.S, reg.T) for reg in regions]

    top = dg.dyadic_top if dg.dyadic_top is not None else _default_top(history)
    if "lemma" in checks:
        lemma_top = dg.lemma_top if dg.lemma_top is not None else 0.5 * top
        fits = D.fit_lemma_constants(history, D.dyadic_times(lemma_top, dg.lemma_count))
        out["lemma"] = {name: fit.to_dict() for name, fit in fits.items()}

    if "probes" in checks:
        out["probes"] = D.apex_probes(history, D.dyadic_times(top, dg.dyadic_count))

    return out, accept


# -- artifact writers --------------------------------------------------------

def _write_series(path, history):
    keys = [k for k in ("step", "t", "energy", "sup_u", "cone_r", "cone_u", "cone_v", "cone_ur")
            if k in history.series]
    cols = [history.series[k] for k in keys]
    with open(path, "w") as fh:
        for row in zip(*cols):
            fh.write(json.dumps(_clean(dict(zip(keys, row))), sort_keys=True, allow_nan=False))
            fh.write("\n")


def _slice_rows(state, params, profile):
    ur = radial_derivative(state.u, state.grid.h, parity=-1)
    e_plus, _, m = D.density_values(state.u, state.v, ur, state.grid.r, params, profile)
    t = np.full(state.grid.J, state.t)
    return np.column_stack([t, state.grid.r, state.u, state.v, ur, e_plus, m])


def _write_slices(path, history, stride):
    """Every ``stride``-th retained slice plus the last, in lab time."""
    picks = list(range(0, len(history.slices), stride))
    if picks[-1] != len(history.slices) - 1:
        picks.append(len(history.slices) - 1)
    with open(path, "w") as fh:
        fh.write("t,r,u,ut,ur,e_plus,m\n")
        for i in picks:
            np.savetxt(fh, _slice_rows(history.slices[i], history.params, history.profile),
                       delimiter=",", fmt="%.17g")


def _write_last_good(path, state):
    with open(path, "w") as fh:
        fh.write("t,r,u,v\n")
        t = np.full(state.grid.J, state.t)
        np.savetxt(fh, np.column_stack([t, state.grid.r, state.u, state.v]),
                   delimiter=",", fmt="%.17g")


def summary_text(report, backend):
    lines = [f"radialcone run: exit {report['exit_code']} ({report['status']})",
             f"backend: {backend}"]
    run = report.get("run", {})
    for key in ("n", "alpha", "profile", "h", "R", "dt", "steps", "apex"):
        if key in run:
            lines.append(f"{key}: {run[key]}")
    for name, ok in sorted(report.get("acceptance", {}).items()):
        lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}")
    diag = report.get("diagnostics", {})
    for row in diag.get("energy_flux", []):
        lines.append(f"E(T)-E(S)-F(S,T) on [{row['S']:.6g}, {row['T']:.6g}]: "
                     f"{row['residual']:.4e} (relative {row['relative']:.3e})")
    if "probes" in diag:
        p = diag["probes"]
        lines.append("dyadic T:   " + " ".join(f"{x:.4g}" for x in p["scales"]))
        lines.append("tip energy: " + " ".join(f"{x:.4e}" for x in p["tip_energy"]))
        lines.append("sup probe:  " + " ".join(f"{x:.4e}" for x in p["sup_probe"]))
    if "blowup" in report:
        lines.append(f"blow-up suspected: {report['blowup']['reason']}")
    return "\n".join(lines) + "\n"


def execute_run(cfg: RunConfig, out_dir) -> tuple:
    """Evolve, diagnose and write artifacts; returns ``(exit_code, report)``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid, params, profile, data, solver = build_run(cfg)
    report = {
        "config": cfg.to_dict(include_run_local=False),
        "run": {"n": params.n, "alpha": params.alpha, "profile": profile.name,
                "h": grid.h, "R": grid.R, "J": grid.J, "apex": solver.apex_time},
        "hypotheses": check_hypotheses(profile, params).to_dict(),
    }
    try:
        history = evolve(solver, data, grid, params, profile)
    except CflViolation as exc:
        raise ConfigError(str(exc)) from exc
    except BlowUpSuspected as exc:
        partial = getattr(exc, "history", None)
        if partial is not None:
            _write_series(out / "series.ndjson", partial)
        if exc.last_good is not None:
            _write_last_good(out / "last_good.csv", exc.last_good)
        report.update(exit_code=EXIT_BLOWUP, status="blow-up suspected",
                      blowup={"reason": getattr(exc, "reason", "") or str(exc), "message": str(exc),
                              "last_good_t": None if exc.last_good is None else exc.last_good.t})
        (out / "report.json").write_text(dumps(report))
        (out / "summary.txt").write_text(summary_text(report, kernels.BACKEND))
        return EXIT_BLOWUP, report

    report["run"].update(dt=history.dt, steps=len(history.series["t"]) - 1,
                         slices=len(history.slices), blowup_threshold=history.blowup_threshold)
    try:
        diag, accept = run_diagnostics(history, cfg)
    except DiagnosticsError as exc:
        raise ConfigError(f"diagnostics: {exc}") from exc
    code = EXIT_OK if all(accept.values()) else EXIT_ACCEPTANCE
    report.update(diagnostics=diag, acceptance=accept, exit_code=code,
                  status="ok" if code == EXIT_OK else "acceptance failure")

    _write_series(out / "series.ndjson", history)
    _write_slices(out / "slices.csv", history, cfg.output.slice_stride)
    (out / "report.json").write_text(dumps(report))
    (out / "summary.txt").write_text(summary_text(report, kernels.BACKEND))
    return code, report


def execute_check(cfg: RunConfig) -> tuple:
    params, profile = model_of(cfg)
    rep = check_hypotheses(profile, params)
    return (EXIT_OK if rep.all_ok else EXIT_HYPOTHESIS), rep


def execute_mms(cfg: RunConfig, out_dir=None, jobs: int = 1) -> tuple:
    params, profile = model_of(cfg)
    m = cfg.mms
    if len(m.grids) < 3:
        raise ConfigError(f"mms.grids: need at least three levels to form orders, got {len(m.grids)}")
    case = default_case(params, profile.name, amplitude=m.amplitude, omega=m.omega,
                        **cfg.model.profile_params)
    try:
        result = convergence_study(case, m.grids, cfl=m.cfl, R=m.R, t_end=m.t_end,
                                   closure=m.closure, band=tuple(m.band), jobs=jobs)
    except (ValueError, CflViolation) as exc:
        raise ConfigError(f"mms: {exc}") from exc
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "mms.json").write_text(dumps(result.to_dict()))
        (out / "mms.txt").write_text(result.render() + "\n")
    return (EXIT_OK if result.passed else EXIT_ACCEPTANCE), result


# -- sweeps ------------------------------------------------------------------

SWEEP_COLUMNS = ("run", "amplitude", "alpha", "n", "profile", "status", "exit_code", "blowup",
                 "tip_energy", "sup_probe", "flux_decay", "error")


def sweep_points(cfg: RunConfig) -> list:
    """Cartesian product of the sweep parameters (keys in sorted order)."""
    params = cfg.sweep.parameters
    keys = sorted(params)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(params[k] for k in keys))]


def _apply_point(cfg: RunConfig, point: dict) -> RunConfig:
    raw = cfg.to_dict()
    raw["sweep"] = {"parameters": {}}
    for key, value in point.items():
        section, name = SWEEP_KEYS[key]
        raw[section][name] = value
    return RunConfig.from_dict(raw)


def _sweep_worker(args):
    index, raw, point, out_dir = args
    base = RunConfig.from_dict(raw)
    row = {"run": index, "amplitude": base.data.amplitude, "alpha": base.model.alpha,
           "n": base.model.n, "profile": base.model.profile}
    row.update(point)
    try:
        cfg = _apply_point(base, point)
        code, report = execute_run(cfg, Path(out_dir) / f"run_{index:03d}")
    except Exception as exc:  # recorded in the aggregate, never fatal to the sweep
        row.update(status="failed", exit_code=EXIT_CONFIG if isinstance(exc, ConfigError) else -1,
                   blowup=False, error=f"{type(exc).__name__}: {exc}")
        return row
    probes = report.get("diagnostics", {}).get("probes", {})

    def seq(name):
        return ";".join(repr(float(x)) for x in probes.get(name, []))

    row.update(status="blowup" if code == EXIT_BLOWUP else "ok", exit_code=code,
               blowup=code == EXIT_BLOWUP, tip_energy=seq("tip_energy"),
               sup_probe=seq("sup_probe"), flux_decay=seq("flux"), error="")
    return row


def execute_sweep(cfg: RunConfig, out_dir, jobs=None) -> tuple:
    """Run every sweep point in its own directory and write ``aggregate.csv``."""
    points = sweep_points(cfg) or [{}]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw = cfg.to_dict()
    tasks = [(i, raw, p, str(out)) for i, p in enumerate(points)]
    jobs = jobs or os.cpu_count() or 1
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            rows = list(pool.map(_sweep_worker, tasks))
    else:
        rows = [_sweep_worker(t) for t in tasks]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, "") for k in SWEEP_COLUMNS})
    (out / "aggregate.csv").write_text(buf.getvalue())
    code = EXIT_OK if all(r["status"] != "failed" for r in rows) else EXIT_ACCEPTANCE
    return code, rows
