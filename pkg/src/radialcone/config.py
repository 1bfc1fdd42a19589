"""Run configuration: typed sections loaded from and written to TOML.

Every key has a default, unknown keys are rejected with their dotted
location, and :meth:`RunConfig.to_dict` materializes all defaults so a
report carries the complete configuration it was produced from.
"""
from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union, get_args, get_origin, get_type_hints

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

DIAGNOSTIC_CHECKS = (
    "energy_flux", "ledger", "bogomolny", "multiplier", "energyint", "lemma", "probes",
)
SWEEP_KEYS = {"amplitude": ("data", "amplitude"), "alpha": ("model", "alpha"),
              "n": ("model", "n"), "profile": ("model", "profile")}


@dataclass
class ModelSection:
    n: int = 3
    alpha: float = 4.0
    profile: str = "adkins_nappi"
    profile_params: dict = field(default_factory=dict)


@dataclass
class GridSection:
    R: float = 4.0
    h: Optional[float] = 1.0 / 512
    J: Optional[int] = None

    def spacing(self) -> float:
        return self.h if self.h is not None else self.R / self.J


@dataclass
class SolverSection:
    cfl: float = 0.5
    t0: float = 0.0
    t_end: float = 1.0
    snapshot_stride: int = 1
    blowup_threshold: Optional[float] = None
    apex: Optional[float] = None
    dt: Optional[float] = None
    closure: str = "odd"
    energy_jump: float = 0.1


@dataclass
class DataSection:
    family: str = "bump"
    amplitude: float = 1e-3
    center: float = 1.0
    width: float = 0.2
    cutoff: float = 3.0
    velocity: str = "zero"


@dataclass
class DiagnosticsSection:
    checks: list = field(default_factory=lambda: list(DIAGNOSTIC_CHECKS))
    regions: list = field(default_factory=lambda: [[0.125, 1.0]])
    dyadic_count: int = 5
    dyadic_top: Optional[float] = None
    lemma_count: int = 4
    lemma_top: Optional[float] = None
    residual_tolerance: float = 1e-4
    bogomolny_tolerance: float = 1e-6


@dataclass
class OutputSection:
    directory: str = "radialcone-out"
    slice_stride: int = 32


@dataclass
class MmsSection:
    grids: list = field(default_factory=lambda: [1 / 128, 1 / 256, 1 / 512])
    R: float = 5.0
    t_end: float = 0.1
    cfl: float = 0.5
    amplitude: float = 0.1
    omega: float = 1.0
    closure: str = "odd"
    band: list = field(default_factory=lambda: [1.8, 2.2])


@dataclass
class SweepSection:
    parameters: dict = field(default_factory=dict)


SECTIONS = {
    "model": ModelSection,
    "grid": GridSection,
    "solver": SolverSection,
    "data": DataSection,
    "diagnostics": DiagnosticsSection,
    "output": OutputSection,
    "mms": MmsSection,
    "sweep": SweepSection,
}
# sections that describe where and how often to run rather than what to compute
_RUN_LOCAL = ("output", "sweep")


def _base_type(tp):
    if get_origin(tp) is Union:
        args = [a for a in get_args(tp) if a is not type(None)]
        return args[0], True
    return tp, False


def _coerce(value, tp, where):
    base, optional = _base_type(tp)
    if value is None:
        if optional:
            return None
        raise ConfigError(f"{where}: value required")
    if base is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if base is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if base is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if base is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return list(value)
    if base is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a table, got {value!r}")
        return dict(value)
    return value


def _build(cls, table, name):
    if not isinstance(table, dict):
        raise ConfigError(f"{name}: expected a table")
    hints = get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    for key in table:
        if key not in known:
            raise ConfigError(f"{name}.{key}: unknown key (allowed: {', '.join(sorted(known))})")
    kwargs = {k: _coerce(v, hints[k], f"{name}.{k}") for k, v in table.items()}
    return cls(**kwargs)


@dataclass
class RunConfig:
    """Complete configuration of a run, study or sweep."""

    model: ModelSection = field(default_factory=ModelSection)
    grid: GridSection = field(default_factory=GridSection)
    solver: SolverSection = field(default_factory=SolverSection)
    data: DataSection = field(default_factory=DataSection)
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)
    output: OutputSection = field(default_factory=OutputSection)
    mms: MmsSection = field(default_factory=MmsSection)
    sweep: SweepSection = field(default_factory=SweepSection)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a table")
        for key in raw:
            if key not in SECTIONS:
                raise ConfigError(f"{key}: unknown section (allowed: {', '.join(SECTIONS)})")
        raw = dict(raw)
        grid = dict(raw.get("grid", {}))
        if "J" in grid and "h" not in grid:
            grid["h"] = None  # J replaces the default spacing
        raw["grid"] = grid
        cfg = cls(**{name: _build(sec, raw.get(name, {}), name) for name, sec in SECTIONS.items()})
        cfg.validate()
        return cfg

    @classmethod
    def from_toml(cls, text: str) -> "RunConfig":
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse configuration: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        return cls.from_toml(text)

    def to_dict(self, include_run_local: bool = True) -> dict:
        out = {}
        for name in SECTIONS:
            if not include_run_local and name in _RUN_LOCAL:
                continue
            out[name] = dataclasses.asdict(getattr(self, name))
        return out

    def to_toml(self) -> str:
        def strip(d):
            return {k: strip(v) if isinstance(v, dict) else v for k, v in d.items() if v is not None}
        return tomli_w.dumps(strip(self.to_dict()))

    def replace(self, section: str, **changes) -> "RunConfig":
        raw = self.to_dict()
        raw[section].update(changes)
        return RunConfig.from_dict(raw)

    def validate(self):
        m, g, s, d, dg = self.model, self.grid, self.solver, self.data, self.diagnostics
        if (g.h is None) == (g.J is None):
            raise ConfigError("grid: give exactly one of h and J")
        if g.R <= 0 or g.spacing() <= 0 or not math.isfinite(g.spacing()):
            raise ConfigError("grid: R and h must be positive")
        if d.family not in ("bump", "zero"):
            raise ConfigError(f"data.family: unknown family {d.family!r} (bump, zero)")
        if d.velocity not in ("zero", "outgoing"):
            raise ConfigError(f"data.velocity: unknown choice {d.velocity!r} (zero, outgoing)")
        if s.closure not in ("odd", "even"):
            raise ConfigError(f"solver.closure: unknown closure {s.closure!r}")
        if self.mms.closure not in ("odd", "even"):
            raise ConfigError(f"mms.closure: unknown closure {self.mms.closure!r}")
        for c in dg.checks:
            if c not in DIAGNOSTIC_CHECKS:
                raise ConfigError(f"diagnostics.checks: unknown check {c!r}")
        for i, reg in enumerate(dg.regions):
            if (not isinstance(reg, list) or len(reg) != 2
                    or not all(isinstance(x, (int, float)) for x in reg)):
                raise ConfigError(f"diagnostics.regions[{i}]: expected [S, T]")
            if not 0 < reg[0] <= reg[1]:
                raise ConfigError(f"diagnostics.regions[{i}]: need 0 < S <= T")
        if dg.dyadic_count < 1 or dg.lemma_count < 2:
            raise ConfigError("diagnostics: dyadic_count >= 1 and lemma_count >= 2 required")
        if self.output.slice_stride < 1:
            raise ConfigError("output.slice_stride: must be a positive integer")
        if len(self.mms.band) != 2:
            raise ConfigError("mms.band: expected [low, high]")
        for key, values in self.sweep.parameters.items():
            if key not in SWEEP_KEYS:
                raise ConfigError(f"sweep.parameters.{key}: unknown parameter "
                                  f"(allowed: {', '.join(SWEEP_KEYS)})")
            if not isinstance(values, list) or not values:
                raise ConfigError(f"sweep.parameters.{key}: expected a non-empty list")
