"""Run configuration: nested dataclasses read from YAML, presets, and a stable hash.

Grammar (YAML mapping; every key optional, unknown keys are errors)::

    preset: desk | paper          # base values, overridden by the keys below
    gas:        {gamma, prandtl, mach, reynolds, alpha_deg}
    geometry:   {n_wall_edges, farfield_radius, degree, n_radial, first_layer, wall: adiabatic|isothermal,
                 wall_temperature}
    discretization: {orders: [p, ...], adjoint_mode: same-p|p-plus-one}
    solver:     {tol, max_iter, cfl0, cfl_max, cfl_growth}
    objective:  {kinds: [drag, lift], trace: flux|interior}
    gradient:   {modes: [pointwise, variational], n_points}
    fd:         {h, scheme: central|forward, support_radius, richardson_edges: [..], workers}
    mms:        {orders: [..], meshes: [..], warp, mu}
    output:     {directory}

Only NSSHAPE_OUT and NSSHAPE_WORKERS are read from the environment.  The hash
covers everything except the output directory and worker count.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

import yaml


class ConfigError(ValueError):
    pass


@dataclass
class GasConfig:
    gamma: float = 1.4
    prandtl: float = 0.72
    mach: float = 0.5
    reynolds: float = 5000.0
    alpha_deg: float = 2.0


@dataclass
class GeometryConfig:
    n_wall_edges: int = 32
    farfield_radius: float = 20.0
    degree: int = 4
    n_radial: int = 14
    first_layer: float = 0.012
    wall: str = "adiabatic"
    wall_temperature: float | None = None


@dataclass
class DiscretizationConfig:
    orders: list = field(default_factory=lambda: [2, 3])
    adjoint_mode: str = "p-plus-one"


@dataclass
class SolverConfig:
    tol: float = 1e-11
    max_iter: int = 300
    cfl0: float = 5.0
    cfl_max: float = 1e12
    cfl_growth: float = 4.0


@dataclass
class ObjectiveConfig:
    kinds: list = field(default_factory=lambda: ["drag", "lift"])
    trace: str = "flux"


@dataclass
class GradientConfig:
    modes: list = field(default_factory=lambda: ["pointwise", "variational"])
    n_points: int = 10


@dataclass
class FDConfig:
    h: float = 1e-4
    scheme: str = "central"
    support_radius: float = 0.5
    richardson_edges: list = field(default_factory=lambda: [8, 24])
    workers: int = 1


@dataclass
class MMSConfig:
    orders: list = field(default_factory=lambda: [1, 2, 3])
    meshes: list = field(default_factory=lambda: [4, 8, 16])
    warp: float = 0.05
    mu: float = 0.01


@dataclass
class OutputConfig:
    directory: str = "results"


@dataclass
class RunConfig:
    preset: str = "desk"
    gas: GasConfig = field(default_factory=GasConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    discretization: DiscretizationConfig = field(default_factory=DiscretizationConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    gradient: GradientConfig = field(default_factory=GradientConfig)
    fd: FDConfig = field(default_factory=FDConfig)
    mms: MMSConfig = field(default_factory=MMSConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> "RunConfig":
        g, geo, d = self.gas, self.geometry, self.discretization
        checks = [
            (g.gamma > 1, "gas.gamma must exceed 1"),
            (g.prandtl > 0 and g.reynolds > 0, "gas.prandtl and gas.reynolds must be positive"),
            (0 < g.mach < 1, "gas.mach must be subsonic and positive"),
            (geo.n_wall_edges >= 8, "geometry.n_wall_edges must be >= 8"),
            (geo.farfield_radius >= 10, "geometry.farfield_radius must be >= 10 chords"),
            (1 <= geo.degree <= 4, "geometry.degree must be in 1..4"),
            (geo.wall in ("adiabatic", "isothermal"), "geometry.wall must be adiabatic or isothermal"),
            (geo.wall != "isothermal" or (geo.wall_temperature or 0) > 0,
             "isothermal walls need a positive geometry.wall_temperature"),
            (len(d.orders) > 0 and all(int(p) >= 0 for p in d.orders), "discretization.orders must be non-negative"),
            (d.adjoint_mode in ("same-p", "p-plus-one"), "discretization.adjoint_mode must be same-p or p-plus-one"),
            (self.solver.tol > 0 and self.solver.max_iter > 0, "solver tolerances must be positive"),
            (set(self.objective.kinds) <= {"drag", "lift"} and self.objective.kinds, "objective.kinds ⊆ {drag, lift}"),
            (self.objective.trace in ("flux", "interior"), "objective.trace must be flux or interior"),
            (set(self.gradient.modes) <= {"pointwise", "variational"}, "unknown gradient mode"),
            (self.fd.h > 0, "fd.h must be positive"),
            (self.fd.scheme in ("central", "forward"), "fd.scheme must be central or forward"),
            (self.fd.workers >= 1, "fd.workers must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def hash(self) -> str:
        d = self.to_dict()
        d.pop("output")
        d["fd"].pop("workers")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]

    def dump(self, path) -> None:
        with open(path, "w") as f:
            f.write(f"# resolved configuration, hash {self.hash()}\n")
            yaml.safe_dump(self.to_dict(), f, sort_keys=False)


PRESETS = {
    "desk": {},
    "paper": {
        "geometry": {"n_wall_edges": 40, "n_radial": 41, "first_layer": 0.004},
        "discretization": {"orders": [3, 4, 5], "adjoint_mode": "p-plus-one"},
    },
}


def _merge(obj, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'}: expected a mapping, got {type(data).__name__}")
    names = {f.name: f for f in dataclasses.fields(obj)}
    for key, val in data.items():
        if key not in names:
            raise ConfigError(f"unknown key {where + key!r}; allowed: {sorted(names)}")
        cur = getattr(obj, key)
        if dataclasses.is_dataclass(cur):
            _merge(cur, val, f"{where}{key}.")
        elif isinstance(cur, list):
            if not isinstance(val, list):
                raise ConfigError(f"{where + key} must be a list")
            setattr(obj, key, list(val))
        elif isinstance(cur, bool) or isinstance(cur, str):
            if not isinstance(val, type(cur)):
                raise ConfigError(f"{where + key} must be a {type(cur).__name__}")
            setattr(obj, key, val)
        elif val is None and "None" in str(names[key].type):
            setattr(obj, key, None)
        elif isinstance(cur, (int, float)) or cur is None:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"{where + key} must be a number, got {val!r}")
            setattr(obj, key, type(cur)(val) if cur is not None else float(val))
        else:
            setattr(obj, key, val)


def load_config(path=None, preset: str | None = None, overrides: dict | None = None,
                environ=None) -> RunConfig:
    """Resolve preset -> file -> overrides -> environment (output dir and workers only)."""
    data = {}
    if path is not None:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    name = preset or data.get("preset", "desk")
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = RunConfig(preset=name)
    _merge(cfg, PRESETS[name], "")
    data = {k: v for k, v in data.items() if k != "preset"}
    _merge(cfg, data, "")
    if overrides:
        _merge(cfg, overrides, "")
    env = os.environ if environ is None else environ
    if env.get("NSSHAPE_OUT"):
        cfg.output.directory = env["NSSHAPE_OUT"]
    if env.get("NSSHAPE_WORKERS"):
        try:
            cfg.fd.workers = int(env["NSSHAPE_WORKERS"])
        except ValueError as exc:
            raise ConfigError(f"NSSHAPE_WORKERS must be an integer, got {env['NSSHAPE_WORKERS']!r}") from exc
    return cfg.validate()
