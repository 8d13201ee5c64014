"""Run configuration: YAML parsing, validation, and object builders.

A configuration is a nested key-value document with sections ``model``,
``grid``, ``initial`` plus scalar entries; every constraint violation is
collected so a bad file reports all problems at once.  Parsed configurations
round-trip losslessly through :func:`serialize_config`.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import yaml

from .errors import ConfigError, DomainError
from .flux_model import FluxModel, ParamFamily
from .grids import BoundaryCondition, Grid1D
from .riemann import CouplingMode

__all__ = [
    "RunConfig",
    "parse_config",
    "serialize_config",
    "load_config",
    "build_model",
    "build_grid",
    "build_mode",
    "build_initial",
    "build_boundaries",
    "snapshot_times",
]

_DEFAULTS = {
    "grid": {"x_min": -2.0, "x_max": 2.0, "n_left": 400, "n_right": 400},
    "mode": "nonclassical",
    "t_end": 0.5,
    "snapshots": 11,
    "cfl": 0.49,
    "boundary": {"left": "outflow", "right": "outflow"},
    "seed": 0,
}

_FAMILY_KEYS = ("alpha1", "beta1", "alpha2", "beta2", "a", "b", "K1", "K2")


@dataclass
class RunConfig:
    """Validated run description; ``to_dict`` emits the canonical form."""

    model: dict
    grid: dict
    mode: str
    initial: dict
    t_end: float
    snapshots: Union[int, list]
    cfl: float
    boundary: dict
    eps: Optional[float] = None
    output: Optional[str] = None
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "model": self.model,
            "grid": self.grid,
            "mode": self.mode,
            "initial": self.initial,
            "t_end": self.t_end,
            "snapshots": self.snapshots,
            "cfl": self.cfl,
            "boundary": self.boundary,
            "seed": self.seed,
        }
        if self.eps is not None:
            out["eps"] = self.eps
        if self.output is not None:
            out["output"] = self.output
        out.update(self.extra)
        return out


def _model_p_gap(model_sec: dict) -> Optional[float]:
    if "preset" in model_sec:
        try:
            m = FluxModel.preset(model_sec["preset"])
            return m.P2 - m.P1
        except DomainError:
            return None
    if "P1" in model_sec and "P2" in model_sec:
        return float(model_sec["P2"]) - float(model_sec["P1"])
    return None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML configuration.

    Raises ConfigError whose message lists every violated constraint; parse
    errors carry the YAML line information.
    """
    try:
        raw = yaml.safe_load(io.StringIO(text))
    except yaml.YAMLError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at the top level")

    errors = []

    model_sec = raw.get("model", {"preset": "TF1"})
    if not isinstance(model_sec, dict):
        errors.append("model must be a mapping")
        model_sec = {"preset": "TF1"}
    elif "preset" in model_sec:
        try:
            FluxModel.preset(model_sec["preset"])
        except DomainError as exc:
            errors.append(str(exc))
    else:
        for key in ("q", "C", "P1", "P2"):
            if key not in model_sec:
                errors.append(f"model.{key} required without a preset")
        if "q" in model_sec and model_sec["q"] < 0:
            errors.append("model.q must be >= 0")
        if "C" in model_sec and model_sec["C"] <= 0:
            errors.append("model.C must be > 0")
        if ("P1" in model_sec and "P2" in model_sec
                and not model_sec["P1"] < model_sec["P2"]):
            errors.append("model.P1 must be < model.P2")
        fam = model_sec.get("family", {})
        if not isinstance(fam, dict):
            errors.append("model.family must be a mapping")
        else:
            unknown = set(fam) - set(_FAMILY_KEYS)
            if unknown:
                errors.append(f"unknown family keys: {sorted(unknown)}")

    grid_sec = dict(_DEFAULTS["grid"])
    grid_sec.update(raw.get("grid", {}) or {})
    if not grid_sec["x_min"] < 0.0 < grid_sec["x_max"]:
        errors.append("grid must contain the interface: x_min < 0 < x_max")
    for key in ("n_left", "n_right"):
        if int(grid_sec[key]) < 1:
            errors.append(f"grid.{key} must be >= 1")
        grid_sec[key] = int(grid_sec[key])
    if not errors:
        dxl = -grid_sec["x_min"] / grid_sec["n_left"]
        dxr = grid_sec["x_max"] / grid_sec["n_right"]
        if abs(dxl - dxr) > 1e-12 * max(dxl, dxr):
            errors.append(
                "grid cell widths differ between subdomains; the interface "
                "must fall on a face")

    mode = raw.get("mode", _DEFAULTS["mode"])
    if isinstance(mode, str):
        base = mode.split(":", 1)[0]
        if base not in ("nonclassical", "optimal_entropy", "flux"):
            errors.append(f"unknown mode {mode!r}")
        if base == "flux":
            try:
                float(mode.split(":", 1)[1])
            except (IndexError, ValueError):
                errors.append("flux mode must look like flux:<value>")
    else:
        errors.append("mode must be a string")
        mode = _DEFAULTS["mode"]

    eps = raw.get("eps")
    if eps is not None:
        eps = float(eps)
        if eps <= 0:
            errors.append("eps must be > 0")
        gap = _model_p_gap(model_sec if isinstance(model_sec, dict) else {})
        if gap is not None and eps >= gap:
            errors.append(f"eps must be < P2-P1 = {gap}")

    initial = raw.get("initial", {"kind": "riemann", "ul": 0.5, "ur": 0.5})
    if not isinstance(initial, dict) or "kind" not in initial:
        errors.append("initial must be a mapping with a 'kind'")
        initial = {"kind": "riemann", "ul": 0.5, "ur": 0.5}
    else:
        kind = initial["kind"]
        if kind == "riemann":
            for key in ("ul", "ur"):
                if key not in initial:
                    errors.append(f"initial.{key} required for riemann data")
                elif not 0.0 <= float(initial[key]) <= 1.0:
                    errors.append(f"initial.{key} must lie in [0,1]")
        elif kind == "indicator":
            for key in ("a", "b", "value"):
                if key not in initial:
                    errors.append(f"initial.{key} required for indicator data")
            if "a" in initial and "b" in initial and not initial["a"] < initial["b"]:
                errors.append("initial.a must be < initial.b")
            for key in ("value", "background"):
                if key in initial and not 0.0 <= float(initial[key]) <= 1.0:
                    errors.append(f"initial.{key} must lie in [0,1]")
        elif kind == "csv":
            if "path" not in initial:
                errors.append("initial.path required for csv data")
        else:
            errors.append(f"unknown initial data kind {kind!r}")

    t_end = float(raw.get("t_end", _DEFAULTS["t_end"]))
    if t_end < 0:
        errors.append("t_end must be >= 0")
    snapshots = raw.get("snapshots", _DEFAULTS["snapshots"])
    if isinstance(snapshots, int):
        if snapshots < 2:
            errors.append("snapshots count must be >= 2")
    elif isinstance(snapshots, (list, tuple)):
        snapshots = [float(t) for t in snapshots]
        if any(t < 0 or t > t_end + 1e-12 for t in snapshots):
            errors.append("snapshot times must lie in [0, t_end]")
    else:
        errors.append("snapshots must be a count or a list of times")
    cfl = float(raw.get("cfl", _DEFAULTS["cfl"]))
    if not 0.0 < cfl < 1.0:
        errors.append("cfl must lie in (0,1)")

    boundary = dict(_DEFAULTS["boundary"])
    boundary.update(raw.get("boundary", {}) or {})
    for side in ("left", "right"):
        spec = str(boundary[side])
        base = spec.split(":", 1)[0]
        if base not in ("outflow", "zero_flux", "dirichlet"):
            errors.append(f"unknown boundary condition {spec!r}")
        elif base == "dirichlet":
            try:
                v = float(spec.split(":", 1)[1])
                if not 0.0 <= v <= 1.0:
                    errors.append("dirichlet boundary value must lie in [0,1]")
            except (IndexError, ValueError):
                errors.append("dirichlet boundary must look like dirichlet:<value>")

    seed = raw.get("seed", _DEFAULTS["seed"])
    if not isinstance(seed, int):
        errors.append("seed must be an integer")
        seed = 0

    known = {"model", "grid", "mode", "eps", "initial", "t_end", "snapshots",
             "cfl", "boundary", "output", "seed"}
    extra = {k: raw[k] for k in raw if k not in known}

    if errors:
        raise ConfigError("; ".join(errors))
    return RunConfig(model=model_sec, grid=grid_sec, mode=mode,
                     initial=initial, t_end=t_end, snapshots=snapshots,
                     cfl=cfl, boundary=boundary, eps=eps,
                     output=raw.get("output"), seed=seed, extra=extra)


def serialize_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


# -- builders -----------------------------------------------------------------


def build_model(cfg: RunConfig) -> FluxModel:
    sec = cfg.model
    if "preset" in sec:
        return FluxModel.preset(sec["preset"])
    family = ParamFamily(**sec.get("family", {}))
    return FluxModel.from_family(sec["q"], sec["C"], sec["P1"], sec["P2"],
                                 family, name=sec.get("name", ""))


def build_grid(cfg: RunConfig) -> Grid1D:
    g = cfg.grid
    return Grid1D.from_bounds(g["x_min"], g["x_max"], g["n_left"], g["n_right"])


def build_mode(cfg: RunConfig) -> CouplingMode:
    if cfg.mode.startswith("flux:"):
        return CouplingMode.prescribed_flux(float(cfg.mode.split(":", 1)[1]))
    if cfg.mode == "nonclassical":
        return CouplingMode.non_classical()
    return CouplingMode.optimal_entropy()


def build_initial(cfg: RunConfig, grid: Grid1D) -> np.ndarray:
    spec = cfg.initial
    x = grid.centers
    kind = spec["kind"]
    if kind == "riemann":
        return np.where(x < 0.0, float(spec["ul"]), float(spec["ur"]))
    if kind == "indicator":
        background = float(spec.get("background", 0.0))
        inside = (x > float(spec["a"])) & (x < float(spec["b"]))
        return np.where(inside, float(spec["value"]), background)
    if kind == "csv":
        data = np.genfromtxt(spec["path"], delimiter=",", names=True)
        return np.interp(x, data["x"], data["u"])
    raise ConfigError(f"unknown initial data kind {kind!r}")


def _parse_bc(spec: str) -> BoundaryCondition:
    if spec == "outflow":
        return BoundaryCondition.outflow()
    if spec == "zero_flux":
        return BoundaryCondition.zero_flux()
    return BoundaryCondition.dirichlet(float(spec.split(":", 1)[1]))


def build_boundaries(cfg: RunConfig):
    return (_parse_bc(str(cfg.boundary["left"])),
            _parse_bc(str(cfg.boundary["right"])))


def snapshot_times(cfg: RunConfig) -> list:
    if isinstance(cfg.snapshots, int):
        return list(np.linspace(0.0, cfg.t_end, cfg.snapshots)[1:])
    return [t for t in cfg.snapshots if t > 0]
