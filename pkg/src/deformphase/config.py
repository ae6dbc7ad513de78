"""Scenario configuration: one JSON document per run, unknown keys rejected.

Example::

    {
      "name": "symmetric-top",
      "model": {"kind": "rigid", "inertia": [1, 2, 2]},
      "pi0": [0.5, 0.8660254037844386, 0.0],
      "t0": 0.0, "t1": 30.0, "h": 0.001,
      "tolerances": {"closure_tol": 0.001, "tol_spatial": 1e-6, "axis_tol": 0.001},
      "outputs": {"trajectory": true, "report": true, "model_csv": false}
    }

Model kinds and their keys:

``rigid``        inertia
``vibrational``  inertia, scale (scalar function)
``axisym``       I1 (scalar function), I23 (scalar function)
``diagonal``     moments (three scalar functions)
``constant``     inertia, internal_momentum
``tabulated``    path (CSV, relative to the config file)
``particles``    positions, masses (CSV paths), optional sample_times

An inertia is a 3x3 nested list or the three diagonal entries.  A scalar
function is a number or ``{"kind": "constant"|"linear"|"exp"|"sin", ...}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import deformation as dm
from .errors import ConfigError, DeformPhaseError
from .geom3 import check_rotation

MODEL_KEYS = {
    "rigid": ({"inertia"}, set()),
    "vibrational": ({"inertia", "scale"}, set()),
    "axisym": ({"I1", "I23"}, set()),
    "diagonal": ({"moments"}, set()),
    "constant": ({"inertia", "internal_momentum"}, set()),
    "tabulated": ({"path"}, set()),
    "particles": ({"positions", "masses"}, {"sample_times"}),
}


@dataclass(frozen=True)
class RunTolerances:
    closure_tol: float = 1e-3
    tol_spatial: float = 1e-6
    axis_tol: float = 1e-3


@dataclass(frozen=True)
class Outputs:
    trajectory: bool = True
    report: bool = True
    model_csv: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    model: dict
    pi0: tuple
    t0: float
    t1: float
    h: float
    R0: tuple | None = None
    name: str = "scenario"
    allow_partial: bool = False
    max_segments: int | None = None
    tolerances: RunTolerances = field(default_factory=RunTolerances)
    outputs: Outputs = field(default_factory=Outputs)
    base_dir: str = "."

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d


_TOP_REQUIRED = {"model", "pi0", "t0", "t1", "h"}
_TOP_OPTIONAL = {"R0", "name", "allow_partial", "max_segments", "tolerances", "outputs"}


def _check_keys(where: str, got: dict, required: set, optional: set) -> None:
    if not isinstance(got, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(got) - required - optional
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(got)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


def _real(where: str, x) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ConfigError(f"{where}: expected a finite number, got {x!r}")
    return float(x)


def _record(cls, where: str, raw):
    if raw is None:
        return cls()
    names = set(cls.__dataclass_fields__)
    _check_keys(where, raw, set(), names)
    kwargs = {}
    for k, v in raw.items():
        if cls is Outputs:
            if not isinstance(v, bool):
                raise ConfigError(f"{where}.{k}: expected true/false")
            kwargs[k] = v
        else:
            kwargs[k] = _real(f"{where}.{k}", v)
            if kwargs[k] <= 0.0:
                raise ConfigError(f"{where}.{k}: must be positive")
    return cls(**kwargs)


def parse_config(raw: dict, base_dir: str | Path = ".") -> ScenarioConfig:
    """Validate a decoded JSON document; raises ConfigError."""
    _check_keys("config", raw, _TOP_REQUIRED, _TOP_OPTIONAL)
    model = raw["model"]
    if not isinstance(model, dict) or model.get("kind") not in MODEL_KEYS:
        raise ConfigError(f"model.kind must be one of {sorted(MODEL_KEYS)}")
    req, opt = MODEL_KEYS[model["kind"]]
    _check_keys("model", model, req | {"kind"}, opt)
    pi0 = raw["pi0"]
    if not isinstance(pi0, list) or len(pi0) != 3:
        raise ConfigError("pi0: expected three numbers")
    pi0 = tuple(_real("pi0", x) for x in pi0)
    if math.hypot(*pi0) == 0.0:
        raise ConfigError("pi0 must be nonzero")
    t0, t1, h = (_real(k, raw[k]) for k in ("t0", "t1", "h"))
    if not t1 > t0:
        raise ConfigError("need t1 > t0")
    if not h > 0.0:
        raise ConfigError("need h > 0")
    R0 = raw.get("R0")
    if R0 is not None:
        try:
            R0 = tuple(map(tuple, check_rotation(np.asarray(R0, dtype=float)).tolist()))
        except (ValueError, DeformPhaseError) as exc:
            raise ConfigError(f"R0: {exc}") from exc
    allow_partial = raw.get("allow_partial", False)
    if not isinstance(allow_partial, bool):
        raise ConfigError("allow_partial: expected true/false")
    max_segments = raw.get("max_segments")
    if max_segments is not None and (not isinstance(max_segments, int) or max_segments < 1):
        raise ConfigError("max_segments: expected a positive integer")
    name = raw.get("name", "scenario")
    if not isinstance(name, str) or not name:
        raise ConfigError("name: expected a nonempty string")
    return ScenarioConfig(model, pi0, t0, t1, h, R0, name, allow_partial, max_segments,
                          _record(RunTolerances, "tolerances", raw.get("tolerances")),
                          _record(Outputs, "outputs", raw.get("outputs")), str(base_dir))


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(raw, path.parent)


def build_model(cfg: ScenarioConfig) -> dm.DeformationModel:
    """Instantiate the deformation model described by ``cfg.model``."""
    spec = cfg.model
    kind = spec["kind"]
    base = Path(cfg.base_dir)
    try:
        if kind == "rigid":
            return dm.make_rigid(np.asarray(spec["inertia"], dtype=float))
        if kind == "vibrational":
            return dm.make_vibrational(np.asarray(spec["inertia"], dtype=float), spec["scale"])
        if kind == "axisym":
            return dm.make_axisymmetric_stretch(spec["I1"], spec["I23"])
        if kind == "diagonal":
            moments = spec["moments"]
            if not isinstance(moments, list) or len(moments) != 3:
                raise ConfigError("model.moments: expected three scalar functions")
            return dm.make_diagonal_timevarying(*moments)
        if kind == "constant":
            return dm.make_constant(np.asarray(spec["inertia"], dtype=float),
                                    np.asarray(spec["internal_momentum"], dtype=float))
        if kind == "tabulated":
            return dm.read_tabulated_csv(base / spec["path"])
        system = dm.read_particle_csv(base / spec["positions"], base / spec["masses"])
        return dm.make_particle_model(system, spec.get("sample_times"))
    except ConfigError:
        raise
    except (DeformPhaseError, ValueError, TypeError, OSError) as exc:
        raise ConfigError(f"model: {exc}") from exc
