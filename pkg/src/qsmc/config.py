"""JSON experiment configs and the bundled example setups."""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from . import expr as ex
from .controllers import DEFAULT_CLAMP_DELTA, DEFAULT_U_MAX, BaselineSmcLaw, QsmcLaw
from .envelope import DesignConditionError, Envelope
from .plants import (
    BUILTIN_SOURCES, InitialCondition, PlantModel, ReferenceSignal, builtin, plant_from_expressions,
    reference_from_expressions,
)
from .sim import SimConfig
from .surface import SurfaceSpec, binomial_surface

DEFAULT_BASELINE_GAIN = 5.0


class ConfigError(ValueError):
    """Invalid experiment config; ``location`` names the offending key path."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


@dataclass
class ExperimentConfig:
    name: str
    plant: PlantModel
    reference: ReferenceSignal
    surface: SurfaceSpec
    envelope: Envelope  # built unchecked; callers test C2 themselves
    sim: SimConfig
    initial_conditions: list
    clamp_delta: float = DEFAULT_CLAMP_DELTA
    u_max: float = DEFAULT_U_MAX
    baseline_gain: float = DEFAULT_BASELINE_GAIN
    out_dir: Optional[str] = None
    raw: dict = field(default_factory=dict, repr=False)

    def qsmc_law(self) -> QsmcLaw:
        return QsmcLaw(self.envelope, self.surface, self.plant.gain_sign, self.clamp_delta, self.u_max)

    def baseline_law(self, gain: Optional[float] = None) -> BaselineSmcLaw:
        return BaselineSmcLaw(self.surface, self.baseline_gain if gain is None else gain, self.plant.gain_sign)

    def to_dict(self) -> dict:
        """Normalized JSON document; loading it reproduces the same experiment."""
        return copy.deepcopy(self.raw)

    def with_sim(self, **changes) -> "ExperimentConfig":
        raw = self.to_dict()
        raw.setdefault("sim", {}).update({k: v for k, v in changes.items() if v is not None})
        return parse_config(raw)


def _section(doc, key, required=True) -> dict:
    value = doc.get(key)
    if value is None:
        if required:
            raise ConfigError(key, "missing section")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(key, f"expected an object, got {type(value).__name__}")
    return value


def _number(section, key, location, required=True, default=None, positive=True):
    if key not in section:
        if required:
            raise ConfigError(f"{location}.{key}", "missing value")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{location}.{key}", f"expected a number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"{location}.{key}", f"must be positive, got {value}")
    return float(value)


def _vectors(value, location, n):
    if not isinstance(value, list) or not value:
        raise ConfigError(location, "expected a non-empty list")
    out = []
    for i, vec in enumerate(value):
        if not isinstance(vec, list) or len(vec) != n or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in vec
        ):
            raise ConfigError(f"{location}[{i}]", f"expected a list of {n} numbers, got {vec!r}")
        out.append([float(v) for v in vec])
    return out


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a config document and build the library objects it describes."""
    if not isinstance(doc, dict):
        raise ConfigError("", "config must be a JSON object")
    raw = copy.deepcopy(doc)
    plant_sec = _section(doc, "plant")
    builtin_ics = None
    if "builtin" in plant_sec:
        try:
            plant, ref, builtin_ics = builtin(plant_sec["builtin"])
        except KeyError as exc:
            raise ConfigError("plant.builtin", str(exc.args[0])) from None
    else:
        order = plant_sec.get("order")
        if not isinstance(order, int) or isinstance(order, bool) or order < 1:
            raise ConfigError("plant.order", f"expected an integer >= 1, got {order!r}")
        for key in ("f", "g", "d"):
            if not isinstance(plant_sec.get(key), str):
                raise ConfigError(f"plant.{key}", "expected an expression string")
        gain_sign = plant_sec.get("gain_sign")
        if gain_sign not in (-1, 1):
            raise ConfigError("plant.gain_sign", f"must be -1 or 1, got {gain_sign!r}")
        try:
            plant = plant_from_expressions(
                order, plant_sec["f"], plant_sec["g"], plant_sec["d"], gain_sign,
                _number(plant_sec, "dist_bound", "plant", required=False),
                _number(plant_sec, "gain_floor", "plant", required=False),
                name=doc.get("name", "custom"),
            )
        except ex.ExprError as exc:
            raise ConfigError("plant", str(exc)) from None
        ref = None
    n = plant.order

    ref_sec = _section(doc, "reference", required=ref is None)
    if ref_sec:
        derivs = ref_sec.get("derivatives")
        if not isinstance(derivs, list) or len(derivs) != n + 1 or not all(isinstance(s, str) for s in derivs):
            raise ConfigError("reference.derivatives", f"expected {n + 1} expression strings")
        try:
            ref = reference_from_expressions(derivs)
        except ex.ExprError as exc:
            raise ConfigError("reference.derivatives", str(exc)) from None

    surf_sec = _section(doc, "surface")
    try:
        if "pole" in surf_sec:
            surface = binomial_surface(n, _number(surf_sec, "pole", "surface"))
        elif "coeffs" in surf_sec:
            coeffs = surf_sec["coeffs"]
            if not isinstance(coeffs, list) or len(coeffs) != n:
                raise ConfigError("surface.coeffs", f"expected {n} coefficients ending in 1")
            surface = SurfaceSpec(tuple(coeffs))
        else:
            raise ConfigError("surface", "give either 'pole' or 'coeffs'")
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("surface", str(exc)) from None

    env_sec = _section(doc, "envelope")
    try:
        envelope = Envelope.unchecked(*(_number(env_sec, k, "envelope") for k in ("rho0", "rho_inf", "mu", "epsilon")))
    except DesignConditionError as exc:
        raise ConfigError("envelope", str(exc)) from None

    sim_sec = _section(doc, "sim", required=False)
    unknown = set(sim_sec) - {"dt", "horizon", "control_mode", "record_stride", "monitor"}
    if unknown:
        raise ConfigError("sim", f"unknown key(s) {sorted(unknown)}")
    try:
        sim = SimConfig(**sim_sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError("sim", str(exc)) from None

    if "initial_conditions" in doc:
        x0s = _vectors(doc["initial_conditions"], "initial_conditions", n)
    elif builtin_ics is not None:
        x0s = [list(ic.x0) for ic in builtin_ics]
    else:
        raise ConfigError("initial_conditions", "missing (required for custom plants)")
    bounds = None
    if "error_bounds" in doc:
        bounds = _vectors([doc["error_bounds"]], "error_bounds", n)[0]
        if any(b <= 0 for b in bounds):
            raise ConfigError("error_bounds", "bounds must be positive")
    ics = [InitialCondition(x0, bounds) for x0 in x0s]

    ctrl = _section(doc, "controller", required=False)
    clamp_delta = _number(ctrl, "clamp_delta", "controller", required=False, default=DEFAULT_CLAMP_DELTA)
    if not clamp_delta < 1:
        raise ConfigError("controller.clamp_delta", "must lie in (0, 1)")
    out = _section(doc, "output", required=False)
    return ExperimentConfig(
        name=str(doc.get("name", plant.name)),
        plant=plant,
        reference=ref,
        surface=surface,
        envelope=envelope,
        sim=sim,
        initial_conditions=ics,
        clamp_delta=clamp_delta,
        u_max=_number(ctrl, "u_max", "controller", required=False, default=DEFAULT_U_MAX),
        baseline_gain=_number(ctrl, "baseline_gain", "controller", required=False, default=DEFAULT_BASELINE_GAIN),
        out_dir=out.get("dir"),
        raw=raw,
    )


def load_config(path_or_name: str) -> ExperimentConfig:
    """Load a JSON config file, or one of the names in :data:`EXAMPLE_CONFIGS`."""
    if not os.path.exists(path_or_name) and path_or_name in EXAMPLE_CONFIGS:
        return parse_config(example_config(path_or_name))
    try:
        with open(path_or_name) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("", f"cannot read config {path_or_name!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    return parse_config(doc)


EXAMPLE_CONFIGS = {
    "example1": {
        "name": "example1",
        "plant": {"builtin": "pendulum"},
        "surface": {"pole": 2.0},
        "envelope": {"rho0": 4.0, "rho_inf": 0.05, "mu": 3.0, "epsilon": 0.1},
        "sim": {"dt": 1e-3, "horizon": 20.0, "control_mode": "continuous", "record_stride": 1},
        "initial_conditions": BUILTIN_SOURCES["pendulum"]["initial_conditions"],
        "controller": {"baseline_gain": DEFAULT_BASELINE_GAIN},
    },
    # literal coefficient set [c1, c2, c3] = [6, 12, 8]
    "example2": {
        "name": "example2",
        "plant": {"builtin": "example2"},
        "surface": {"coeffs": [6.0, 12.0, 8.0, 1.0]},
        "envelope": {"rho0": 5.0, "rho_inf": 0.05, "mu": 3.0, "epsilon": 0.1},
        "sim": {"dt": 1e-3, "horizon": 20.0, "control_mode": "continuous", "record_stride": 1},
        "initial_conditions": BUILTIN_SOURCES["example2"]["initial_conditions"],
    },
    # (s+2)^3 ordering, which admits the closed-form tracking bound
    "example2-binomial": {
        "name": "example2-binomial",
        "plant": {"builtin": "example2"},
        "surface": {"pole": 2.0},
        "envelope": {"rho0": 5.0, "rho_inf": 0.05, "mu": 3.0, "epsilon": 0.1},
        "sim": {"dt": 1e-3, "horizon": 20.0, "control_mode": "continuous", "record_stride": 1},
        "initial_conditions": BUILTIN_SOURCES["example2"]["initial_conditions"],
    },
}


def example_config(name: str) -> dict:
    try:
        return copy.deepcopy(EXAMPLE_CONFIGS[name])
    except KeyError:
        raise ConfigError("", f"unknown example config {name!r}; choose from {sorted(EXAMPLE_CONFIGS)}") from None
