"""Strict-feedback plants ``x_i' = x_{i+1}``, ``x_n' = f(x) + g(x) u + d(t)``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import expr as ex
from .envelope import Envelope, suggest_rho0, validate_c1
from .surface import SurfaceSpec, evaluate_sigma, sign

StateFn = Callable[[Sequence[float]], float]
TimeFn = Callable[[float], float]


@dataclass(frozen=True)
class PlantModel:
    """Order-``n`` strict-feedback dynamics with assumption metadata.

    ``drift`` and ``gain`` take the state vector, ``disturbance`` takes time.
    ``sources`` keeps the expression text for config-defined plants.
    """

    order: int
    drift: StateFn
    gain: StateFn
    disturbance: TimeFn
    gain_sign: int = 1
    dist_bound: Optional[float] = None
    gain_floor: Optional[float] = None
    name: str = "custom"
    sources: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"plant order must be an integer >= 1, got {self.order}")
        if self.gain_sign not in (-1, 1):
            raise ValueError(f"gain_sign must be -1 or +1, got {self.gain_sign}")
        for name in ("dist_bound", "gain_floor"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive when declared, got {value}")


@dataclass(frozen=True)
class ReferenceSignal:
    """Desired output and its first ``n`` time derivatives (``n + 1`` functions)."""

    derivatives: tuple
    sources: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "derivatives", tuple(self.derivatives))
        if len(self.derivatives) < 2:
            raise ValueError("reference needs y_des and at least one derivative")

    @property
    def order(self) -> int:
        return len(self.derivatives) - 1

    def lift(self, t: float) -> np.ndarray:
        """``[y_des(t), ..., y_des^(n-1)(t)]``: the state that tracks perfectly."""
        return np.array([fn(t) for fn in self.derivatives[:-1]])


@dataclass(frozen=True)
class InitialCondition:
    x0: tuple
    error_bounds: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if not all(math.isfinite(v) for v in self.x0):
            raise ValueError(f"non-finite initial state {self.x0}")
        if self.error_bounds is not None:
            bounds = tuple(float(b) for b in self.error_bounds)
            if len(bounds) != len(self.x0):
                raise ValueError(f"need {len(self.x0)} error bounds, got {len(bounds)}")
            if any(not b > 0 for b in bounds):
                raise ValueError(f"error bounds must be positive, got {bounds}")
            object.__setattr__(self, "error_bounds", bounds)


def dynamics(plant: PlantModel, x: Sequence[float], u: float, t: float) -> np.ndarray:
    """State derivative ``[x2, ..., xn, f(x) + g(x) u + d(t)]``."""
    if len(x) != plant.order:
        raise ValueError(f"state has {len(x)} entries, plant order is {plant.order}")
    dx = np.empty(plant.order)
    dx[:-1] = x[1:]
    dx[-1] = plant.drift(x) + plant.gain(x) * u + plant.disturbance(t)
    return dx


def error_state(x: Sequence[float], ref: ReferenceSignal, t: float) -> np.ndarray:
    """Tracking error vector ``[x1 - y_des, x2 - y_des', ..., xn - y_des^(n-1)]``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (ref.order,):
        raise ValueError(f"state shape {x.shape} does not match reference order {ref.order}")
    return x - ref.lift(t)


def check_gain(plant: PlantModel, x: Sequence[float]) -> Optional[str]:
    """Return a message if the control gain breaks its declared sign or floor at ``x``."""
    g = plant.gain(x)
    if not math.isfinite(g):
        return f"control gain is non-finite ({g}) at x={list(x)}"
    if sign(g) != plant.gain_sign:
        return f"control gain {g:.6g} has sign {sign(g)}, declared {plant.gain_sign} (x={list(x)})"
    if plant.gain_floor is not None and abs(g) < plant.gain_floor:
        return f"|control gain| {abs(g):.6g} below declared floor {plant.gain_floor} (x={list(x)})"
    return None


# ---------------------------------------------------------------- builtins

PENDULUM = dict(m=0.01, l=9.8, k=0.01, g_grav=9.8)

BUILTIN_SOURCES = {
    "pendulum": {
        "order": 2,
        "f": "-(9.8/9.8)*sin(x1) - (0.01/0.01)*x2 + sin(x2)",
        "g": "1/(0.01*9.8^2)",
        "d": "0.5*sin(t)",
        "reference": ["sin(t)", "cos(t)", "-sin(t)"],
        "initial_conditions": [[0.9, 0.9], [0.7, 0.7], [0.3, 0.3], [0.1, 0.1]],
    },
    "example2": {
        "order": 4,
        "f": "x3*sin(2*x2) + x1*cos(x4)",
        "g": "2 - sin(x4)",
        "d": "pw(t <= 6, 0.5*sin(pi/2*t), t <= 9, sin(pi*t), cos(pi*t) - 1)",
        "reference": [
            "sin(t) + cos(0.5*t)",
            "cos(t) - 0.5*sin(0.5*t)",
            "-sin(t) - 0.25*cos(0.5*t)",
            "-cos(t) + 0.125*sin(0.5*t)",
            "sin(t) + 0.0625*cos(0.5*t)",
        ],
        "initial_conditions": [[0.5] * 4, [0.6] * 4, [0.7] * 4],
    },
}
ALIASES = {"example1": "pendulum"}


def _pendulum():
    m, l, k, g_grav = PENDULUM["m"], PENDULUM["l"], PENDULUM["k"], PENDULUM["g_grav"]
    gain = 1.0 / (m * l * l)

    def drift(x):
        return -(g_grav / l) * math.sin(x[0]) - (k / m) * x[1] + math.sin(x[1])

    plant = PlantModel(
        order=2,
        drift=drift,
        gain=lambda x: gain,
        disturbance=lambda t: 0.5 * math.sin(t),
        gain_sign=1,
        gain_floor=gain,
        name="pendulum",
    )
    ref = ReferenceSignal((math.sin, math.cos, lambda t: -math.sin(t)))
    return plant, ref


def _example2_disturbance(t):
    # first matching branch wins at the shared breakpoints t=6 and t=9
    if t <= 6:
        return 0.5 * math.sin(0.5 * math.pi * t)
    if t <= 9:
        return math.sin(math.pi * t)
    return math.cos(math.pi * t) - 1.0


def _example2():
    plant = PlantModel(
        order=4,
        drift=lambda x: x[2] * math.sin(2 * x[1]) + x[0] * math.cos(x[3]),
        gain=lambda x: 2.0 - math.sin(x[3]),
        disturbance=_example2_disturbance,
        gain_sign=1,
        gain_floor=1.0,
        name="example2",
    )
    ref = ReferenceSignal((
        lambda t: math.sin(t) + math.cos(0.5 * t),
        lambda t: math.cos(t) - 0.5 * math.sin(0.5 * t),
        lambda t: -math.sin(t) - 0.25 * math.cos(0.5 * t),
        lambda t: -math.cos(t) + 0.125 * math.sin(0.5 * t),
        lambda t: math.sin(t) + 0.0625 * math.cos(0.5 * t),
    ))
    return plant, ref


def builtin(name: str):
    """Return ``(plant, reference, initial_conditions)`` for a named builtin example."""
    key = ALIASES.get(name, name)
    if key == "pendulum":
        plant, ref = _pendulum()
    elif key == "example2":
        plant, ref = _example2()
    else:
        raise KeyError(f"unknown builtin plant {name!r}; choose from {sorted(BUILTIN_SOURCES)}")
    ics = [InitialCondition(x0) for x0 in BUILTIN_SOURCES[key]["initial_conditions"]]
    return plant, ref, ics


# ---------------------------------------------------------------- expression plants

def _uses_time(e) -> bool:
    if isinstance(e, ex.Var):
        return e.index == 0
    if isinstance(e, ex.Neg):
        return _uses_time(e.operand)
    if isinstance(e, (ex.BinOp, ex.Cond)):
        return _uses_time(e.left) or _uses_time(e.right)
    if isinstance(e, ex.Call):
        return any(_uses_time(a) for a in e.args)
    if isinstance(e, ex.Piecewise):
        return _uses_time(e.default) or any(_uses_time(c) or _uses_time(v) for c, v in e.branches)
    return False


def plant_from_expressions(order, f, g, d, gain_sign=1, dist_bound=None, gain_floor=None, name="custom"):
    """Build a plant from expression strings; ``f``/``g`` see ``x1..xn``, ``d`` sees only ``t``."""
    f_ast, g_ast = ex.parse(f, order), ex.parse(g, order)
    for label, ast in (("f", f_ast), ("g", g_ast)):
        if _uses_time(ast):
            raise ex.ExprError(f"{label} must be a function of the state only; put time-varying terms in d")
    d_ast = ex.parse(d, 0)
    f_fn, g_fn, d_fn = ex.compile_expr(f_ast), ex.compile_expr(g_ast), ex.compile_expr(d_ast)
    return PlantModel(
        order=order,
        drift=lambda x: f_fn(0.0, x),
        gain=lambda x: g_fn(0.0, x),
        disturbance=lambda t: d_fn(t, ()),
        gain_sign=gain_sign,
        dist_bound=dist_bound,
        gain_floor=gain_floor,
        name=name,
        sources={"f": f, "g": g, "d": d},
    )


def reference_from_expressions(derivatives: Sequence[str]) -> ReferenceSignal:
    fns = [ex.compile_expr(ex.parse(src, 0)) for src in derivatives]
    return ReferenceSignal(tuple((lambda fn: lambda t: fn(t, ()))(fn) for fn in fns), sources=tuple(derivatives))


# ---------------------------------------------------------------- assumption report

@dataclass
class AssumptionReport:
    gain_sign: int
    gain_at_x0: float
    gain_sign_ok: bool
    gain_floor: Optional[float]
    gain_floor_ok: Optional[bool]
    dist_bound: Optional[float]
    dist_bound_status: str
    initial_error: list
    error_bounds: Optional[list]
    error_bounds_ok: Optional[bool]
    sigma0: Optional[float] = None
    suggested_rho0: Optional[float] = None
    rho0: Optional[float] = None
    c1_ok: Optional[bool] = None
    issues: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def as_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items()}
        out["ok"] = self.ok
        return out


def validate_assumptions(
    plant: PlantModel,
    ref: ReferenceSignal,
    ic: InitialCondition,
    surface: Optional[SurfaceSpec] = None,
    envelope: Optional[Envelope] = None,
    dist_grid: Optional[Sequence[float]] = None,
) -> AssumptionReport:
    """Report on gain sign/floor, disturbance bound, initial errors and C1.

    Nothing here raises; callers decide whether a report with issues blocks a run.
    ``dist_grid`` (times) lets a declared disturbance bound be spot-checked.
    """
    issues = []
    if len(ic.x0) != plant.order or ref.order != plant.order:
        raise ValueError(
            f"order mismatch: plant {plant.order}, reference {ref.order}, initial state {len(ic.x0)}"
        )
    g0 = plant.gain(ic.x0)
    sign_ok = sign(g0) == plant.gain_sign
    if not sign_ok:
        issues.append(f"gain sign: sign(g(x0)) is {sign(g0)}, declared {plant.gain_sign}")
    floor_ok = None
    if plant.gain_floor is not None:
        floor_ok = abs(g0) >= plant.gain_floor
        if not floor_ok:
            issues.append(f"gain floor: |g(x0)|={abs(g0):.6g} below declared floor {plant.gain_floor}")

    if plant.dist_bound is None:
        dist_status = "asserted, unverified"
    elif dist_grid is None:
        dist_status = "declared"
    else:
        worst = max(abs(plant.disturbance(t)) for t in dist_grid)
        if worst < plant.dist_bound:
            dist_status = f"declared, holds on grid (max |d|={worst:.6g})"
        else:
            dist_status = f"declared, violated on grid (max |d|={worst:.6g})"
            issues.append(f"disturbance bound: |d(t)| reaches {worst:.6g} >= {plant.dist_bound}")

    e0 = error_state(ic.x0, ref, 0.0)
    bounds_ok = None
    if ic.error_bounds is not None:
        bounds_ok = bool(np.all(np.abs(e0) < np.asarray(ic.error_bounds)))
        if not bounds_ok:
            issues.append(f"initial error bound: error {e0.tolist()} not within {list(ic.error_bounds)}")

    report = AssumptionReport(
        gain_sign=plant.gain_sign,
        gain_at_x0=float(g0),
        gain_sign_ok=sign_ok,
        gain_floor=plant.gain_floor,
        gain_floor_ok=floor_ok,
        dist_bound=plant.dist_bound,
        dist_bound_status=dist_status,
        initial_error=e0.tolist(),
        error_bounds=list(ic.error_bounds) if ic.error_bounds is not None else None,
        error_bounds_ok=bounds_ok,
        issues=issues,
    )
    if surface is not None:
        report.sigma0 = evaluate_sigma(e0, surface)
        if ic.error_bounds is not None:
            report.suggested_rho0 = suggest_rho0(surface, ic.error_bounds)
        if envelope is not None:
            report.rho0 = envelope.rho0
            report.c1_ok = validate_c1(envelope, report.sigma0)
            if not report.c1_ok:
                issues.append(f"C1: rho0={envelope.rho0} does not exceed |sigma(0)|={abs(report.sigma0):.6g}")
    return report
