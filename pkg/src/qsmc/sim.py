"""Fixed-step RK4 closed-loop simulation, trajectory records and verification metrics."""
from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .envelope import Envelope, reaching_time_bound, rho
from .plants import InitialCondition, PlantModel, ReferenceSignal, check_gain
from .surface import SurfaceSpec, tracking_bound

CONTROL_MODES = ("continuous", "zoh")
MONITOR_MODES = ("abort", "warn", "off")
STEADY_STATE_FRACTION = 0.25


@dataclass(frozen=True)
class SimConfig:
    """Integration settings.

    In ``continuous`` mode the control is re-evaluated at every RK4 stage; in
    ``zoh`` mode it is computed once from the step-start state and held.
    """

    dt: float = 1e-3
    horizon: float = 20.0
    control_mode: str = "continuous"
    record_stride: int = 1
    monitor: str = "abort"

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be a positive real, got {self.dt}")
        if not self.dt < self.horizon:
            raise ValueError(f"dt={self.dt} must be smaller than horizon={self.horizon}")
        if self.control_mode not in CONTROL_MODES:
            raise ValueError(f"control_mode must be one of {CONTROL_MODES}, got {self.control_mode!r}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be an integer >= 1, got {self.record_stride}")
        if self.monitor not in MONITOR_MODES:
            raise ValueError(f"monitor must be one of {MONITOR_MODES}, got {self.monitor!r}")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.horizon / self.dt + 1e-9))

    @property
    def n_samples(self) -> int:
        return self.n_steps // self.record_stride + 1


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray  # (samples, n)
    u: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray
    e: np.ndarray  # (samples, n)
    ydes: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return self.x.shape[1]

    def __len__(self):
        return self.t.shape[0]

    def header(self) -> list[str]:
        n = self.order
        return (["t"] + [f"x{i + 1}" for i in range(n)] + ["u", "sigma", "rho"]
                + [f"e{i}" for i in range(n)] + ["ydes"])

    def table(self) -> np.ndarray:
        return np.column_stack([self.t, self.x, self.u, self.sigma, self.rho, self.e, self.ydes])

    def to_csv(self, path=None) -> str:
        """Write ``t,x1..xn,u,sigma,rho,e0..e{n-1},ydes`` at 17 significant digits."""
        buf = io.StringIO()
        np.savetxt(buf, self.table(), fmt="%.17g", delimiter=",", header=",".join(self.header()), comments="")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        n = sum(1 for h in header if h.startswith("x"))
        return cls(
            t=data[:, 0], x=data[:, 1:1 + n], u=data[:, 1 + n], sigma=data[:, 2 + n],
            rho=data[:, 3 + n], e=data[:, 4 + n:4 + 2 * n], ydes=data[:, 4 + 2 * n],
        )


class SimulationAbort(RuntimeError):
    """Simulation stopped early; ``trajectory`` holds the samples recorded so far."""

    def __init__(self, message: str, trajectory: Trajectory, state=None, time=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.state = state
        self.time = time


def rk4_step(fun: Callable, x: Sequence[float], t: float, dt: float, k1=None) -> list:
    """One classic Runge-Kutta step of ``x' = fun(t, x)`` on plain lists."""
    h2 = 0.5 * dt
    if k1 is None:
        k1 = fun(t, x)
    k2 = fun(t + h2, [xi + h2 * ki for xi, ki in zip(x, k1)])
    k3 = fun(t + h2, [xi + h2 * ki for xi, ki in zip(x, k2)])
    k4 = fun(t + dt, [xi + dt * ki for xi, ki in zip(x, k3)])
    w = dt / 6.0
    return [xi + w * (a + 2.0 * b + 2.0 * c + d) for xi, a, b, c, d in zip(x, k1, k2, k3, k4)]


def integrate(fun: Callable, x0: Sequence[float], horizon: float, dt: float) -> list:
    """Fixed-step RK4 from t=0 to ``horizon``; returns the final state."""
    x = list(x0)
    for k in range(int(math.floor(horizon / dt + 1e-9))):
        x = rk4_step(fun, x, k * dt, dt)
    return x


def simulate(
    plant: PlantModel,
    ref: ReferenceSignal,
    law,
    ic: InitialCondition,
    cfg: SimConfig = SimConfig(),
    envelope: Optional[Envelope] = None,
) -> Trajectory:
    """Integrate the closed loop and record samples every ``record_stride`` steps.

    ``law`` is any object with a ``surface`` and a ``control(sigma, t)`` method
    (:class:`~qsmc.controllers.QsmcLaw`, :class:`~qsmc.controllers.BaselineSmcLaw`).
    The recorded ``rho`` column uses ``envelope`` (default: the law's own) and
    is NaN when neither is available.
    """
    n = plant.order
    if ref.order != n or law.surface.order != n or len(ic.x0) != n:
        raise ValueError(
            f"order mismatch: plant {n}, reference {ref.order}, surface {law.surface.order}, x0 {len(ic.x0)}"
        )
    envelope = envelope if envelope is not None else getattr(law, "envelope", None)
    coeffs = law.surface.coeffs
    refs = ref.derivatives[:n]
    drift, gain, dist = plant.drift, plant.gain, plant.disturbance
    control = law.control
    dt = cfg.dt
    n_steps, stride = cfg.n_steps, cfg.record_stride
    counts = {"control_evals": 0, "clamp_activations": 0, "saturation_activations": 0}

    def sigma_at(x, t):
        return sum(c * (xi - r(t)) for c, xi, r in zip(coeffs, x, refs))

    def u_at(x, t):
        out = control(sigma_at(x, t), t)
        counts["control_evals"] += 1
        if out.clamped:
            counts["clamp_activations"] += 1
        if out.saturated:
            counts["saturation_activations"] += 1
        return out.u

    def rhs(x, t, u):
        return x[1:] + [drift(x) + gain(x) * u + dist(t)]

    m = cfg.n_samples
    t_rec = np.empty(m)
    x_rec = np.empty((m, n))
    u_rec = np.empty(m)
    s_rec = np.empty(m)
    rho_rec = np.full(m, np.nan)
    e_rec = np.empty((m, n))
    y_rec = np.empty(m)
    metadata = {
        "plant": plant.name,
        "x0": list(ic.x0),
        "surface": list(coeffs),
        "law": type(law).__name__,
        "config": asdict(cfg),
        "monitor_violations": 0,
    }
    recorded = 0

    def partial():
        meta = dict(metadata, **counts, samples=recorded)
        return Trajectory(t_rec[:recorded].copy(), x_rec[:recorded].copy(), u_rec[:recorded].copy(),
                          s_rec[:recorded].copy(), rho_rec[:recorded].copy(), e_rec[:recorded].copy(),
                          y_rec[:recorded].copy(), meta)

    held = [0.0]
    if cfg.control_mode == "continuous":
        def fun(ts, xs):
            return rhs(xs, ts, u_at(xs, ts))
    else:
        def fun(ts, xs):
            return rhs(xs, ts, held[0])

    x = list(ic.x0)
    for k in range(n_steps + 1):
        t = k * dt
        ydes = [r(t) for r in refs]
        sigma = sum(c * (xi - yi) for c, xi, yi in zip(coeffs, x, ydes))
        out = control(sigma, t)
        counts["control_evals"] += 1
        counts["clamp_activations"] += out.clamped
        counts["saturation_activations"] += out.saturated
        u = out.u
        if k % stride == 0:
            t_rec[recorded] = t
            x_rec[recorded] = x
            u_rec[recorded] = u
            s_rec[recorded] = sigma
            if envelope is not None:
                rho_rec[recorded] = rho(envelope, t)
            e_rec[recorded] = [xi - yi for xi, yi in zip(x, ydes)]
            y_rec[recorded] = ydes[0]
            recorded += 1
        if k == n_steps:
            break
        if cfg.monitor != "off":
            problem = check_gain(plant, x)
            if problem is not None:
                metadata["monitor_violations"] += 1
                metadata.setdefault("first_monitor_violation", f"t={t:.6g}: {problem}")
                if cfg.monitor == "abort":
                    raise SimulationAbort(f"assumption monitor at t={t:.6g}: {problem}", partial(), x, t)
        held[0] = u
        try:
            x = rk4_step(fun, x, t, dt, k1=rhs(x, t, u))
        except (ArithmeticError, ValueError) as exc:
            raise SimulationAbort(f"evaluation failed at t={t:.6g}: {exc}", partial(), x, t) from exc
        if not all(math.isfinite(v) for v in x):
            raise SimulationAbort(f"non-finite state at t={(k + 1) * dt:.6g}: {x}", partial(), x, (k + 1) * dt)

    return partial()


# ---------------------------------------------------------------- metrics

def measure_reaching_time(traj: Trajectory, epsilon: float) -> Optional[float]:
    """Earliest sample time after which every sample satisfies ``|sigma| <= epsilon``."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    outside = np.nonzero(np.abs(traj.sigma) > epsilon)[0]
    if outside.size == 0:
        return float(traj.t[0])
    last = outside[-1]
    if last == len(traj) - 1:
        return None
    return float(traj.t[last + 1])


def chattering_index(traj: Trajectory, window_start: float) -> tuple[float, int]:
    """Total variation of ``u`` and count of direction reversals over ``t >= window_start``."""
    if window_start >= traj.t[-1]:
        raise ValueError(f"window start {window_start} is not before the final time {traj.t[-1]}")
    u = traj.u[traj.t >= window_start]
    du = np.diff(u)
    tv = float(np.sum(np.abs(du)))
    moving = np.sign(du[du != 0])
    switches = int(np.count_nonzero(moving[1:] != moving[:-1]))
    return tv, switches


@dataclass
class Metrics:
    measured_reaching_time: Optional[float]
    band_violations: Optional[int]
    max_band_ratio: Optional[float]
    steady_state_error: float
    chattering_tv: float
    switch_count: int
    control_peak: float
    reaching_time_resolution: float
    chattering_window_start: float

    def as_dict(self) -> dict:
        return asdict(self)


def steady_state_window(traj: Trajectory) -> np.ndarray:
    t_end = traj.t[-1]
    return traj.t >= traj.t[0] + (1 - STEADY_STATE_FRACTION) * (t_end - traj.t[0])


def compute_metrics(traj: Trajectory, epsilon: float) -> Metrics:
    """Band, reaching, tracking and chattering figures for one run.

    Chattering is measured from the measured reaching time on (from t=0 when
    the band is never reached).
    """
    t_r = measure_reaching_time(traj, epsilon)
    if np.all(np.isnan(traj.rho)):
        violations, ratio = None, None
    else:
        ratio_series = np.abs(traj.sigma) / traj.rho
        violations = int(np.count_nonzero(np.abs(traj.sigma) >= traj.rho))
        ratio = float(np.max(ratio_series))
    start = t_r if t_r is not None and t_r < traj.t[-1] else float(traj.t[0])
    tv, switches = chattering_index(traj, start)
    resolution = traj.metadata.get("config", {})
    resolution = resolution.get("dt", float("nan")) * resolution.get("record_stride", 1)
    return Metrics(
        measured_reaching_time=t_r,
        band_violations=violations,
        max_band_ratio=ratio,
        steady_state_error=float(np.max(np.abs(traj.e[steady_state_window(traj), 0]))),
        chattering_tv=tv,
        switch_count=switches,
        control_peak=float(np.max(np.abs(traj.u))),
        reaching_time_resolution=resolution,
        chattering_window_start=start,
    )


# ---------------------------------------------------------------- guarantee check

@dataclass
class ClauseResult:
    name: str
    status: str  # pass | fail | skipped
    value: Optional[float]
    bound: Optional[float]
    detail: str = ""


@dataclass
class GuaranteeReport:
    clauses: list

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.clauses)

    def clause(self, name) -> ClauseResult:
        return next(c for c in self.clauses if c.name == name)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "clauses": [asdict(c) for c in self.clauses]}


def verify_guarantees(traj: Trajectory, env: Envelope, spec: SurfaceSpec, epsilon: Optional[float] = None) -> GuaranteeReport:
    """Check band containment, reaching time and (for binomial surfaces) the tracking bound.

    Clause names: ``band`` (|sigma| < rho at every sample), ``reaching``
    (measured reaching time within the analytic bound) and ``tracking``
    (max |e0| over the final quarter within epsilon / a^(n-1)).
    """
    eps = env.epsilon if epsilon is None else epsilon
    tube = rho(env, traj.t)
    ratio = np.abs(traj.sigma) / tube
    violations = int(np.count_nonzero(np.abs(traj.sigma) >= tube))
    clauses = [ClauseResult(
        "band", "pass" if violations == 0 else "fail", float(ratio.max()), 1.0,
        f"{violations} sample(s) with |sigma| >= rho",
    )]

    t_hat = measure_reaching_time(traj, eps)
    try:
        bound = reaching_time_bound(Envelope.unchecked(env.rho0, env.rho_inf, env.mu, eps))
    except ValueError as exc:
        clauses.append(ClauseResult("reaching", "fail", t_hat, None, str(exc)))
    else:
        ok = t_hat is not None and t_hat <= bound
        note = "never settled in the band" if t_hat is None else f"sample resolution {traj.t[1] - traj.t[0]:.3g} s"
        clauses.append(ClauseResult("reaching", "pass" if ok else "fail", t_hat, bound, note))

    sse = float(np.max(np.abs(traj.e[steady_state_window(traj), 0])))
    if spec.pole is None:
        clauses.append(ClauseResult("tracking", "skipped", sse, None, "surface has no pole; bound undefined"))
    else:
        tb = tracking_bound(spec, eps, 0)
        clauses.append(ClauseResult("tracking", "pass" if sse <= tb else "fail", sse, tb, "final 25% of horizon"))
    return GuaranteeReport(clauses)


def write_metrics(path, metrics: Metrics, report: Optional[GuaranteeReport] = None, metadata: Optional[dict] = None):
    doc = {"metrics": metrics.as_dict()}
    if report is not None:
        doc["guarantees"] = report.as_dict()
    if metadata:
        doc["metadata"] = metadata
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=_json_default)
        fh.write("\n")
    return doc


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
