"""Time-varying reaching tube rho(t) = rho0 * exp(-mu t) + rho_inf."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .surface import SurfaceSpec

ArrayLike = Union[float, np.ndarray]

DEFAULT_SAFETY = 1.1


class DesignConditionError(ValueError):
    """Raised when an envelope violates its design conditions."""


@dataclass(frozen=True)
class Envelope:
    """Reaching tube plus the quasi-sliding bandwidth ``epsilon``.

    Construction enforces positivity and ``rho_inf < epsilon < rho0``.  Use
    :meth:`unchecked` for exploratory designs that knowingly break the
    second condition.
    """

    rho0: float
    rho_inf: float
    mu: float
    epsilon: float
    checked: bool = True

    def __post_init__(self):
        for name in ("rho0", "rho_inf", "mu", "epsilon"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DesignConditionError(f"{name} must be a positive real, got {value}")
        if self.checked and not validate_c2(self):
            raise DesignConditionError(
                f"condition C2 violated: need rho_inf < epsilon < rho0, got "
                f"rho_inf={self.rho_inf}, epsilon={self.epsilon}, rho0={self.rho0}"
            )

    @classmethod
    def unchecked(cls, rho0, rho_inf, mu, epsilon) -> "Envelope":
        return cls(rho0, rho_inf, mu, epsilon, checked=False)

    def __call__(self, t: ArrayLike) -> ArrayLike:
        return rho(self, t)


def _check_time(t):
    if np.any(np.asarray(t) < 0):
        raise ValueError(f"time must be non-negative, got {t}")


def rho(env: Envelope, t: ArrayLike) -> ArrayLike:
    if isinstance(t, (float, int)):
        if t < 0:
            raise ValueError(f"time must be non-negative, got {t}")
        return env.rho0 * math.exp(-env.mu * t) + env.rho_inf
    _check_time(t)
    if np.ndim(t) == 0:
        return env.rho0 * math.exp(-env.mu * float(t)) + env.rho_inf
    return env.rho0 * np.exp(-env.mu * np.asarray(t, dtype=float)) + env.rho_inf


def rho_dot(env: Envelope, t: ArrayLike) -> ArrayLike:
    """Time derivative of the tube; lies in ``[-mu*rho0, 0]``."""
    _check_time(t)
    if np.ndim(t) == 0:
        return -env.mu * env.rho0 * math.exp(-env.mu * float(t))
    return -env.mu * env.rho0 * np.exp(-env.mu * np.asarray(t, dtype=float))


def validate_c1(env: Envelope, sigma0: float) -> bool:
    """Initial sliding variable strictly inside the tube amplitude."""
    return env.rho0 > abs(sigma0)


def validate_c2(env: Envelope) -> bool:
    return env.rho_inf < env.epsilon < env.rho0


def reaching_time_bound(env: Envelope) -> float:
    """Fixed time after which the tube is inside the epsilon band."""
    gap = env.epsilon - env.rho_inf
    if gap <= 0:
        raise DesignConditionError(
            f"reaching-time bound undefined: epsilon={env.epsilon} must exceed rho_inf={env.rho_inf}"
        )
    return math.log(env.rho0 / gap) / env.mu


def suggest_rho0(spec: SurfaceSpec, ebounds: Sequence[float], safety: float = DEFAULT_SAFETY) -> float:
    """Tube amplitude large enough for any initial error within ``ebounds``.

    Uses the triangle inequality ``|sigma(0)| <= sum |c_i| ebar_i`` and pads it
    by ``safety``.  All-zero bounds give 0 (any positive rho0 works).
    """
    ebounds = [float(b) for b in ebounds]
    if len(ebounds) != spec.order:
        raise ValueError(f"need {spec.order} error bounds, got {len(ebounds)}")
    if any(not math.isfinite(b) or b < 0 for b in ebounds):
        raise ValueError(f"error bounds must be finite and non-negative, got {ebounds}")
    if safety < 1:
        raise ValueError(f"safety factor must be >= 1, got {safety}")
    return safety * sum(abs(c) * b for c, b in zip(spec.coeffs, ebounds))
