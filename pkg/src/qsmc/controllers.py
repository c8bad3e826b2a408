"""Quasi-sliding-mode tangent law and the relay SMC baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .envelope import Envelope, rho
from .surface import SurfaceSpec, sign

DEFAULT_CLAMP_DELTA = 1e-9
DEFAULT_U_MAX = 1e6


class ControlOutput(NamedTuple):
    u: float
    clamped: bool = False
    saturated: bool = False


def _check_gain_sign(gain_sign):
    if gain_sign not in (-1, 1):
        raise ValueError(f"gain_sign must be -1 or +1, got {gain_sign}")


@dataclass(frozen=True)
class QsmcLaw:
    """``u = -sign(g) * tan(pi * sigma / (2 rho(t)))`` with a numerical guard.

    The ratio ``sigma / rho`` is clamped to ``1 - clamp_delta`` in magnitude so
    the law stays finite when an integration step overshoots the tube edge,
    and the result is saturated at ``u_max``.
    """

    envelope: Envelope
    surface: SurfaceSpec
    gain_sign: int = 1
    clamp_delta: float = DEFAULT_CLAMP_DELTA
    u_max: float = DEFAULT_U_MAX

    def __post_init__(self):
        _check_gain_sign(self.gain_sign)
        if not 0 < self.clamp_delta < 1:
            raise ValueError(f"clamp_delta must lie in (0, 1), got {self.clamp_delta}")
        if not self.u_max > 0:
            raise ValueError(f"u_max must be positive, got {self.u_max}")

    def control(self, sigma: float, t: float) -> ControlOutput:
        ratio = sigma / rho(self.envelope, t)
        limit = 1.0 - self.clamp_delta
        clamped = False
        if ratio > limit:
            ratio, clamped = limit, True
        elif ratio < -limit:
            ratio, clamped = -limit, True
        u = -self.gain_sign * math.tan(0.5 * math.pi * ratio)
        saturated = False
        if u > self.u_max:
            u, saturated = self.u_max, True
        elif u < -self.u_max:
            u, saturated = -self.u_max, True
        return ControlOutput(u, clamped, saturated)


@dataclass(frozen=True)
class BaselineSmcLaw:
    """Classical relay law ``u = -sign(g) * K * sign(sigma)``."""

    surface: SurfaceSpec
    gain: float = 5.0
    gain_sign: int = 1

    def __post_init__(self):
        _check_gain_sign(self.gain_sign)
        if not self.gain > 0:
            raise ValueError(f"relay gain K must be positive, got {self.gain}")

    def control(self, sigma: float, t: float) -> ControlOutput:
        return ControlOutput(-self.gain_sign * self.gain * sign(sigma))


def qsmc_control(law: QsmcLaw, sigma: float, t: float) -> float:
    if not math.isfinite(sigma):
        raise ValueError(f"non-finite sliding variable {sigma}")
    return law.control(sigma, t).u


def baseline_control(law: BaselineSmcLaw, sigma: float) -> float:
    if not math.isfinite(sigma):
        raise ValueError(f"non-finite sliding variable {sigma}")
    return law.control(sigma, 0.0).u
