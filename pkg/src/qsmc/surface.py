"""Sliding variables sigma = c^T e over the tracking-error vector.

Coefficients are stored in ascending order: ``coeffs[0]`` multiplies the
tracking error itself and the last entry (always 1) multiplies the highest
error derivative ``e^(n-1)``.  Read as a polynomial in ``s`` the same list is
``c1 + c2 s + ... + s^(n-1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

HURWITZ_TOL = 1e-9


def sign(x: float) -> int:
    """Three-branch sign with ``sign(0) == 0``."""
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def _binomial_coeffs(n: int, a: float) -> tuple[float, ...]:
    # (s + a)^(n-1) = sum_k C(n-1, k) a^(n-1-k) s^k, ascending in s
    m = n - 1
    return tuple(float(math.comb(m, k) * a ** (m - k)) for k in range(m + 1))


@dataclass(frozen=True)
class SurfaceSpec:
    """Coefficient vector of a linear sliding surface.

    ``pole`` is set only for surfaces built by :func:`binomial_surface`; the
    closed-form tracking bound needs it.
    """

    coeffs: tuple[float, ...]
    pole: Optional[float] = None

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if not coeffs:
            raise ValueError("surface needs at least one coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError(f"non-finite surface coefficient in {coeffs}")
        if coeffs[-1] != 1.0:
            raise ValueError(f"last surface coefficient must be exactly 1, got {coeffs[-1]}")
        if self.pole is not None:
            if not self.pole > 0:
                raise ValueError(f"pole must be positive, got {self.pole}")
            expected = _binomial_coeffs(len(coeffs), self.pole)
            if not np.allclose(coeffs, expected, rtol=1e-12, atol=0.0):
                raise ValueError(f"coefficients {coeffs} are not the expansion of (s+{self.pole})^{len(coeffs) - 1}")

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def is_hurwitz(self) -> bool:
        return is_hurwitz(self.coeffs)


def evaluate_sigma(e: Sequence[float], spec: SurfaceSpec) -> float:
    """Return ``sum_i c_i e^(i-1)`` for an error vector of length ``spec.order``."""
    e = np.asarray(e, dtype=float)
    if e.ndim != 1 or e.shape[0] != spec.order:
        raise ValueError(f"error state has shape {e.shape}, surface order is {spec.order}")
    if not np.all(np.isfinite(e)):
        raise ValueError(f"non-finite error state {e}")
    return float(np.dot(spec.coeffs, e))


def binomial_surface(n: int, a: float) -> SurfaceSpec:
    """Surface whose characteristic polynomial is ``(s + a)^(n-1)``.

    >>> binomial_surface(4, 2.0).coeffs
    (8.0, 12.0, 6.0, 1.0)
    """
    if int(n) != n or n < 2:
        raise ValueError(f"binomial surface needs integer order n >= 2, got {n}")
    if not (a > 0 and math.isfinite(a)):
        raise ValueError(f"pole a must be a positive real, got {a}")
    return SurfaceSpec(_binomial_coeffs(int(n), float(a)), pole=float(a))


def _check_poly(coeffs: Sequence[float]) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("need a non-empty coefficient list")
    if not np.all(np.isfinite(c)):
        raise ValueError(f"non-finite polynomial coefficient in {list(coeffs)}")
    if c[-1] != 1.0:
        raise ValueError(f"polynomial must be monic (last coefficient 1), got {c[-1]}")
    return c


def hurwitz_roots(coeffs: Sequence[float]) -> np.ndarray:
    """Roots of the ascending-order monic polynomial via companion eigenvalues."""
    c = _check_poly(coeffs)
    deg = c.size - 1
    if deg == 0:
        return np.empty(0, dtype=complex)
    companion = np.zeros((deg, deg))
    companion[1:, :-1] = np.eye(deg - 1)
    companion[:, -1] = -c[:-1]
    return np.linalg.eigvals(companion)


def routh_first_column(coeffs: Sequence[float]) -> list[float]:
    """First column of the Routh array for the ascending-order polynomial.

    Stops early (returning what was built) when a zero pivot appears, since
    the polynomial is then not strictly Hurwitz.
    """
    c = _check_poly(coeffs)
    desc = c[::-1]
    deg = desc.size - 1
    if deg == 0:
        return [float(desc[0])]
    width = deg // 2 + 1
    rows = [np.zeros(width), np.zeros(width)]
    rows[0][: len(desc[0::2])] = desc[0::2]
    rows[1][: len(desc[1::2])] = desc[1::2]
    column = [float(rows[0][0]), float(rows[1][0])]
    for _ in range(deg - 1):
        upper, lower = rows[-2], rows[-1]
        pivot = lower[0]
        if abs(pivot) <= HURWITZ_TOL:
            column[-1] = 0.0
            return column
        new = np.zeros(width)
        new[:-1] = (pivot * upper[1:] - upper[0] * lower[1:]) / pivot
        rows.append(new)
        column.append(float(new[0]))
    return column


def is_hurwitz(coeffs: Sequence[float], method: str = "eigen") -> bool:
    """True iff every root of ``c1 + c2 s + ... + s^(n-1)`` has real part < -1e-9.

    ``method`` selects companion-matrix eigenvalues (``"eigen"``) or the
    Routh-Hurwitz tabulation (``"routh"``).
    """
    if method == "eigen":
        roots = hurwitz_roots(coeffs)
        return bool(np.all(roots.real < -HURWITZ_TOL))
    if method == "routh":
        return all(v > HURWITZ_TOL for v in routh_first_column(coeffs))
    raise ValueError(f"unknown Hurwitz method {method!r}")


def tracking_bound(spec: SurfaceSpec, epsilon: float, i: int) -> float:
    """Residual bound ``(2a)^i * epsilon / a^(n-1)`` on ``|e^(i)|`` inside the band."""
    if spec.pole is None:
        raise ValueError("tracking bound requires a binomial surface (pole a is not set)")
    n = spec.order
    if not 0 <= i <= n - 1:
        raise ValueError(f"derivative index {i} outside 0..{n - 1}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    a = spec.pole
    return (2 * a) ** i * epsilon / a ** (n - 1)
