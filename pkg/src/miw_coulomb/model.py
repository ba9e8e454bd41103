"""Physical model for the 1D Coulomb problem in its first excited state.

Everything is expressed in dimensionless units with ``m = e = hbar = 1``, so
lengths are measured in Bohr-like units and the energy scale ``m e^4 / hbar^2``
is one. The exact position density of the first excited state is the weighted
Laplace density ``P(x) = 2 x^2 exp(-2|x|)``; its restriction to ``x >= 0``
carries mass 1/2, and all world configurations live on that half-line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DegenerateConfigurationError

INF = math.inf
"""Distinguished upper endpoint for :func:`target_mass` (exact limit, not a big float)."""

HALF_LINE_MASS = 0.5


@dataclass(frozen=True)
class DimensionlessUnits:
    """Unit convention ``m e^2 / hbar^2 = 1``. Not configurable."""

    mass: float = field(default=1.0, init=False)
    charge: float = field(default=1.0, init=False)
    hbar: float = field(default=1.0, init=False)

    @property
    def length_scale(self) -> float:
        return self.hbar**2 / (self.mass * self.charge**2)

    @property
    def energy_scale(self) -> float:
        return self.mass * self.charge**4 / self.hbar**2


UNITS = DimensionlessUnits()

NORMALIZATION = math.sqrt(2.0)
"""Amplitude ``B_1`` of the first excited wavefunction."""


def wavefunction(x):
    """First excited state ``sqrt(2) * x * exp(-|x|)``."""
    x = np.asarray(x, dtype=float)
    out = NORMALIZATION * x * np.exp(-np.abs(x))
    return out if out.ndim else float(out)


def target_density(x):
    """Exact density ``2 x^2 exp(-2|x|)``; accepts scalars or arrays."""
    x = np.asarray(x, dtype=float)
    out = 2.0 * x * x * np.exp(-2.0 * np.abs(x))
    return out if out.ndim else float(out)


def weight(x):
    """Weight ``b(x) = 2 x^2`` such that ``P(x) = b(x) exp(-2|x|)``."""
    x = np.asarray(x, dtype=float)
    out = 2.0 * x * x
    return out if out.ndim else float(out)


def _upper_tail(a: float) -> float:
    # int_a^inf 2x^2 e^{-2x} dx = e^{-2a} (a^2 + a + 1/2)
    if a == INF:
        return 0.0
    return math.exp(-2.0 * a) * (a * a + a + 0.5)


def _lower_mass(a: float) -> float:
    # int_0^a 2x^2 e^{-2x} dx = 1/2 - e^{-2a}(a^2 + a + 1/2); series for small a
    if a < 1e-3:
        # 2a^3/3 - a^4 + 4a^5/5 - 4a^6/9, next term ~ a^7
        return a**3 * (2.0 / 3.0 - a * (1.0 - a * (0.8 - a * (4.0 / 9.0))))
    return HALF_LINE_MASS - _upper_tail(a)


def target_mass(lo: float, hi: float = INF) -> float:
    """Probability mass of the exact density on ``[lo, hi]`` with ``0 <= lo <= hi``.

    Uses the closed-form antiderivative ``-exp(-2x) (x^2 + x + 1/2)``; pass
    :data:`INF` (the default) for the upper tail.
    """
    lo = float(lo)
    hi = float(hi)
    if math.isnan(lo) or math.isnan(hi):
        raise ValueError("target_mass endpoints must not be NaN")
    if lo < 0.0:
        raise ValueError(f"lower endpoint must be >= 0, got {lo}")
    if lo > hi:
        raise ValueError(f"lower endpoint {lo} exceeds upper endpoint {hi}")
    if lo == hi:
        return 0.0
    if lo == INF:
        return 0.0
    if hi == INF:
        return _upper_tail(lo)
    if hi <= 1.0:
        return _lower_mass(hi) - _lower_mass(lo)
    return _upper_tail(lo) - _upper_tail(hi)


@dataclass(frozen=True)
class SolveMeta:
    """Diagnostics attached to a solved configuration."""

    iterations: int
    bracket: tuple[float, float]
    precision_mode: str
    x1_interval: tuple[float, float]
    sign_changes: int = 1
    resolution_limited: bool = False
    residual_floor: float = 0.0


@dataclass(frozen=True)
class WorldConfiguration:
    """Half-line world positions ``x_1 > x_2 > ... > x_N > 0``.

    The pinned world ``x_{N+1} = 0`` and the sentinel ``x_0 = inf`` are implicit.
    Ordering is *not* enforced here so that externally supplied or perturbed
    configurations can be inspected by ``solver.validate_configuration``;
    consumers that need a proper partition call :meth:`require_ordered`.
    """

    positions: np.ndarray
    x1_residual: float = math.nan
    solve_meta: Optional[SolveMeta] = None

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1)
        if pos.size == 0:
            raise ValueError("a configuration needs at least one world")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if math.isnan(self.x1_residual):
            object.__setattr__(self, "x1_residual", boundary_residual_of(pos))

    @property
    def n_worlds(self) -> int:
        return int(self.positions.size)

    @property
    def x1(self) -> float:
        return float(self.positions[0])

    @property
    def xN(self) -> float:
        return float(self.positions[-1])

    def with_origin(self) -> np.ndarray:
        """Positions followed by the pinned world at the origin."""
        return np.append(self.positions, 0.0)

    def mirrored(self) -> np.ndarray:
        """All ``2N + 1`` worlds on the full line, ascending."""
        return np.concatenate([-self.positions, [0.0], self.positions[::-1]])

    def is_ordered(self) -> bool:
        pos = self.positions
        return bool(pos[-1] > 0.0 and np.all(pos[:-1] > pos[1:]))

    def require_ordered(self) -> None:
        if not self.is_ordered():
            raise DegenerateConfigurationError(
                "positions must be strictly decreasing and positive"
            )


def boundary_residual_of(positions) -> float:
    """``x_N^3 * sum(1/x_i^2) - 1`` evaluated directly from stored positions."""
    pos = np.asarray(positions, dtype=float)
    xn = float(pos[-1])
    if xn == 0.0:
        return -1.0
    return xn**3 * math.fsum(1.0 / (x * x) for x in pos) - 1.0
