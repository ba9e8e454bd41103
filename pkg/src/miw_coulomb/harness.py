"""Sweeps over the number of worlds and convergence diagnostics."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .density import build_step_density, empirical_integral, empirical_mass
from .energy import average_hamiltonian
from .exceptions import MIWError
from .model import HALF_LINE_MASS, WorldConfiguration, boundary_residual_of, target_mass
from .solver import SolverConfig, solve_configuration


@dataclass(frozen=True)
class ConvergenceRecord:
    n_worlds: int
    x1: float
    xN: float
    mass_no_boundary: float
    mass_with_boundary: float
    integral: float
    h_n: float
    u_n: float
    v_n: float
    condition2_residual: float
    boundary_residual: float
    wall_time: float
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def mass_deficit(self) -> float:
        return self.mass_no_boundary - HALF_LINE_MASS

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def failed(cls, n_worlds: int, error: str, wall_time: float = 0.0) -> "ConvergenceRecord":
        nan = math.nan
        return cls(n_worlds, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, wall_time, error)

    def same_numbers(self, other: "ConvergenceRecord") -> bool:
        """Field-wise identity ignoring ``wall_time``."""
        for f in fields(self):
            if f.name == "wall_time":
                continue
            a, b = getattr(self, f.name), getattr(other, f.name)
            if a != b and not (isinstance(a, float) and math.isnan(a) and math.isnan(b)):
                return False
        return True


def record_for(cfg: WorldConfiguration, wall_time: float = 0.0) -> ConvergenceRecord:
    d = build_step_density(cfg)
    energy = average_hamiltonian(cfg)
    n = cfg.n_worlds
    return ConvergenceRecord(
        n_worlds=n,
        x1=cfg.x1,
        xN=cfg.xN,
        mass_no_boundary=empirical_mass(d),
        mass_with_boundary=empirical_mass(d, include_boundary_term=True),
        integral=empirical_integral(d),
        h_n=energy.h_n,
        u_n=energy.u_n,
        v_n=energy.v_n,
        condition2_residual=abs(math.fsum(1.0 / cfg.positions) - n) / n,
        boundary_residual=abs(boundary_residual_of(cfg.positions)),
        wall_time=wall_time,
    )


def _solve_one(n: int, config: SolverConfig) -> ConvergenceRecord:
    t0 = time.perf_counter()
    try:
        cfg = solve_configuration(n, config)
    except MIWError as exc:
        return ConvergenceRecord.failed(n, f"{type(exc).__name__}: {exc}",
                                        time.perf_counter() - t0)
    return record_for(cfg, time.perf_counter() - t0)


def sweep(
    n_values: Sequence[int], config: SolverConfig | None = None, jobs: int = 1
) -> list[ConvergenceRecord]:
    """Solve every ``N`` and summarise it; output is sorted by ``N``.

    Per-``N`` solver failures become records with ``error`` set instead of
    aborting the sweep. ``jobs > 1`` solves in worker processes.
    """
    n_values = sorted(set(int(n) for n in n_values))
    if not n_values:
        raise ValueError("sweep needs at least one N")
    if n_values[0] < 1:
        raise ValueError(f"every N must be >= 1, got {n_values[0]}")
    config = config or SolverConfig()
    if jobs <= 1 or len(n_values) == 1:
        return [_solve_one(n, config) for n in n_values]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        records = list(pool.map(_solve_one, n_values, [config] * len(n_values)))
    return sorted(records, key=lambda r: r.n_worlds)


@dataclass(frozen=True)
class ScalingFit:
    """Fit of ``x_N ~ C N^(-1/a)`` on log-log axes."""

    exponent_a: float
    slope: float
    intercept: float
    fit_range: tuple[int, ...]
    residual: float

    @property
    def in_window(self) -> bool:
        return 2.0 < self.exponent_a < 3.0


def fit_xn_scaling(records) -> ScalingFit:
    """Least-squares fit of ``log x_N`` against ``log N``.

    ``N = 1`` (where both bounds are attained) and failed records are dropped.

    Raises:
        ValueError: fewer than five distinct usable ``N``.
    """
    pts = {}
    for r in records:
        if r.n_worlds > 1 and getattr(r, "error", None) is None and r.xN > 0:
            pts[r.n_worlds] = r.xN
    if len(pts) < 5:
        raise ValueError(f"need at least 5 distinct N > 1 to fit, got {len(pts)}")
    ns = np.array(sorted(pts), dtype=float)
    logn = np.log(ns)
    logx = np.log([pts[n] for n in sorted(pts)])
    slope, intercept = np.polyfit(logn, logx, 1)
    if slope >= 0.0:
        raise ValueError("x_N does not decrease with N; cannot fit an exponent")
    resid = logx - (slope * logn + intercept)
    return ScalingFit(
        exponent_a=float(-1.0 / slope),
        slope=float(slope),
        intercept=float(intercept),
        fit_range=tuple(int(n) for n in ns),
        residual=float(np.sqrt(np.mean(resid**2))),
    )


@dataclass(frozen=True)
class SandwichReport:
    lower_ok: bool
    upper_ok: bool
    lower_violations: tuple[int, ...]
    upper_violations: tuple[int, ...]
    monotone: bool
    monotone_violations: tuple[int, ...]

    @property
    def passed(self) -> bool:
        """Sandwich only; the monotone deficit is informational."""
        return self.lower_ok and self.upper_ok


def check_mass_sandwich(records) -> SandwichReport:
    """Mass with the ``n = 0`` term is at least 1/2 and the weighted integral at most 1/2.

    Also reports every ``N`` at which ``|mass - 1/2|`` grew compared with the
    previous ``N``; such violations do not fail the report.
    """
    recs = sorted((r for r in records if r.ok), key=lambda r: r.n_worlds)
    eps = 4 * np.finfo(float).eps
    lower = tuple(r.n_worlds for r in recs if r.mass_with_boundary < HALF_LINE_MASS - eps)
    upper = tuple(r.n_worlds for r in recs if r.integral > HALF_LINE_MASS + eps)
    growing = tuple(
        b.n_worlds for a, b in zip(recs, recs[1:]) if abs(b.mass_deficit) > abs(a.mass_deficit)
    )
    return SandwichReport(not lower, not upper, lower, upper, not growing, growing)


@dataclass(frozen=True)
class OdeLimitReport:
    """Discrete check of ``P' = 2 (1/x - 1) P`` at interior worlds.

    ``discrepancy[k]`` is the difference quotient minus ``2(1/x_n - 1) P*_N(x_n)``;
    ``correction[k]`` is ``(x_n - 1) / ((N+1) x_n (x_n + x_{n+1}))`` which the
    discrepancy equals identically at a solution. ``envelope`` is
    ``1 / ((N+1) x_N^2)``.
    """

    n_worlds: int
    indices: np.ndarray
    discrepancy: np.ndarray
    correction: np.ndarray
    max_discrepancy: float
    identity_error: float
    envelope: float
    within_envelope: bool
    predicted_exponent: Optional[float] = None


def ode_limit_check(
    cfg: WorldConfiguration,
    tol: float = 1e-9,
    values=None,
    edge_fraction: float = 0.1,
    min_worlds: int = 20,
    exponent_a: float | None = None,
) -> OdeLimitReport:
    """Compare the difference quotient of the step heights with the limiting ODE.

    Indices within ``edge_fraction * N`` of either end are skipped. ``values``
    overrides the heights at ``x_1..x_N`` (e.g. the exact density on a
    quantile configuration, giving a pure discretisation baseline).
    ``tol`` is the relative slack allowed in the envelope comparison.

    Raises:
        ValueError: fewer than ``min_worlds`` worlds.
    """
    n = cfg.n_worlds
    if n < min_worlds:
        raise ValueError(f"ODE limit check needs N >= {min_worlds}, got {n}")
    x = cfg.with_origin()
    if values is None:
        p = build_step_density(cfg).values
    else:
        p = np.asarray(values, dtype=float)
    edge = max(1, int(edge_fraction * n))
    idx = np.arange(edge, n - 1 - edge)  # 0-based n-1; needs x_{n+1} to be a world
    xn, xn1 = x[idx], x[idx + 1]
    quotient = (p[idx] - p[idx + 1]) / (xn - xn1)
    disc = quotient - 2.0 * (1.0 / xn - 1.0) * p[idx]
    corr = (xn - 1.0) / ((n + 1) * xn * (xn + xn1))
    envelope = 1.0 / ((n + 1) * cfg.xN**2)
    max_disc = float(np.max(np.abs(disc)))
    ident = float(np.max(np.abs(disc - corr)))
    return OdeLimitReport(
        n_worlds=n,
        indices=idx + 1,
        discrepancy=disc,
        correction=corr,
        max_discrepancy=max_disc,
        identity_error=ident,
        envelope=envelope,
        within_envelope=max_disc <= envelope * (1.0 + tol),
        predicted_exponent=None if exponent_a is None else 2.0 / exponent_a - 1.0,
    )


def quantile_configuration(n_worlds: int) -> WorldConfiguration:
    """Worlds at the ``(n - 1/2)/N`` upper-tail mass quantiles of the half-line density.

    A baseline built only from the exact density, never from the recursion.
    """
    if n_worlds < 1:
        raise ValueError("n_worlds must be >= 1")
    pos = []
    for k in range(1, n_worlds + 1):
        tail = HALF_LINE_MASS * (k - 0.5) / n_worlds
        hi = 1.0
        while target_mass(hi) > tail:
            hi *= 2.0
        pos.append(optimize.bisect(lambda t: target_mass(t) - tail, 0.0, hi, xtol=1e-15))
    return WorldConfiguration(np.array(pos))
