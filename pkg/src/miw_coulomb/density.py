"""Empirical densities built from a world configuration.

Two constructions are provided:

* :class:`StepDensity` is constant on each cell ``(x_{n+1}, x_n]`` with height
  ``x_n / ((N + 1)(x_n^2 - x_{n+1}^2))``. Because the recursion fixes
  ``x_n^2 - x_{n+1}^2 = 1 / (x_n S_n)``, the height equals ``x_n^2 S_n / (N + 1)``.
* :class:`GeneralizedStepDensity` follows the b-weighted zero-bias recipe
  ``b(x) * sum_{i<=n} 1 / b(x_i)`` on the same cells, so it varies inside a
  cell. With ``b(x) = x^2`` and the ``1 / (N + 1)`` prefactor it meets the
  step density at every right endpoint ``x_n``.

The printed recipe sums ``1 / b(x_n)`` over an index ``i`` that never appears;
it is read here as ``sum_i 1 / b(x_i)``.

Both are zero beyond ``x_1``. :func:`zero_bias_transform` evaluates the
continuous transform by quadrature and is used as an independent check.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .exceptions import DegenerateConfigurationError, QuadratureError
from .model import HALF_LINE_MASS, INF, WorldConfiguration, target_density, target_mass


def _cells(cfg: WorldConfiguration) -> np.ndarray:
    cfg.require_ordered()
    return cfg.with_origin()


@dataclass(frozen=True)
class StepDensity:
    """Piecewise-constant density on the cells ``(x_{n+1}, x_n]``.

    Attributes:
        breakpoints: ``x_1 > ... > x_N > x_{N+1} = 0``.
        values: Height ``v_n`` on ``(x_{n+1}, x_n]``, length ``N``.
        half_line: If False the density is mirrored, ``p(-x) = p(x)``.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    half_line: bool = True

    @property
    def n_worlds(self) -> int:
        return int(self.values.size)

    def mirror(self) -> "StepDensity":
        return StepDensity(self.breakpoints, self.values, half_line=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x) if not self.half_line else x
        # ascending edges 0 = x_{N+1} < x_N < ... < x_1; cell k (ascending) is (e_k, e_{k+1}]
        edges = self.breakpoints[::-1]
        idx = np.searchsorted(edges, ax, side="left") - 1
        inside = (ax > 0.0) & (ax <= edges[-1])
        vals_asc = self.values[::-1]
        out = np.where(inside, vals_asc[np.clip(idx, 0, self.n_worlds - 1)], 0.0)
        return out if out.ndim else float(out)


def build_step_density(cfg: WorldConfiguration) -> StepDensity:
    """Stepped density with heights ``x_n / ((N+1)(x_n^2 - x_{n+1}^2))``.

    Raises:
        DegenerateConfigurationError: a zero-width or inverted cell.
    """
    x = _cells(cfg)
    n = cfg.n_worlds
    width2 = x[:-1] ** 2 - x[1:] ** 2
    if np.any(width2 <= 0.0):
        raise DegenerateConfigurationError("zero-width cell in configuration")
    values = x[:-1] / ((n + 1) * width2)
    values.setflags(write=False)
    x.setflags(write=False)
    return StepDensity(x, values)


@dataclass(frozen=True)
class GeneralizedStepDensity:
    """Density ``c * b(x) * sum_{i<=n} 1/b(x_i)`` on ``(x_{n+1}, x_n]``.

    ``coefficients[n-1]`` holds ``c * sum_{i<=n} 1/b(x_i)``; ``normalization``
    is ``c`` (``1/(N+1)`` unless overridden).
    """

    breakpoints: np.ndarray
    weight: Callable
    coefficients: np.ndarray
    normalization: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        edges = self.breakpoints[::-1]
        idx = np.searchsorted(edges, x, side="left") - 1
        inside = (x > 0.0) & (x <= edges[-1])
        coef = self.coefficients[::-1][np.clip(idx, 0, self.coefficients.size - 1)]
        b = np.asarray(self.weight(np.where(inside, x, 1.0)), dtype=float)
        out = np.where(inside, b * coef, 0.0)
        return out if out.ndim else float(out)


def build_generalized_density(
    cfg: WorldConfiguration,
    weight: Callable = lambda x: np.asarray(x, dtype=float) ** 2,
    normalization: float | None = None,
) -> GeneralizedStepDensity:
    """b-weighted empirical density on the cells of ``cfg``.

    Raises:
        ValueError: ``weight`` is not positive at some world position.
    """
    x = _cells(cfg)
    b = np.asarray(weight(cfg.positions), dtype=float) * np.ones(cfg.n_worlds)
    if np.any(~np.isfinite(b)) or np.any(b <= 0.0):
        raise ValueError("weight must be positive and finite at every world position")
    c = 1.0 / (cfg.n_worlds + 1) if normalization is None else float(normalization)
    coefficients = c * np.cumsum(1.0 / b)
    coefficients.setflags(write=False)
    x.setflags(write=False)
    return GeneralizedStepDensity(x, weight, coefficients, c)


def empirical_mass(d: StepDensity, include_boundary_term: bool = False) -> float:
    """``sum_{n=1}^N v_n (x_n - x_{n+1})``, optionally plus the ``n = 0`` limit.

    The ``n = 0`` cell ``(x_1, x_0 = inf)`` contributes ``x_0 / ((N+1)(x_0 + x_1))``,
    whose limit is ``1/(N+1)``.
    """
    x = d.breakpoints
    mass = math.fsum(d.values * (x[:-1] - x[1:]))
    if include_boundary_term:
        mass += 1.0 / (d.n_worlds + 1)
    return mass


def empirical_integral(d: StepDensity, include_boundary_term: bool = True) -> float:
    """Integral of the ``b(x) = x^2`` density, ``(1/(3(N+1))) sum [1 + x_{n+1}^2 / (x_n (x_n + x_{n+1}))]``.

    The ``n = 0`` summand tends to 1 as ``x_0 -> inf`` and is included by
    default; each summand is below 3/2, so the total stays below 1/2.
    """
    x = d.breakpoints
    n = d.n_worlds
    terms = 1.0 + x[1:] ** 2 / (x[:-1] * (x[:-1] + x[1:]))
    total = math.fsum(terms) + (1.0 if include_boundary_term else 0.0)
    return total / (3.0 * (n + 1))


class Metric(str, enum.Enum):
    L1 = "l1"
    SUP = "sup"
    MASS_DEFICIT = "mass-deficit"


_PEAK = 1.0  # the target density is increasing on [0, 1] and decreasing after


def _crossings(level: float, a: float, b: float) -> list[float]:
    """Points in ``(a, b)`` where the target density equals ``level``."""
    out = []
    pieces = [(a, b)] if (b <= _PEAK or a >= _PEAK) else [(a, _PEAK), (_PEAK, b)]
    for lo, hi in pieces:
        g_lo = target_density(lo) - level
        g_hi = target_density(hi) - level
        if g_lo * g_hi < 0.0:
            out.append(optimize.brentq(lambda t: target_density(t) - level, lo, hi,
                                       xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return out


def _l1(d: StepDensity) -> float:
    x = d.breakpoints
    total = [target_mass(x[0], INF)]
    for n in range(d.n_worlds):
        hi, lo, v = float(x[n]), float(x[n + 1]), float(d.values[n])
        cuts = [lo] + _crossings(v, lo, hi) + [hi]
        for a, b in zip(cuts, cuts[1:]):
            diff = v * (b - a) - target_mass(a, b)
            total.append(abs(diff))
    return math.fsum(total)


def _sup(d: StepDensity) -> float:
    x = d.breakpoints
    best = target_density(_PEAK) if x[0] < _PEAK else target_density(x[0])
    for n in range(d.n_worlds):
        hi, lo, v = float(x[n]), float(x[n + 1]), float(d.values[n])
        cands = [lo, hi] + ([_PEAK] if lo < _PEAK < hi else [])
        best = max(best, max(abs(v - target_density(c)) for c in cands))
    return float(best)


def _step_vs_step(d: StepDensity, other: StepDensity, metric: Metric) -> float:
    edges = np.union1d(d.breakpoints, other.breakpoints)
    mids = 0.5 * (edges[:-1] + edges[1:])
    diff = np.abs(d(mids) - other(mids))
    if metric is Metric.L1:
        return math.fsum(diff * np.diff(edges))
    if metric is Metric.SUP:
        return float(diff.max()) if diff.size else 0.0
    return abs(empirical_mass(d) - empirical_mass(other))


def density_distance(
    d: StepDensity, metric: Metric | str = Metric.L1, reference: StepDensity | None = None
) -> float:
    """Distance between a half-line step density and the exact density.

    ``l1`` integrates ``|P*_N - P|`` exactly (cells split where the curves
    cross) and counts the tail beyond ``x_1`` as error; ``sup`` is the largest
    gap over the closed cells and the tail; ``mass-deficit`` is
    ``|empirical_mass - 1/2|``. Passing another step density as ``reference``
    compares the two step functions instead.
    """
    try:
        metric = Metric(metric)
    except ValueError:
        raise ValueError(f"unknown metric {metric!r}") from None
    if reference is not None:
        return _step_vs_step(d, reference, metric)
    if metric is Metric.L1:
        return _l1(d)
    if metric is Metric.SUP:
        return _sup(d)
    return abs(empirical_mass(d) - HALF_LINE_MASS)


def _quad(f, a, b, epsabs):
    val, err = integrate.quad(f, a, b, epsabs=epsabs, epsrel=1e-12, limit=200)
    if not math.isfinite(val) or err > 10 * max(epsabs, 1e-12 * abs(val)):
        raise QuadratureError(f"quadrature on [{a}, {b}] did not converge (err={err:.2g})")
    return val


def zero_bias_transform(
    source: Callable[[float], float],
    weight: Callable[[float], float],
    grid,
    epsabs: float = 1e-10,
    cutoff: float | None = None,
) -> np.ndarray:
    """b-generalized zero-bias density of a symmetric ``source`` on ``grid``.

    For ``z >= 0`` the transform is ``b(z) / sigma^2 * int_z^inf source(w) / b(w) dw``
    with ``sigma^2 = E[W^2 / b(W)]``; negative ``z`` mirror through ``|z|``. The
    integrals run to ``cutoff`` (default: where ``source`` drops below 1e-16 of
    its peak on a coarse scan).

    Raises:
        QuadratureError: non-convergent integral or non-finite ``sigma^2``.
    """
    grid = np.asarray(grid, dtype=float)
    if cutoff is None:
        cutoff = _tail_cutoff(source)
    sigma2 = 2.0 * _quad(lambda w: w * w * source(w) / weight(w), 0.0, cutoff, epsabs)
    if not (math.isfinite(sigma2) and sigma2 > 0.0):
        raise QuadratureError(f"sigma^2 is not positive and finite: {sigma2}")

    def ratio(w):
        return source(w) / weight(w)

    out = np.empty_like(grid)
    for i, z in enumerate(np.abs(grid).ravel()):
        if z >= cutoff:
            out.flat[i] = 0.0
            continue
        b = float(weight(z))
        out.flat[i] = 0.0 if b == 0.0 else b * _quad(ratio, z, cutoff, epsabs) / sigma2
    return out


def _tail_cutoff(source) -> float:
    xs = np.linspace(0.0, 200.0, 4001)
    vals = np.array([source(x) for x in xs])
    peak = vals.max()
    above = np.nonzero(vals >= 1e-16 * peak)[0]
    return float(xs[min(above[-1] + 1, xs.size - 1)])
