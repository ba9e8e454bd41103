"""Shooting solver for the world configuration.

Starting from a trial outermost position ``x_1`` the positions are generated
inward by

    x_{n+1}^2 = x_n^2 - 1 / (x_n * S_n),      S_n = sum_{i<=n} 1 / x_i^2,

and ``x_1`` is tuned until the pinned world lands exactly on the origin, i.e.
``F(x_1) = x_N^3 S_N - 1 = 0``. Trial values that are too small make the
squared positions go negative before ``N`` worlds are produced; that region is
mapped to the negative side of ``F`` so the search stays a pure bracketing
problem.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _doubledouble as dd
from .exceptions import BracketError, ConvergenceError
from .model import SolveMeta, WorldConfiguration, boundary_residual_of

log = logging.getLogger(__name__)

COLLAPSED = -math.inf
"""Residual marker for a recursion that died before producing ``N`` worlds."""


class PrecisionMode(str, enum.Enum):
    STANDARD = "standard"
    EXTENDED = "extended"


@dataclass(frozen=True)
class SolverConfig:
    """Root-search settings.

    Attributes:
        tolerance: Bound on ``|F(x_1)|``; ``F`` is already relative.
        max_iterations: Cap on root-finder iterations (bracketing excluded).
        precision_mode: ``standard`` floats or ``extended`` double-double sums.
        bracket_hint: Optional ``(lo, hi)`` starting bracket for ``x_1``.
    """

    tolerance: float = 1e-12
    max_iterations: int = 200
    precision_mode: PrecisionMode = PrecisionMode.STANDARD
    bracket_hint: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        object.__setattr__(self, "precision_mode", PrecisionMode(self.precision_mode))
        if self.bracket_hint is not None:
            lo, hi = self.bracket_hint
            if not (0 < lo < hi and math.isfinite(hi)):
                raise ValueError(f"invalid bracket hint {self.bracket_hint}")


@dataclass(frozen=True)
class RecursionOutcome:
    """Result of one forward sweep.

    ``collapsed_at`` is ``None`` for a complete sweep, otherwise the step ``k``
    at which ``x_{k+1}^2 <= 0`` appeared (so ``k`` positions were produced).
    """

    positions: tuple[float, ...]
    partial_sums: tuple[float, ...]
    collapsed_at: Optional[int] = None
    residual: float = field(default=COLLAPSED, repr=False)

    @property
    def complete(self) -> bool:
        return self.collapsed_at is None


def _check_args(x1, n_worlds):
    if isinstance(n_worlds, bool) or int(n_worlds) != n_worlds or n_worlds < 1:
        raise ValueError(f"n_worlds must be a positive integer, got {n_worlds!r}")
    x1 = float(x1)
    if not (math.isfinite(x1) and x1 > 0.0):
        raise ValueError(f"x1 must be positive and finite, got {x1!r}")
    return x1, int(n_worlds)


def _recurse_standard(x1: float, n: int) -> RecursionOutcome:
    sq = x1 * x1
    x = x1
    s = 1.0 / sq
    positions = [x]
    sums = [s]
    for k in range(1, n):
        sq = sq - 1.0 / (x * s)
        if not sq > 0.0:
            return RecursionOutcome(tuple(positions), tuple(sums), collapsed_at=k)
        x = math.sqrt(sq)
        s += 1.0 / sq
        positions.append(x)
        sums.append(s)
    residual = x * sq * s - 1.0
    return RecursionOutcome(tuple(positions), tuple(sums), residual=residual)


def _recurse_extended(x1: float, n: int) -> RecursionOutcome:
    one = (1.0, 0.0)
    sq = dd.two_prod(x1, x1)
    x = (x1, 0.0)
    s = dd.div(one, sq)
    positions = [x1]
    sums = [dd.to_float(s)]
    for k in range(1, n):
        sq = dd.sub(sq, dd.div(one, dd.mul(x, s)))
        if not sq[0] > 0.0:
            return RecursionOutcome(tuple(positions), tuple(sums), collapsed_at=k)
        x = dd.sqrt(sq)
        s = dd.add(s, dd.div(one, sq))
        positions.append(dd.to_float(x))
        sums.append(dd.to_float(s))
    residual = dd.to_float(dd.sub(dd.mul(dd.mul(x, sq), s), one))
    return RecursionOutcome(tuple(positions), tuple(sums), residual=residual)


def forward_recursion(
    x1: float, n_worlds: int, precision_mode: PrecisionMode = PrecisionMode.STANDARD
) -> RecursionOutcome:
    """Generate ``x_1 > x_2 > ... > x_N`` from a trial ``x_1``.

    The recursion is applied ``N - 1`` times; the pinned world at the origin is
    not produced here (see :func:`boundary_residual`).

    Raises:
        ValueError: ``x1`` not positive and finite, or ``n_worlds < 1``.
    """
    x1, n = _check_args(x1, n_worlds)
    if PrecisionMode(precision_mode) is PrecisionMode.EXTENDED:
        return _recurse_extended(x1, n)
    return _recurse_standard(x1, n)


def boundary_residual(
    x1: float, n_worlds: int, precision_mode: PrecisionMode = PrecisionMode.STANDARD
) -> float:
    """``F(x_1) = x_N^3 S_N - 1``, or :data:`COLLAPSED` if the sweep died early."""
    return forward_recursion(x1, n_worlds, precision_mode).residual


def _negative(f: float) -> bool:
    return f < 0.0


def _initial_bracket(n: int, config: SolverConfig, resid):
    """Return ``(lo, f_lo, hi, f_hi, sign_changes, evaluations)`` with ``f_lo < 0 < f_hi``.

    A root hit exactly during bracketing is reported as ``lo == hi``.
    """
    if config.bracket_hint is not None:
        lo, hi = config.bracket_hint
    else:
        # x_1 > x_N and x_N <= N^(-1/3); x_1 grows roughly like log N
        lo, hi = n ** (-1.0 / 3.0), 1.0 + math.log(n)
    evals = 0
    f_lo = resid(lo)
    evals += 1
    for _ in range(64):
        if f_lo <= 0.0:
            break
        lo *= 0.5
        f_lo = resid(lo)
        evals += 1
    else:
        raise BracketError(f"no negative residual found below x1={lo:g} for N={n}")
    if f_lo == 0.0:
        return lo, f_lo, lo, f_lo, 1, evals
    f_hi = resid(hi)
    evals += 1
    for _ in range(64):
        if f_hi >= 0.0:
            break
        lo, f_lo = hi, f_hi
        hi *= 2.0
        f_hi = resid(hi)
        evals += 1
    else:
        raise BracketError(f"no positive residual found up to x1={hi:g} for N={n}")
    if f_hi == 0.0:
        return hi, f_hi, hi, f_hi, 1, evals

    # coarse scan: tightens the bracket and detects non-unique roots
    grid = np.linspace(lo, hi, 17)
    vals = [f_lo] + [resid(float(x)) for x in grid[1:-1]] + [f_hi]
    evals += 15
    signs = [_negative(v) for v in vals]
    changes = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    if changes > 1:
        log.warning("boundary residual changes sign %d times on [%g, %g] for N=%d",
                    changes, lo, hi, n)
    for i in range(16):
        if signs[i] and not signs[i + 1]:
            lo, f_lo, hi, f_hi = float(grid[i]), vals[i], float(grid[i + 1]), vals[i + 1]
            break
    return lo, f_lo, hi, f_hi, changes, evals


def _brent(resid, a, fa, b, fb, tol, max_iterations):
    """Brent's method on ``[a, b]`` with ``fa < 0 < fb``; collapsed values force bisection.

    Returns ``(root, f_root, iterations, (lo, hi), (f_lo, f_hi), converged)``
    where ``(lo, hi)`` is the final sign-change bracket.
    """
    # Maintain: b = best estimate, a = previous iterate, c = counterpoint with opposite sign.
    c, fc = a, fa
    d = e = b - a
    for it in range(1, max_iterations + 1):
        if (fb > 0) == (fc > 0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        lo, hi = (b, c) if b < c else (c, b)
        flo, fhi = (fb, fc) if b < c else (fc, fb)
        if abs(fb) <= tol:
            return b, fb, it - 1, (lo, hi), (flo, fhi), True
        if math.nextafter(lo, math.inf) >= hi:
            # bracket exhausted at double resolution
            return b, fb, it - 1, (lo, hi), (flo, fhi), False
        m = 0.5 * (c - b)
        xtol = 2.0 * 2.220446049250313e-16 * abs(b)
        finite = math.isfinite(fa) and math.isfinite(fb) and math.isfinite(fc)
        if finite and abs(e) >= xtol and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q0 = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q0 * (q0 - r) - (b - a) * (r - 1.0))
                q = (q0 - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * m * q - abs(xtol * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = m
        else:
            d = e = m
        a, fa = b, fb
        if abs(d) > xtol:
            b = b + d
        else:
            b = b + math.copysign(xtol, m)
        # keep strictly inside the bracket
        if not (lo < b < hi):
            b = 0.5 * (lo + hi)
        fb = resid(b)
    lo, hi = (b, c) if b < c else (c, b)
    flo, fhi = (fb, fc) if b < c else (fc, fb)
    return b, fb, max_iterations, (lo, hi), (flo, fhi), abs(fb) <= tol


def solve_configuration(n_worlds: int, config: SolverConfig | None = None) -> WorldConfiguration:
    """Find the configuration of ``N`` worlds whose recursion ends on the origin.

    The root is accepted when ``|F(x_1)| <= config.tolerance``. For large ``N``
    the residual jump between two adjacent doubles ``x_1`` can exceed the
    tolerance; the search then stops on the best representable ``x_1`` and
    records ``resolution_limited=True`` together with that jump
    (``residual_floor``) in ``solve_meta``. It is accepted only if the achieved
    residual does not exceed the jump.

    Raises:
        BracketError: no sign change found within the expansion limits.
        ConvergenceError: iteration cap hit, or the residual at the
            resolution limit is worse than the local jump.
    """
    config = config or SolverConfig()
    _, n = _check_args(1.0, n_worlds)
    mode = config.precision_mode

    def resid(x):
        return boundary_residual(x, n, mode)

    lo, f_lo, hi, f_hi, changes, _ = _initial_bracket(n, config, resid)
    bracket = (lo, hi)
    if lo == hi:
        root, f_root, iterations, final, converged = lo, f_lo, 0, (lo, hi), True
        floor, limited = 0.0, False
    else:
        root, f_root, iterations, final, fvals, converged = _brent(
            resid, lo, f_lo, hi, f_hi, config.tolerance, config.max_iterations
        )
        floor, limited = 0.0, False
        if not converged:
            exhausted = math.nextafter(final[0], math.inf) >= final[1]
            if not exhausted:
                raise ConvergenceError(
                    f"N={n}: {iterations} iterations without |F| <= {config.tolerance:g}",
                    iterations=iterations, bracket=final, residual=f_root,
                )
            floor = abs(fvals[1] - fvals[0]) if all(map(math.isfinite, fvals)) else math.inf
            # pick the bracket end with the smaller residual
            cands = [(abs(fv), x, fv) for x, fv in zip(final, fvals) if math.isfinite(fv)]
            _, root, f_root = min(cands)
            if not abs(f_root) <= floor:
                raise ConvergenceError(
                    f"N={n}: bracket exhausted at |F|={abs(f_root):.3g} "
                    f"above local jump {floor:.3g}",
                    iterations=iterations, bracket=final, residual=f_root,
                )
            limited = True
            log.info("N=%d resolution-limited: |F|=%.3g, jump=%.3g", n, abs(f_root), floor)

    outcome = forward_recursion(root, n, mode)
    meta = SolveMeta(
        iterations=iterations,
        bracket=bracket,
        precision_mode=mode.value,
        x1_interval=final,
        sign_changes=changes,
        resolution_limited=limited,
        residual_floor=floor,
    )
    return WorldConfiguration(np.array(outcome.positions), f_root, meta)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    threshold: float


@dataclass(frozen=True)
class ValidationReport:
    n_worlds: int
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


def validate_configuration(cfg: WorldConfiguration, tol: float = 1e-9) -> ValidationReport:
    """Check ordering, positivity, the Coulomb-sum condition, the boundary
    residual and the ``x_N`` bounds. Failures are reported, never raised.

    The residual is re-evaluated from the stored positions. When the solve
    was resolution-limited the residual threshold widens to the recorded jump.
    """
    pos = cfg.positions
    n = cfg.n_worlds
    gaps = pos[:-1] - pos[1:]
    min_gap = float(gaps.min()) if n > 1 else math.inf
    x_n = float(pos[-1])

    inv_sum = math.fsum(1.0 / x for x in pos) if np.all(pos != 0) else math.inf
    cond2 = abs(inv_sum - n) / n
    resid = abs(boundary_residual_of(pos))
    resid_tol = tol
    if cfg.solve_meta is not None and cfg.solve_meta.resolution_limited:
        resid_tol = max(tol, cfg.solve_meta.residual_floor)

    lower, upper = 1.0 / math.sqrt(n), n ** (-1.0 / 3.0)
    if n == 1:
        lower = upper = 1.0
    checks = (
        Check("ordering", min_gap > 0.0, min_gap, 0.0),
        Check("positivity", x_n > 0.0, float(pos.min()), 0.0),
        Check("condition2", cond2 <= tol, cond2, tol),
        Check("boundary_residual", resid <= resid_tol, resid, resid_tol),
        Check("xN_lower_bound", x_n >= lower * (1.0 - tol), x_n, lower),
        Check("xN_upper_bound", x_n <= upper * (1.0 + tol), x_n, upper),
    )
    return ValidationReport(n, checks)
