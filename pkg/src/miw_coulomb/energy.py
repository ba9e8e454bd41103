"""Energies of a world configuration.

The interworld potential uses the difference form valid for countably many
worlds,

    U_N = (hbar^2 / 2m) * sum_n D_n^2 x_n^4,
    D_n = 1 / (x_n (x_n^2 - x_{n+1}^2)) - 1 / (x_{n-1} (x_{n-1}^2 - x_n^2)),

with ``x_0 = inf`` (so the backward term vanishes for ``n = 1``) and the pinned
world ``x_{N+1} = 0``. By Cauchy-Schwarz ``U_N >= (sum 1/x_n)^2 / (2N)`` for any
ordered configuration, hence ``(U_N + V_N) / (N + 1) >= -N / (2(N + 1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateConfigurationError
from .model import UNITS, WorldConfiguration


def _forward_terms(cfg: WorldConfiguration) -> np.ndarray:
    cfg.require_ordered()
    x = cfg.with_origin()
    width2 = x[:-1] ** 2 - x[1:] ** 2
    if np.any(width2 <= 0.0):
        raise DegenerateConfigurationError("zero-width cell in configuration")
    return 1.0 / (x[:-1] * width2)


def interworld_potential(cfg: WorldConfiguration) -> float:
    """Discrete interworld potential ``U_N``; equals ``N/2`` at a solution."""
    t = _forward_terms(cfg)
    d = np.diff(t, prepend=0.0)
    x = cfg.positions
    coef = UNITS.hbar**2 / (2.0 * UNITS.mass)
    return coef * math.fsum((d * d) * x**4)


def coulomb_potential(cfg: WorldConfiguration) -> float:
    """``V_N = -e^2 * sum 1/x_n`` over the half-line worlds."""
    if np.any(cfg.positions <= 0.0):
        raise DegenerateConfigurationError("positions must be positive")
    return -(UNITS.charge**2) * math.fsum(1.0 / cfg.positions)


def kinetic_energy(momenta=None) -> float:
    """``sum p^2 / 2m``. The stationary analysis has all momenta zero."""
    if momenta is None:
        return 0.0
    p = np.asarray(momenta, dtype=float)
    return math.fsum(p * p) / (2.0 * UNITS.mass)


def hamiltonian_bound(n_worlds: int) -> float:
    """Lower bound ``-m e^4 N / (2 hbar^2 (N+1))`` of the average Hamiltonian."""
    return -UNITS.energy_scale * n_worlds / (2.0 * (n_worlds + 1))


def potential_bound(cfg: WorldConfiguration) -> float:
    """Cauchy-Schwarz lower bound ``(hbar^2/2m) (sum 1/x_n)^2 / N`` on ``U_N``."""
    s = math.fsum(1.0 / cfg.positions)
    return UNITS.hbar**2 / (2.0 * UNITS.mass) * s * s / cfg.n_worlds


@dataclass(frozen=True)
class EnergyReport:
    n_worlds: int
    u_n: float
    v_n: float
    kinetic: float
    h_n: float
    h_bound: float
    u_bound: float
    u_residual: float
    v_residual: float
    h_residual: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def average_hamiltonian(cfg: WorldConfiguration) -> EnergyReport:
    """Average energy per world ``(K + U_N + V_N) / (N + 1)`` with ``K = 0``.

    The ``N + 1`` counts the pinned world at the origin. Residuals are measured
    against the values at the exact solution, ``U_N = N/2`` and ``V_N = -N``.
    """
    n = cfg.n_worlds
    u = interworld_potential(cfg)
    v = coulomb_potential(cfg)
    k = kinetic_energy()
    h = (k + u + v) / (n + 1)
    bound = hamiltonian_bound(n)
    return EnergyReport(
        n_worlds=n,
        u_n=u,
        v_n=v,
        kinetic=k,
        h_n=h,
        h_bound=bound,
        u_bound=potential_bound(cfg),
        u_residual=abs(u - n / 2.0),
        v_residual=abs(v + n),
        h_residual=abs(h - bound),
    )
