import math

import numpy as np
import pytest

from miw_coulomb.harness import (
    ConvergenceRecord,
    check_mass_sandwich,
    fit_xn_scaling,
    ode_limit_check,
    quantile_configuration,
    record_for,
    sweep,
)
from miw_coulomb.model import target_density, target_mass
from miw_coulomb.solver import SolverConfig

from conftest import solved


def synthetic(n, xn):
    nan = math.nan
    return ConvergenceRecord(n, nan, xn, nan, nan, nan, nan, nan, nan, nan, nan, 0.0)


@pytest.fixture(scope="module")
def ladder():
    return sweep(list(range(1, 201)))


def test_sweep_single():
    (rec,) = sweep([1])
    assert rec.ok
    assert rec.x1 == 1.0
    assert rec.mass_no_boundary == 0.5
    assert rec.h_n == -0.25


def test_sweep_figures():
    r11, r21 = sweep([21, 11])
    assert (r11.n_worlds, r21.n_worlds) == (11, 21)
    assert r11.mass_no_boundary == pytest.approx(0.54, abs=0.005)
    assert r21.mass_no_boundary == pytest.approx(0.526, abs=0.005)


def test_sweep_rejects_empty():
    with pytest.raises(ValueError):
        sweep([])
    with pytest.raises(ValueError):
        sweep([0, 3])


def test_sweep_records_failures_without_aborting():
    recs = sweep([5, 300], SolverConfig(max_iterations=2))
    by_n = {r.n_worlds: r for r in recs}
    assert not by_n[300].ok
    assert "ConvergenceError" in by_n[300].error
    assert math.isnan(by_n[300].x1)


def test_sweep_is_deterministic_and_parallel_safe():
    ns = [3, 17, 4, 60, 11, 29]
    a = sweep(ns)
    b = sweep(ns, jobs=3)
    assert [r.n_worlds for r in b] == sorted(ns)
    assert all(x.same_numbers(y) for x, y in zip(a, b))
    assert all(r.wall_time >= 0 for r in a)


def test_record_fields_are_finite(ladder):
    for r in ladder:
        for name in ConvergenceRecord.columns():
            if name != "error":
                assert math.isfinite(getattr(r, name)), (r.n_worlds, name)


def test_record_for_matches_sweep():
    (r,) = sweep([21])
    assert record_for(solved(21), r.wall_time).same_numbers(r)


def test_mass_overshoots_for_all_n_above_one(ladder):
    assert all(r.mass_deficit > 0 for r in ladder if r.n_worlds > 1)


# ----- scaling -----------------------------------------------------------

def test_fit_exact_power_law():
    recs = [synthetic(n, n ** (-1 / 2.5)) for n in (2, 5, 10, 40, 100, 1000)]
    fit = fit_xn_scaling(recs)
    assert fit.exponent_a == pytest.approx(2.5, abs=1e-10)
    assert fit.residual < 1e-12


def test_fit_excludes_n_one():
    recs = [synthetic(1, 123.0)] + [synthetic(n, n ** (-1 / 2.5)) for n in (2, 5, 10, 40, 100)]
    fit = fit_xn_scaling(recs)
    assert 1 not in fit.fit_range
    assert fit.exponent_a == pytest.approx(2.5, abs=1e-10)


def test_fit_needs_five_points():
    with pytest.raises(ValueError):
        fit_xn_scaling([synthetic(n, n ** -0.4) for n in (1, 2, 3, 4, 5)])


def test_fit_rejects_increasing_data():
    with pytest.raises(ValueError):
        fit_xn_scaling([synthetic(n, float(n)) for n in (2, 3, 4, 5, 6)])


def test_fit_on_solved_ladder():
    fit = fit_xn_scaling(sweep([10, 20, 50, 100, 200]))
    assert 2.0 < fit.exponent_a < 3.0


# ----- sandwich ----------------------------------------------------------

def test_sandwich_holds(ladder):
    rep = check_mass_sandwich(ladder)
    assert rep.passed
    # the deficit rises until N = 3 and only falls afterwards
    assert rep.monotone_violations == (2, 3)
    assert check_mass_sandwich([r for r in ladder if r.n_worlds >= 3]).monotone


def test_sandwich_figure_pair():
    recs = sweep([11, 21])
    rep = check_mass_sandwich(recs)
    assert rep.passed and rep.monotone
    assert recs[0].mass_deficit - recs[1].mass_deficit == pytest.approx(0.014, abs=0.003)


def test_sandwich_single_record_is_monotone():
    assert check_mass_sandwich(sweep([7])).monotone


def test_sandwich_detects_violation():
    bad = synthetic(5, 0.5)
    bad = ConvergenceRecord(**{**bad.__dict__, "mass_with_boundary": 0.4, "integral": 0.6,
                               "mass_no_boundary": 0.55})
    rep = check_mass_sandwich([bad])
    assert not rep.passed
    assert rep.lower_violations == (5,) and rep.upper_violations == (5,)


# ----- ODE limit ---------------------------------------------------------

@pytest.mark.parametrize("n", [20, 50, 200])
def test_ode_identity_and_envelope(n):
    rep = ode_limit_check(solved(n))
    assert rep.identity_error <= 1e-9
    assert rep.within_envelope
    assert rep.indices[0] > 1 and rep.indices[-1] < n


def test_ode_envelope_scaling_with_fitted_exponent():
    a = fit_xn_scaling(sweep(list(range(10, 201)))).exponent_a
    p = 2.0 / a - 1.0
    base = ode_limit_check(solved(20), exponent_a=a)
    assert base.predicted_exponent == pytest.approx(p)
    const = base.max_discrepancy / 20**p
    for n in (50, 100, 200):
        assert ode_limit_check(solved(n)).max_discrepancy <= const * n**p


def test_ode_discrepancy_shrinks():
    d = [ode_limit_check(solved(n)).max_discrepancy for n in (20, 50, 100, 200)]
    assert all(a > b for a, b in zip(d, d[1:]))


def test_ode_baseline_from_quantile_configuration():
    for n in (50, 200):
        q = quantile_configuration(n)
        base = ode_limit_check(q, values=target_density(q.positions))
        solved_rep = ode_limit_check(solved(n))
        # both are pure finite-difference effects of the same order
        assert base.max_discrepancy < 0.1
        assert solved_rep.max_discrepancy < 2 * base.max_discrepancy


def test_ode_rejects_small_n():
    with pytest.raises(ValueError):
        ode_limit_check(solved(2))


@pytest.mark.parametrize("n", [1, 7, 40])
def test_quantile_configuration(n):
    q = quantile_configuration(n)
    assert q.is_ordered()
    for k, x in enumerate(q.positions, start=1):
        assert target_mass(x) == pytest.approx(0.5 * (k - 0.5) / n, abs=1e-13)
