import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from ringcavity.params import TWO_PI, derive
from ringcavity.presets import SQUEEZING
from ringcavity.steady import (BranchSelectionError, bistability_scan, critical_thresholds, detuning_for_modified,
                               fold_powers, intensity_roots, relative_residual, solve_steady,
                               working_point)


@given(st.floats(-1.5e6, 1.0e6), st.floats(1e-15, 2e-11))
def test_roots_satisfy_cubic(det_hz, power):
    d = derive(SQUEEZING.replace(cavity_detuning_eff=det_hz, drive_power=power))
    xs = intensity_roots(d)
    assert 1 <= len(xs) <= 3
    assert xs == sorted(xs)
    for x in xs:
        assert x >= 0
        assert relative_residual(d, x) < 1e-9


@given(st.floats(-3.0, 3.0))
def test_modified_detuning_back_solve(ratio):
    w = TWO_PI * SQUEEZING.mirror_freq
    p, d, s = working_point(SQUEEZING, delta_prime=ratio * w)
    assert s.Delta_prime == pytest.approx(ratio * w, rel=1e-9, abs=1e-6)
    assert relative_residual(d, s.intensity) < 1e-9
    assert s.params_fingerprint == d.fingerprint


def test_modified_detuning_formula():
    d = derive(SQUEEZING)
    target = 1234.5
    dt = detuning_for_modified(d, target)
    x = d.eta**2 / (target**2 + (d.gamma0 / 2) ** 2)
    assert dt + d.kerr * x == pytest.approx(target)


def test_zero_drive_gives_empty_cavity():
    d = derive(SQUEEZING)
    d0 = type(d)(**{**d.__dict__, "eta": 0.0})
    assert intensity_roots(d0) == [0.0]


def test_critical_values():
    d = derive(SQUEEZING)
    c = critical_thresholds(d)
    assert c["Delta_cr"] == pytest.approx(-math.sqrt(3) * d.gamma0 / 2)
    assert c["P_cr"] == pytest.approx(d.hbar * d.omega0 * d.gamma0**2 / (3 * math.sqrt(3) * d.kerr))


def test_folds_merge_at_critical_point():
    """Just past the critical detuning the two folds close in on the critical power."""
    d = derive(SQUEEZING)
    c = critical_thresholds(d)
    above = derive(SQUEEZING.replace(cavity_detuning_eff=0.999 * c["Delta_cr"] / TWO_PI))
    assert fold_powers(above) == []
    below = derive(SQUEEZING.replace(cavity_detuning_eff=1.0001 * c["Delta_cr"] / TWO_PI))
    lo, hi = fold_powers(below)
    assert lo == pytest.approx(c["P_cr"], rel=1e-3) and hi == pytest.approx(c["P_cr"], rel=1e-3)
    q = derive(SQUEEZING.replace(cavity_detuning_eff=c["Delta_cr"] / TWO_PI, drive_power=c["P_cr"]))
    assert len(intensity_roots(q)) == 1


def test_fold_powers_bracket_three_branch_window():
    d = derive(SQUEEZING)
    lo, hi = fold_powers(d)
    for P, n in ((0.9 * lo, 1), (0.5 * (lo + hi), 3), (1.1 * hi, 1)):
        assert len(intensity_roots(derive(SQUEEZING.replace(drive_power=P)))) == n


def test_branch_required_in_bistable_window():
    p = SQUEEZING.replace(drive_power=2.5e-12)
    with pytest.raises(BranchSelectionError):
        working_point(p)
    _, _, s = working_point(p, branch=2)
    assert s.branch_index == 2 and s.n_branches == 3


def test_scan_marks_folds_and_requires_monotone_grid():
    rows = bistability_scan(SQUEEZING, "power", np.linspace(0.1e-12, 5e-12, 500))
    assert sum(r.fold for r in rows) == 2
    with pytest.raises(ValueError):
        bistability_scan(SQUEEZING, "power", [1e-12, 3e-12, 2e-12])


@given(st.floats(-0.17e6 * 0.99, 1e6), st.floats(1e-15, 2e-11))
def test_monostable_above_critical_detuning(det_hz, power):
    assume(det_hz > -math.sqrt(3) * 0.2e6 / 2 * 0.999)
    assert len(solve_steady(derive(SQUEEZING.replace(cavity_detuning_eff=det_hz, drive_power=power)))) == 1


def test_out_of_range_branch():
    with pytest.raises(BranchSelectionError):
        working_point(SQUEEZING.replace(drive_power=2.5e-12), branch=3)
