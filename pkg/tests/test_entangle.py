import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import block_diag, expm

from ringcavity.dynamics import build_drift
from ringcavity.entangle import (GaussianStateError, UnstableError, dark_mode_report, entanglement_at,
                                 entanglement_scan, is_bona_fide, log_negativity, log_negativity_from_blocks,
                                 mode_transform, noise_model, partial_transpose_log_negativity, phonon_number,
                                 residual_contangle, solve_lyapunov, symplectic_form, vanishing_windows)
from ringcavity.params import derive
from ringcavity.presets import ENTANGLEMENT, ENTANGLEMENT_DETUNING_RATIO, SQUEEZING
from ringcavity.steady import state_from_intensity, working_point

W_PHI = 3e6


def tmsv(r: float) -> np.ndarray:
    c, s = math.cosh(2 * r) / 2, math.sinh(2 * r) / 2
    Z = np.diag([1.0, -1.0])
    return np.block([[c * np.eye(2), s * Z], [s * Z, c * np.eye(2)]])


def random_pure(n: int, H: np.ndarray) -> np.ndarray:
    S = expm(symplectic_form(n) @ (H + H.T))
    return S @ S.T / 2


sym6 = arrays(np.float64, (6, 6), elements=st.floats(-0.6, 0.6))


def test_vacuum_has_no_entanglement():
    V = np.eye(8) / 2
    assert log_negativity(V, "am") == 0.0
    assert residual_contangle(V, "amc").R_min == 0.0
    assert is_bona_fide(V)


@given(st.floats(0.0, 2.0))
def test_two_mode_squeezed_vacuum(r):
    V = tmsv(r)
    # sqrt cancellation in the closed form costs ~1e-8 near r = 0
    assert log_negativity_from_blocks(V) == pytest.approx(2 * r, abs=1e-7)
    assert partial_transpose_log_negativity(V, [0]) == pytest.approx(2 * r, abs=1e-9)


@given(sym6)
@settings(max_examples=60)
def test_block_formula_agrees_with_symplectic_spectrum(H):
    V = random_pure(3, H)
    for pair in ((0, 1), (0, 2), (1, 2)):
        idx = [k for m in pair for k in (2 * m, 2 * m + 1)]
        sub = V[np.ix_(idx, idx)]
        assert log_negativity_from_blocks(sub) == pytest.approx(partial_transpose_log_negativity(sub, [0]),
                                                                abs=1e-7)


@given(sym6)
@settings(max_examples=60)
def test_monogamy_on_pure_states(H):
    res = residual_contangle(random_pure(3, H), (0, 1, 2))
    assert min(res.residuals) > -1e-7
    assert res.R_min >= 0


@given(st.floats(0.0, 1.5), st.floats(0.5, 5.0))
def test_product_with_thermal_mode_has_no_residual(r, nu):
    V = block_diag(tmsv(r), nu * np.eye(2))
    res = residual_contangle(V, (0, 1, 2))
    assert res.R_min == pytest.approx(0.0, abs=1e-9)


def test_unphysical_state_rejected():
    V = np.eye(4) * 0.1
    assert not is_bona_fide(V)
    with pytest.raises(GaussianStateError):
        log_negativity_from_blocks(np.zeros((4, 4)))


def test_decoupled_lyapunov_gives_thermal_occupations():
    p = ENTANGLEMENT
    _, d, s = working_point(p, delta_prime=ENTANGLEMENT_DETUNING_RATIO * W_PHI)
    F = build_drift(d, state_from_intensity(d, 0.0))
    nm = noise_model(d)
    cov = solve_lyapunov(F, nm)
    V = cov.V
    assert cov.residual < 1e-9
    assert V[4, 4] == pytest.approx(0.5) and V[5, 5] == pytest.approx(0.5)
    assert phonon_number(V, d).n_eff == pytest.approx(nm.n_m, rel=1e-3)
    assert log_negativity(V, "am") == 0.0
    # mirror and cavity blocks on their own are physical
    assert is_bona_fide(V[4:8, 4:8])


def test_collisional_cross_coupling_can_break_uncertainty_bound():
    """With no light and T = 0 the non-reciprocal side-mode coupling leaves the
    atomic pair below the uncertainty bound; the solver reports it."""
    _, d, _ = working_point(ENTANGLEMENT, delta_prime=ENTANGLEMENT_DETUNING_RATIO * W_PHI)
    cov = solve_lyapunov(build_drift(d, state_from_intensity(d, 0.0)), noise_model(d))
    assert not cov.bona_fide
    # without collisions the same state is physical
    _, d0, _ = working_point(ENTANGLEMENT.replace(gtilde_override=0.0),
                             delta_prime=ENTANGLEMENT_DETUNING_RATIO * W_PHI)
    assert solve_lyapunov(build_drift(d0, state_from_intensity(d0, 0.0)), noise_model(d0)).bona_fide


def test_unstable_drift_raises():
    with pytest.raises(UnstableError):
        solve_lyapunov(np.diag([1.0, -1.0]), np.eye(2))


def test_reference_point_is_physical_and_entangled():
    rep = entanglement_at(ENTANGLEMENT, ENTANGLEMENT_DETUNING_RATIO * W_PHI)
    assert rep.stable and not rep.flags
    assert rep.E_am > 0.05
    assert rep.n_eff > 0 and rep.T_eff > 0


def test_zero_oam_flagged():
    rep = entanglement_at(ENTANGLEMENT.replace(oam=0.0), ENTANGLEMENT_DETUNING_RATIO * W_PHI)
    assert any("unphysical" in f for f in rep.flags)


def test_scan_marks_unstable_and_requires_detuning():
    rows = entanglement_scan(ENTANGLEMENT, "detuning", [-1.2, 0.5])
    assert rows[0].stable
    assert not rows[1].stable and rows[1].error
    with pytest.raises(ValueError):
        entanglement_scan(ENTANGLEMENT, "oam", [240.0])
    with pytest.raises(ValueError):
        entanglement_scan(ENTANGLEMENT, "bogus", [1.0])


def test_scan_threads_match_serial():
    vals = np.linspace(-1.5, -0.6, 6)
    a = entanglement_scan(ENTANGLEMENT, "detuning", vals)
    b = entanglement_scan(ENTANGLEMENT, "detuning", vals, threads=3)
    assert [r.E_am for r in a] == [r.E_am for r in b]


def test_vanishing_windows_grouping():
    class R:
        def __init__(self, v, e):
            self.sweep_value, self.E_am, self.stable = v, e, True
    rows = [R(0, 0.1), R(1, 0.0), R(2, 0.0), R(3, 0.2), R(4, 0.0)]
    assert vanishing_windows(rows) == [(1, 2), (4, 4)]


@given(st.floats(1.0, 1e4), st.floats(0.1, 1e4), st.floats(1.0, 1e4), st.floats(0.0, 1e4))
def test_mode_transform_invariants(w_side, G, w_phi, g_phi):
    t = mode_transform(w_side, G, w_phi, g_phi)
    # frequency sum and mixing normalisation are preserved
    assert t.com_frequency + t.relative_frequency == pytest.approx(w_side + w_phi, rel=1e-12)
    assert t.mixing_atom**2 + t.mixing_mirror**2 == pytest.approx(1.0)
    assert t.com_optical_coupling == pytest.approx(math.hypot(G, g_phi))


def test_dark_mode_at_resonance():
    t = mode_transform(5.0, 2.0, 5.0, 2.0)
    assert t.com_relative_coupling == 0.0
    assert t.mixing_atom == pytest.approx(t.mixing_mirror)
    rep = dark_mode_report(derive(SQUEEZING))
    assert not rep.dark_c and not rep.dark_d and rep.dressed


def test_reduced_states_stay_physical_across_detuning():
    rows = entanglement_scan(ENTANGLEMENT, "detuning", np.linspace(-2.0, -0.3, 35))
    for r in rows:
        if r.stable:
            assert not any(f.startswith("reduced state") for f in r.flags), (r.sweep_value, r.flags)
