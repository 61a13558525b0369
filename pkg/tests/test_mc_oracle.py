import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm, solve_continuous_lyapunov

from ringcavity.dynamics import build_drift
from ringcavity.entangle import noise_model
from ringcavity.mc_oracle import (McConfig, McConfigError, gaussian_transition, output_spectrum_estimate,
                                  sampled_spectrum, simulate)
from ringcavity.params import TWO_PI
from ringcavity.presets import SQUEEZING
from ringcavity.steady import state_from_intensity, working_point

OU = np.array([[-1.0]])
OU_D = np.array([[2.0]])  # stationary variance 1


def test_ou_variance_exact_scheme():
    cfg = McConfig(dt=0.05, t_total=40.0, n_traj=400, seed=1, burn_in=0.25)
    res = simulate(OU, OU_D, cfg)
    assert abs(res.V_est[0, 0] - 1.0) < 4 * res.stderr[0, 0]


def test_ou_variance_euler_scheme():
    cfg = McConfig(dt=0.01, t_total=40.0, n_traj=400, seed=2, burn_in=0.25, scheme="euler")
    res = simulate(OU, OU_D, cfg)
    # Euler bias on the variance is O(dt)
    assert res.V_est[0, 0] == pytest.approx(1.0, abs=4 * res.stderr[0, 0] + 0.01)


@given(st.floats(0.01, 3.0), st.floats(0.2, 5.0), st.floats(0.1, 2.0))
@settings(max_examples=30)
def test_exact_transition_matches_analytic(dt, w, g):
    A = np.array([[0.0, w], [-w, -g]])
    Q = np.diag([0.0, 2 * g])
    Phi, Qd = gaussian_transition(A, Q, dt)
    assert np.allclose(Phi, expm(A * dt), atol=1e-10)
    # stationary covariance is a fixed point of the discrete map
    V = solve_continuous_lyapunov(A, -Q)
    assert np.allclose(Phi @ V @ Phi.T + Qd, V, atol=1e-9)


def test_transition_survives_large_norm():
    A = np.array([[-1e6, 3e6], [-3e6, -1e6]])
    Phi, Qd = gaussian_transition(A, np.eye(2), 1e-3)
    assert np.all(np.isfinite(Phi)) and np.all(np.isfinite(Qd))
    V = solve_continuous_lyapunov(A, -np.eye(2))
    assert np.allclose(Qd, V, rtol=1e-8)


def test_determinism_and_thread_independence():
    A = np.array([[0.0, 2.0], [-2.0, -0.5]])
    D = np.diag([0.0, 1.0])
    base = McConfig(dt=0.02, t_total=6.0, n_traj=600, seed=7, burn_in=0.3)
    a = simulate(A, D, base)
    b = simulate(A, D, base)
    c = simulate(A, D, McConfig(**{**base.__dict__, "threads": 3}))
    assert np.array_equal(a.V_est, b.V_est) and np.array_equal(a.V_est, c.V_est)
    d = simulate(A, D, McConfig(**{**base.__dict__, "seed": 8}))
    assert not np.array_equal(a.V_est, d.V_est)


def test_step_halving_is_consistent():
    A = np.array([[0.0, 2.0], [-2.0, -0.5]])
    D = np.diag([0.0, 1.0])
    V = solve_continuous_lyapunov(A, -D)
    for dt in (0.04, 0.02):
        r = simulate(A, D, McConfig(dt=dt, t_total=40.0, n_traj=300, seed=3, burn_in=0.25))
        assert np.all(np.abs(r.V_est - V) < 5 * r.stderr + 1e-12)


def test_divergence_detected():
    res = simulate(np.array([[0.2]]), np.array([[1.0]]), McConfig(dt=0.05, t_total=30.0, n_traj=20, seed=1))
    assert res.diverging
    ok = simulate(OU, OU_D, McConfig(dt=0.05, t_total=30.0, n_traj=20, seed=1))
    assert not ok.diverging


@pytest.mark.parametrize("kw", [
    {"noise_mode": "colored"}, {"scheme": "rk4"}, {"n_traj": 0}, {"burn_in": 1.0}, {"dt": 0.0},
    {"dt": 2.0, "t_total": 1.0},
])
def test_config_validation(kw):
    with pytest.raises(McConfigError):
        McConfig(**kw).validate()


def test_euler_step_bound():
    with pytest.raises(McConfigError):
        McConfig(dt=0.1, scheme="euler").validate(np.array([[-10.0]]))
    McConfig(dt=0.001, scheme="euler").validate(np.array([[-10.0]]))


def test_empty_cavity_periodogram_is_flat_shot_noise():
    _, d, _ = working_point(SQUEEZING, delta_prime=TWO_PI * SQUEEZING.mirror_freq)
    F = build_drift(d, state_from_intensity(d, 0.0))
    D = noise_model(d).D
    cfg = McConfig(dt=1e-6, t_total=3e-3, n_traj=20, seed=5, burn_in=0.1)
    pg = output_spectrum_estimate(F, D, cfg, theta=0.4, segment_time=2e-4)
    band = pg.freq_hz[1:-1]
    z = (pg.S_est[1:-1] - 1.0) / pg.stderr[1:-1]
    assert len(band) > 10
    assert np.sqrt(np.mean(z**2)) < 2.0


def test_sampled_spectrum_preserves_flat_floor():
    flat = sampled_spectrum(lambda w: np.ones_like(w), np.linspace(0, 3000, 7), 1e-3)
    assert np.allclose(flat, 1.0)
    # a narrow line well below Nyquist is barely changed
    line = lambda w: 1.0 + 1.0 / (1.0 + ((w - 100.0) / 5.0) ** 2)
    got = sampled_spectrum(line, np.array([100.0]), 1e-4)
    assert got[0] == pytest.approx(line(np.array([100.0]))[0], rel=1e-3)


def test_diffusion_must_be_diagonal_for_periodogram():
    _, d, s = working_point(SQUEEZING, delta_prime=TWO_PI * SQUEEZING.mirror_freq)
    F = build_drift(d, s)
    D = noise_model(d).D.copy()
    D[0, 1] = D[1, 0] = 1e-3
    with pytest.raises(McConfigError):
        output_spectrum_estimate(F, D, McConfig(dt=1e-3, t_total=1.0, n_traj=2), 0.0)


def test_time_average_of_ou_is_unbiased_in_mean():
    cfg = McConfig(dt=0.1, t_total=20.0, n_traj=500, seed=11, burn_in=0.3)
    res = simulate(OU, OU_D, cfg)
    assert res.n_traj == 500
    assert res.moment_trace.shape == res.times.shape
    assert math.isfinite(res.stderr[0, 0])
