"""Time-domain stochastic oracle for the linearised Langevin system.

Simulates du = F u dt + B dW with B B^T = D, so that the stationary covariance
solves F V + V F^T = -D.  Two schemes:

* ``"exact"`` (default): the exact Gaussian one-step transition.  The step
  propagator exp(F dt) and the noise covariance int_0^dt e^{Fs} D e^{F^T s} ds
  come from a Van Loan block exponential on a short sub-interval followed by
  interval doubling.  No step-size restriction, so weakly damped MHz modes
  can be sampled at millisecond steps.
* ``"euler"``: Euler-Maruyama, only valid for dt < 0.1 / |lambda_max(F)|.

Random streams: the seed spawns one ``SeedSequence`` child per block of
``block_size`` trajectories (block index = spawn key), so results do not
depend on the thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.signal import welch

from .dynamics import DriftMatrix, IQ, IP


class McConfigError(ValueError):
    pass


@dataclass(frozen=True)
class McConfig:
    dt: float = 1e-3
    t_total: float = 10.0
    n_traj: int = 10_000
    seed: int = 20240601
    burn_in: float = 0.3
    noise_mode: str = "markovian"
    scheme: str = "exact"
    block_size: int = 250
    threads: int = 1

    def validate(self, F: np.ndarray | None = None) -> None:
        if self.noise_mode != "markovian":
            raise McConfigError(f"unsupported noise_mode {self.noise_mode!r} (only 'markovian')")
        if self.scheme not in ("exact", "euler"):
            raise McConfigError(f"unknown scheme {self.scheme!r}")
        if self.n_traj < 1:
            raise McConfigError("n_traj must be >= 1")
        if not 0 <= self.burn_in < 1:
            raise McConfigError("burn_in must lie in [0, 1)")
        if not (self.dt > 0 and self.t_total > self.dt):
            raise McConfigError("need 0 < dt < t_total")
        if self.scheme == "euler" and F is not None:
            lam = np.abs(np.linalg.eigvals(F)).max()
            if lam > 0 and self.dt >= 0.1 / lam:
                raise McConfigError(
                    f"Euler step dt={self.dt:g} violates dt < 0.1/|lambda_max| = {0.1 / lam:.3g}"
                )


def _entries(F) -> np.ndarray:
    return F.entries if isinstance(F, DriftMatrix) else np.asarray(F, dtype=float)


def _psd_sqrt(Q: np.ndarray) -> np.ndarray:
    """Symmetric square root of a (numerically) PSD matrix."""
    Q = (Q + Q.T) / 2
    w, U = np.linalg.eigh(Q)
    w = np.clip(w, 0.0, None)
    return U * np.sqrt(w)


def gaussian_transition(A: np.ndarray, Q: np.ndarray, dt: float, substep_norm: float = 0.5):
    """Exact transition (Phi, Qd) of dz = A z dt + noise with rate matrix Q over dt."""
    n = A.shape[0]
    norm = np.linalg.norm(A, 1)
    k = max(0, math.ceil(math.log2(max(norm * dt / substep_norm, 1.0))))
    h = dt / 2**k
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = -A * h
    block[:n, n:] = Q * h
    block[n:, n:] = A.T * h
    E = expm(block)
    Phi = E[n:, n:].T
    Qd = Phi @ E[:n, n:]
    for _ in range(k):
        Qd = Qd + Phi @ Qd @ Phi.T
        Phi = Phi @ Phi
    return Phi, (Qd + Qd.T) / 2


@dataclass
class McCovariance:
    V_est: np.ndarray
    stderr: np.ndarray
    times: np.ndarray          # checkpoint times for moment_trace
    moment_trace: np.ndarray   # trajectory-averaged trace(u u^T) at checkpoints
    n_traj: int

    @property
    def diverging(self) -> bool:
        """Second moments grew monotonically over the post-burn-in checkpoints."""
        m = self.moment_trace[len(self.moment_trace) // 3:]
        return bool(np.all(np.diff(m) > 0) and m[-1] > 10 * m[0])


def _blocks(cfg: McConfig) -> list[tuple[int, int]]:
    out, start = [], 0
    while start < cfg.n_traj:
        out.append((start, min(cfg.block_size, cfg.n_traj - start)))
        start += cfg.block_size
    return out


def _rngs(cfg: McConfig, n_blocks: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(n_blocks)]


def _run_parallel(fn, jobs, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def simulate(F, D: np.ndarray, cfg: McConfig, *, n_checkpoints: int = 40) -> McCovariance:
    """Time-averaged stationary covariance with across-trajectory standard errors."""
    A = _entries(F)
    D = np.asarray(D, dtype=float)
    cfg.validate(A)
    n = A.shape[0]
    n_steps = int(round(cfg.t_total / cfg.dt))
    first = int(cfg.burn_in * n_steps)
    if cfg.scheme == "exact":
        Phi, Qd = gaussian_transition(A, D, cfg.dt)
        L = _psd_sqrt(Qd)
    else:
        Phi = np.eye(n) + A * cfg.dt
        L = _psd_sqrt(D * cfg.dt)
    PhiT, LT = Phi.T, L.T
    check_every = max(1, n_steps // n_checkpoints)
    blocks = _blocks(cfg)
    rngs = _rngs(cfg, len(blocks))

    def run(job):
        (start, size), rng = job
        u = np.zeros((size, n))
        acc = np.zeros((size, n, n))
        trace = []
        for step in range(1, n_steps + 1):
            u = u @ PhiT + rng.standard_normal((size, n)) @ LT
            if step > first:
                acc += u[:, :, None] * u[:, None, :]
            if step % check_every == 0:
                trace.append(float(np.mean(np.sum(u * u, axis=1))))
        return acc / (n_steps - first), np.array(trace)

    results = _run_parallel(run, list(zip(blocks, rngs)), cfg.threads)
    per_traj = np.concatenate([r[0] for r in results])
    traces = np.array([r[1] for r in results])
    weights = np.array([size for _, size in blocks], dtype=float)
    V = per_traj.mean(axis=0)
    if cfg.n_traj > 1:
        err = per_traj.std(axis=0, ddof=1) / math.sqrt(cfg.n_traj)
    else:
        err = np.full_like(V, np.inf)
    times = cfg.dt * check_every * np.arange(1, traces.shape[1] + 1)
    trace = (traces * weights[:, None]).sum(axis=0) / weights.sum()
    return McCovariance((V + V.T) / 2, err, times, trace, cfg.n_traj)


@dataclass
class Periodogram:
    freq_hz: np.ndarray
    S_est: np.ndarray
    stderr: np.ndarray
    sample_interval: float


def output_spectrum_estimate(F: DriftMatrix, D: np.ndarray, cfg: McConfig, theta: float,
                             omega_grid=None, *, segment_time: float = 1.0) -> Periodogram:
    """Welch periodogram of the homodyne output quadrature.

    Each sample is the step average of X_theta = P_out sin(theta) + Q_out cos(theta),
    with Q_out = sqrt(gamma0) dQ - Q_in and likewise for P.  The step integral of u
    and the cavity input-noise increments are propagated jointly with u, so the
    input-output relation uses the same noise realisation that drives the cavity.
    ``cfg.dt`` is the sample interval.  With ``omega_grid`` (rad/s) the estimate
    is interpolated onto that grid; otherwise the native Welch grid is returned.
    """
    A = _entries(F)
    D = np.asarray(D, dtype=float)
    cfg.validate(A)
    gamma0 = F.gamma0
    n = A.shape[0]
    # augmented state: (u, int u dt, W_Q, W_P); W are the cavity-input Wiener processes
    m = 2 * n + 2
    Aa = np.zeros((m, m))
    Aa[:n, :n] = A
    Aa[n:2 * n, :n] = np.eye(n)
    B = np.zeros((m, n))
    B[:n, :n] = np.diag(np.sqrt(np.diag(D)))
    if np.count_nonzero(D - np.diag(np.diag(D))):
        raise McConfigError("output spectrum oracle needs a diagonal diffusion matrix")
    B[2 * n, IQ] = 1.0
    B[2 * n + 1, IP] = 1.0
    Qa = B @ B.T
    if cfg.scheme == "exact":
        Phi, Qd = gaussian_transition(Aa, Qa, cfg.dt)
    else:
        Phi = np.eye(m) + Aa * cfg.dt
        Qd = Qa * cfg.dt
    L = _psd_sqrt(Qd)
    # only u carries over between steps
    Pu = Phi[:, :n]
    s, c = math.sin(theta), math.cos(theta)
    read = np.zeros(m)
    read[n + IP] = math.sqrt(gamma0) * s
    read[n + IQ] = math.sqrt(gamma0) * c
    # input quadratures: Q_in dt = dW_Q / sqrt 2
    read[2 * n + 1] = -s / math.sqrt(2)
    read[2 * n] = -c / math.sqrt(2)
    read /= cfg.dt

    n_steps = int(round(cfg.t_total / cfg.dt))
    first = int(cfg.burn_in * n_steps)
    fs = 1.0 / cfg.dt
    nperseg = min(int(round(segment_time * fs)), n_steps - first)
    blocks = _blocks(cfg)
    rngs = _rngs(cfg, len(blocks))
    PuT, LT = Pu.T, L.T

    def run(job):
        (start, size), rng = job
        u = np.zeros((size, n))
        y = np.empty((size, n_steps - first))
        for step in range(n_steps):
            z = u @ PuT + rng.standard_normal((size, m)) @ LT
            u = z[:, :n]
            if step >= first:
                y[:, step - first] = z @ read
        f, P = welch(y, fs=fs, nperseg=nperseg, scaling="density", return_onesided=True, axis=-1)
        return f, P

    results = _run_parallel(run, list(zip(blocks, rngs)), cfg.threads)
    f = results[0][0]
    P = np.concatenate([r[1] for r in results])
    S = P.mean(axis=0)
    err = P.std(axis=0, ddof=1) / math.sqrt(P.shape[0]) if P.shape[0] > 1 else np.full_like(S, np.inf)
    if omega_grid is not None:
        fq = np.atleast_1d(np.asarray(omega_grid, dtype=float)) / (2 * math.pi)
        return Periodogram(fq, np.interp(fq, f, S), np.interp(fq, f, err), cfg.dt)
    return Periodogram(f, S, err, cfg.dt)


def sampled_spectrum(spectrum_fn, omega, sample_interval: float, n_alias: int = 200) -> np.ndarray:
    """Expected periodogram of step-averaged samples of a process with spectrum S.

    Boxcar averaging over one step multiplies S by sinc^2(w dt / 2); sampling
    folds frequencies spaced by 2 pi / dt.  The shot-noise floor (S = 1) is
    preserved exactly because the folded sinc^2 weights sum to one, so only
    S - 1 is folded and truncated.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    ws = 2 * math.pi / sample_interval
    out = np.ones_like(w)
    for k in range(-n_alias, n_alias + 1):
        wk = w + k * ws
        x = wk * sample_interval / 2
        weight = np.sinc(x / math.pi) ** 2
        out = out + (spectrum_fn(np.abs(wk)) - 1.0) * weight
    return out
