"""Stochastic trajectory ensembles of the standing-wave cooling problem.

Integrates dx = v dt + b_x dW, dp = F(x, p) dt + b_p dW with the
coefficient field of the self-pumped cosine mode, Euler-Maruyama, in
scaled units (lengths 1/k, times 1/kappa, momenta hbar k).  The local
diffusion matrix [[0, D_xp], [D_xp, D_pp]] is indefinite almost
everywhere (its determinant is -D_xp^2), an artifact of truncating the
phase-space expansion; each step projects it onto its positive part and
books how much was discarded, so runs can certify that the clamping was
immaterial.

Determinism: every trajectory owns a counter-based random stream keyed
by (seed, trajectory index), and reductions run over fixed-size chunks
in index order, so results are bit-identical across reruns and thread
counts.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple, Union

import numpy as np

from . import _kernels
from .coefficients import averaged_force, standing_cos_parts
from .units import ConfigError, DomainError

CHUNK_TRAJECTORIES = 256
PHASE_PER_STEP = 0.02       # max k*dx per step, radians
DT_CEILING = 0.25


def suggested_max_dt(v_max: float, pull: float, omega_r: float = 1e-3
                     ) -> float:
    """Largest admissible step.

    The field response is already integrated into the coefficients in
    closed form, so no bare cavity rate appears in the SDE; what limits
    the step is how fast a trajectory sweeps the sin/cos 2x structure
    of the coefficient field.  Requiring at most PHASE_PER_STEP radians
    of phase per step covers both the free flight (rate v_max) and the
    libration in the pull cos^2 potential (momentum amplitude
    sqrt(|pull|/omega_r), again a velocity).  DT_CEILING bounds the
    step when both rates vanish.
    """
    v_pot = 2.0 * omega_r * math.sqrt(abs(pull) / omega_r)
    rate = max(v_max, v_pot, PHASE_PER_STEP / DT_CEILING)
    return PHASE_PER_STEP / rate


@dataclass(frozen=True)
class SimulationConfig:
    """Everything one ensemble run depends on, in scaled units.

    The drive strength enters twice: `drive` = |U0 alpha|/kappa through
    the dissipative terms and `pull` = U0 |alpha|^2/kappa (signed)
    through the conservative force; keeping them separate lets tests
    switch the potential off without touching the fluctuations.
    """

    delta: float
    drive: float
    omega_r: float
    pull: float = 0.0
    include_second: bool = True
    absorption_diffusion: float = 0.0       # (gamma_a+gamma_s)|alpha|^2
    scattering_diffusion: float = 0.0       # gamma_s |alpha|^2 q^2 <ux^2>
    force_bias: float = 0.0                 # constant kick rate (running wave)
    particle_count: int = 1
    trajectories: int = 256
    dt: float = 0.01
    t_end: float = 100.0
    seed: int = 0
    sample_every: int = 100
    clamp_policy: str = "project_psd"
    clamp_threshold_scale: float = 1e-3
    noise: str = "two_point"
    init_x: Union[str, float] = "uniform"
    init_p_mean: float = 0.0
    init_p_sigma: float = 0.0
    v_max_expected: Optional[float] = None
    threads: int = 1

    def __post_init__(self):
        if not (self.drive >= 0.0 and math.isfinite(self.drive)):
            raise ConfigError("drive must be non-negative and finite")
        if not (self.omega_r > 0.0 and math.isfinite(self.omega_r)):
            raise ConfigError("omega_r must be positive and finite")
        if self.particle_count != 1:
            raise ConfigError(
                "run_ensemble integrates one particle per trajectory; "
                "correlated N-particle drift/diffusion is available from "
                "coefficients.n_particle_coefficients")
        if self.trajectories < 1:
            raise ConfigError("need at least one trajectory")
        if not (self.t_end > 0.0 and self.dt > 0.0):
            raise ConfigError("dt and t_end must be positive")
        if self.sample_every < 1:
            raise ConfigError("sample_every must be >= 1")
        if self.clamp_policy not in ("project_psd", "zero_negative_dpp"):
            raise ConfigError(
                "clamp_policy must be project_psd or zero_negative_dpp")
        if self.noise not in ("two_point", "gaussian"):
            raise ConfigError("noise must be two_point or gaussian")
        if not (0 <= self.seed < 2 ** 64):
            raise ConfigError("seed must fit in 64 bits")
        if isinstance(self.init_x, str) and self.init_x != "uniform":
            raise ConfigError("init_x must be 'uniform' or a number")
        if self.init_p_sigma < 0.0:
            raise ConfigError("init_p_sigma must be non-negative")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        dt_max = suggested_max_dt(self.velocity_scale(), self.pull,
                                  self.omega_r)
        if self.dt > dt_max * (1.0 + 1e-12):
            raise ConfigError(
                f"dt = {self.dt:g} too coarse for the fastest timescale; "
                f"use dt <= {dt_max:.3g}")

    def velocity_scale(self) -> float:
        if self.v_max_expected is not None:
            if not self.v_max_expected > 0.0:
                raise ConfigError("v_max_expected must be positive")
            return self.v_max_expected
        v_init = 2.0 * self.omega_r * (abs(self.init_p_mean)
                                       + 4.0 * self.init_p_sigma)
        return max(v_init, 2.0 * self.omega_r)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def clamp_threshold(self) -> float:
        """Materiality cut: a discarded eigenvalue matters only above
        this fraction of the averaged resting diffusion."""
        scale = self.drive ** 2 / (1.0 + self.delta ** 2)
        return self.clamp_threshold_scale * scale


@dataclass
class EnsembleStats:
    """Reduced observables of one ensemble run."""

    config: SimulationConfig
    times: np.ndarray
    mean_p: np.ndarray
    mean_p2: np.ndarray
    mean_x_mod: np.ndarray
    clamp_fraction_any: float
    clamp_fraction_material: float
    clamp_mean_magnitude: float
    hist_p_edges: np.ndarray
    hist_p_counts: np.ndarray
    hist_x_edges: np.ndarray
    hist_x_counts: np.ndarray
    final_x: np.ndarray
    final_p: np.ndarray
    walltime_s: float

    @property
    def kinetic(self) -> np.ndarray:
        """<p^2/2m> over time, in hbar kappa."""
        return self.config.omega_r * self.mean_p2

    def steady_window(self, fraction: float = 0.25) -> Tuple[int, int]:
        n = len(self.times)
        return max(0, n - max(1, int(n * fraction))), n

    @property
    def final_kinetic(self) -> float:
        i0, i1 = self.steady_window()
        return float(np.mean(self.kinetic[i0:i1]))

    @property
    def final_kinetic_std(self) -> float:
        i0, i1 = self.steady_window()
        return float(np.std(self.kinetic[i0:i1]))


def project_psd(matrix: np.ndarray) -> Tuple[np.ndarray, float]:
    """Positive part of a symmetric 2x2 matrix and the discarded weight."""
    m = np.asarray(matrix, dtype=float)
    if m.shape != (2, 2) or abs(m[0, 1] - m[1, 0]) > 1e-12:
        raise DomainError("project_psd expects a symmetric 2x2 matrix")
    vals, vecs = np.linalg.eigh(m)
    clipped = np.clip(vals, 0.0, None)
    discarded = float(np.abs(vals - clipped).sum())
    return (vecs * clipped) @ vecs.T, discarded


def assemble_local_sde(x: float, p: float, config: SimulationConfig
                       ) -> dict:
    """Reference (non-compiled) evaluation of one step's local SDE.

    Built from the complex-arithmetic closed form; the compiled kernel
    re-derives the same numbers in real arithmetic.  Returns drift,
    the raw diffusion matrix, its projected version, the rank-one noise
    vector (including the sqrt(2) of the Fokker-Planck convention) and
    the discarded negative eigenvalue.
    """
    fld = standing_cos_parts(np.array(x), np.array(p), config.delta,
                             config.drive, config.omega_r, config.pull)
    dpp = float(fld.diffusion_pp)
    if config.absorption_diffusion or config.scattering_diffusion:
        c2 = math.cos(2.0 * x)
        dpp += 0.5 * (config.absorption_diffusion * (1.0 - c2)
                      + config.scattering_diffusion * (1.0 + c2))
    dxp = float(fld.diffusion_xp)
    force = config.force_bias + float(
        fld.conservative + fld.dissipative_first
        + (fld.dissipative_second if config.include_second else 0.0))
    raw = np.array([[0.0, dxp], [dxp, dpp]])
    root = math.hypot(dpp, 2.0 * dxp)
    lam_pos = 0.5 * (dpp + root)
    neg = 0.5 * (root - dpp)
    if config.clamp_policy == "project_psd":
        norm2 = dxp * dxp + lam_pos * lam_pos
        if lam_pos > 0.0 and norm2 > 0.0:
            scale = math.sqrt(2.0 * lam_pos / norm2)
            noise = np.array([scale * dxp, scale * lam_pos])
        else:
            noise = np.zeros(2)
        projected = lam_pos * np.outer(
            [dxp, lam_pos], [dxp, lam_pos]) / norm2 if norm2 > 0.0 \
            else np.zeros((2, 2))
    else:
        noise = np.array([0.0, math.sqrt(2.0 * dpp) if dpp > 0.0 else 0.0])
        projected = np.array([[0.0, 0.0], [0.0, max(dpp, 0.0)]])
    drift = np.array([2.0 * config.omega_r * p, force])
    return {
        "drift": drift,
        "diffusion_raw": raw,
        "diffusion_projected": projected,
        "noise_vector": noise,
        "discarded": neg,
    }


def _initial_state(config: SimulationConfig
                   ) -> Tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(np.uint64(config.seed))
    nt = config.trajectories
    if isinstance(config.init_x, str):
        x0 = rng.uniform(0.0, 2.0 * math.pi, nt)
    else:
        x0 = np.full(nt, float(config.init_x))
    p0 = np.full(nt, config.init_p_mean)
    if config.init_p_sigma > 0.0:
        p0 = p0 + config.init_p_sigma * rng.standard_normal(nt)
    return x0, p0


def run_ensemble(config: SimulationConfig) -> EnsembleStats:
    """Integrate the ensemble and reduce it to time series and histograms.

    Work is split into fixed-size trajectory chunks processed in index
    order (possibly by a thread pool; the compiled kernel drops the
    GIL), each accumulating into its own buffers, so the reduction
    order and therefore the output bits do not depend on `threads`.
    """
    t0 = time.perf_counter()
    nt = config.trajectories
    n_steps = config.n_steps
    if n_steps < 1:
        raise ConfigError("t_end shorter than one step")
    sample_every = min(config.sample_every, n_steps)
    n_samples = n_steps // sample_every

    x, p = _initial_state(config)
    cs = np.cos(2.0 * x)
    sn = np.sin(2.0 * x)
    seed = np.uint64(config.seed)
    rng_states = np.array([_kernels.stream_init(seed, np.uint64(i))
                           for i in range(nt)], dtype=np.uint64)
    pools = np.zeros(nt, dtype=np.uint64)

    policy = (_kernels.POLICY_PROJECT
              if config.clamp_policy == "project_psd"
              else _kernels.POLICY_ZERO_P)
    noise_kind = (_kernels.NOISE_TWO_POINT if config.noise == "two_point"
                  else _kernels.NOISE_GAUSSIAN)

    chunks = [(i, min(i + CHUNK_TRAJECTORIES, nt))
              for i in range(0, nt, CHUNK_TRAJECTORIES)]
    sums = [np.zeros((n_samples, 3)) for _ in chunks]
    clamps = [np.zeros(3) for _ in chunks]

    def work(ci: int) -> None:
        lo, hi = chunks[ci]
        _kernels.advance_ensemble(
            x[lo:hi], p[lo:hi], cs[lo:hi], sn[lo:hi],
            rng_states[lo:hi], pools[lo:hi],
            n_steps, config.dt, config.delta, config.drive ** 2,
            config.pull, config.omega_r, config.include_second,
            config.absorption_diffusion, config.scattering_diffusion,
            config.force_bias, config.clamp_threshold(), policy,
            noise_kind, sample_every, sums[ci], clamps[ci])

    if config.threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            list(pool.map(work, range(len(chunks))))
    else:
        for ci in range(len(chunks)):
            work(ci)

    total_sums = np.zeros((n_samples, 3))
    total_clamps = np.zeros(3)
    for s_arr, c_arr in zip(sums, clamps):
        total_sums += s_arr
        total_clamps += c_arr

    times = (np.arange(1, n_samples + 1) * sample_every) * config.dt
    steps_total = float(n_steps) * nt
    x_mod = np.mod(x, 2.0 * math.pi)
    hist_p_counts, hist_p_edges = np.histogram(p, bins=64)
    hist_x_counts, hist_x_edges = np.histogram(
        x_mod, bins=64, range=(0.0, 2.0 * math.pi))
    return EnsembleStats(
        config=config,
        times=times,
        mean_p=total_sums[:, 0] / nt,
        mean_p2=total_sums[:, 1] / nt,
        mean_x_mod=total_sums[:, 2] / nt,
        clamp_fraction_any=total_clamps[0] / steps_total,
        clamp_fraction_material=total_clamps[1] / steps_total,
        clamp_mean_magnitude=(total_clamps[2] / total_clamps[0]
                              if total_clamps[0] > 0 else 0.0),
        hist_p_edges=hist_p_edges,
        hist_p_counts=hist_p_counts,
        hist_x_edges=hist_x_edges,
        hist_x_counts=hist_x_counts,
        final_x=x,
        final_p=p,
        walltime_s=time.perf_counter() - t0,
    )


def predicted_kinetic(config: SimulationConfig) -> float:
    """Stationary <p^2/2m> of the position-averaged linear model, hbar kappa.

    Balancing the averaged leading friction against the averaged
    resting diffusion gives omega_r D / |beta|, which reproduces the
    (1/4)(delta + 1/delta) energy scale independently of position."""
    delta, drive = config.delta, config.drive
    den = 1.0 + delta * delta
    beta = 4.0 * config.omega_r * drive * drive * delta / den ** 2
    diff = drive * drive / den
    return config.omega_r * diff / beta


def energy_relaxation_rate(config: SimulationConfig) -> float:
    """Rate at which <p^2> approaches its stationary value: 2 |beta|."""
    delta, drive = config.delta, config.drive
    den = 1.0 + delta * delta
    return 8.0 * config.omega_r * drive * drive * delta / den ** 2


def fit_stationary_kinetic(arms) -> Optional[dict]:
    """Joint stationary-energy estimate from one or more relaxation runs.

    Fits kinetic_i(t) = a + b_i exp(-r t) with the asymptote a and the
    rate r shared across runs, scanning r on a grid and solving the
    then-linear subproblem exactly (variable projection); deterministic
    and free of optimizer failure modes.

    A single run approached from one side leaves (a, r) nearly
    degenerate: the true relaxation slows as the ensemble heats, and
    least squares then drifts along a slow-rate ridge toward absurd
    asymptotes.  Two runs bracketing the target push the ridge in
    opposite directions and pin the crossing, so prefer passing a cold-
    and a hot-started arm.

    Returns {"stationary": a, "rate": r, "arms": n} with a in hbar
    kappa and r in 1/kappa time, or None if there is too little data.
    """
    if isinstance(arms, EnsembleStats):
        arms = [arms]
    if not arms:
        return None
    series = [(s.times, s.kinetic) for s in arms]
    if sum(len(t) for t, _ in series) < 8 * len(series):
        return None
    rate = energy_relaxation_rate(arms[0].config)
    y = np.concatenate([k for _, k in series])
    n_arms = len(series)

    best = None
    for r_scaled in np.logspace(-1.5, 1.5, 601):
        design = np.zeros((len(y), 1 + n_arms))
        design[:, 0] = 1.0
        row = 0
        for j, (t, k) in enumerate(series):
            design[row:row + len(t), 1 + j] = np.exp(-r_scaled * rate * t)
            row += len(t)
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        sse = float(np.sum((y - design @ coef) ** 2))
        if best is None or sse < best[0]:
            best = (sse, float(coef[0]), r_scaled)
    _, a, r_scaled = best
    if not (math.isfinite(a) and a > 0.0):
        return None
    return {"stationary": a, "rate": float(r_scaled * rate), "arms": n_arms}


def velocity_capture_scan(deltas: np.ndarray, velocities: np.ndarray,
                          drive: float) -> dict:
    """Averaged force over a (detuning, velocity) grid, plus per-detuning
    peak location; the analytic side of the capture-range story."""
    deltas = np.asarray(deltas, dtype=float)
    velocities = np.asarray(velocities, dtype=float)
    force = np.empty((len(deltas), len(velocities)))
    for i, d in enumerate(deltas):
        force[i] = averaged_force(velocities, d, drive)
    peak_idx = np.argmax(np.abs(force), axis=1)
    return {
        "deltas": deltas,
        "velocities": velocities,
        "force": force,
        "peak_velocity": velocities[peak_idx],
        "peak_force": force[np.arange(len(deltas)), peak_idx],
    }


def impulse_force_estimate(delta: float, velocity: float, drive: float,
                           omega_r: float, trajectories: int = 512,
                           t_end: float = 20.0, dt: float = 0.002,
                           seed: int = 1234) -> dict:
    """Monte-Carlo mean force at fixed initial velocity, with its error.

    Short ensemble started at p = v/(2 omega_r) over uniform positions;
    the mean momentum change per unit time estimates the position-
    averaged force before the velocity has drifted appreciably.
    """
    p0 = velocity / (2.0 * omega_r)
    config = SimulationConfig(
        delta=delta, drive=drive, omega_r=omega_r, pull=0.0,
        trajectories=trajectories, dt=dt, t_end=t_end, seed=seed,
        sample_every=max(1, int(round(t_end / dt)) // 50),
        init_x="uniform", init_p_mean=p0, init_p_sigma=0.0,
        v_max_expected=max(abs(velocity) * 2.0, 2.0 * omega_r),
    )
    stats = run_ensemble(config)
    slope, intercept = np.polyfit(stats.times, stats.mean_p, 1)
    resid = stats.mean_p - (slope * stats.times + intercept)
    n = len(stats.times)
    t_var = float(np.sum((stats.times - stats.times.mean()) ** 2))
    slope_err = math.sqrt(float(np.sum(resid ** 2)) / max(n - 2, 1) / t_var)
    return {
        "force": float(slope),
        "force_error": float(slope_err),
        "analytic": float(averaged_force(velocity, delta, drive)),
    }
