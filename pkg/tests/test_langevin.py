"""Stochastic integrator: configuration guards, noise assembly, ensembles."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from cavitycool.langevin import (
    DT_CEILING,
    EnsembleStats,
    SimulationConfig,
    assemble_local_sde,
    energy_relaxation_rate,
    fit_stationary_kinetic,
    impulse_force_estimate,
    predicted_kinetic,
    project_psd,
    run_ensemble,
    suggested_max_dt,
    velocity_capture_scan,
)
from cavitycool.units import ConfigError, DomainError

DELTA = 1.0 / math.sqrt(3)


def base_config(**overrides):
    settings = dict(delta=DELTA, drive=0.1, omega_r=1e-3, dt=0.05,
                    t_end=100.0, trajectories=64, sample_every=20, seed=9)
    settings.update(overrides)
    return SimulationConfig(**settings)


def test_suggested_max_dt_limits():
    assert suggested_max_dt(0.5, 0.0) == pytest.approx(0.04)
    assert suggested_max_dt(0.0, 0.0) == pytest.approx(DT_CEILING)
    assert suggested_max_dt(0.0, -0.1) == pytest.approx(DT_CEILING)
    # a deep lattice introduces its own velocity scale
    assert suggested_max_dt(0.0, -100.0, omega_r=1e-3) < DT_CEILING


def test_config_validation_messages():
    with pytest.raises(ConfigError, match="drive"):
        base_config(drive=-0.1)
    with pytest.raises(ConfigError, match="omega_r"):
        base_config(omega_r=0.0)
    with pytest.raises(ConfigError, match="n_particle_coefficients"):
        base_config(particle_count=2)
    with pytest.raises(ConfigError, match="trajectory"):
        base_config(trajectories=0)
    with pytest.raises(ConfigError, match="sample_every"):
        base_config(sample_every=0)
    with pytest.raises(ConfigError, match="clamp_policy"):
        base_config(clamp_policy="ignore")
    with pytest.raises(ConfigError, match="noise"):
        base_config(noise="levy")
    with pytest.raises(ConfigError, match="seed"):
        base_config(seed=-1)
    with pytest.raises(ConfigError, match="init_x"):
        base_config(init_x="everywhere")
    with pytest.raises(ConfigError, match="init_p_sigma"):
        base_config(init_p_sigma=-2.0)
    with pytest.raises(ConfigError, match="threads"):
        base_config(threads=0)


def test_config_rejects_too_coarse_time_step():
    with pytest.raises(ConfigError, match="too coarse"):
        base_config(dt=0.1, init_p_mean=200.0)
    accepted = base_config(dt=0.05, init_p_mean=200.0, v_max_expected=0.4)
    assert accepted.velocity_scale() == pytest.approx(0.4)


def test_config_velocity_scale_from_momentum_spread():
    cfg = base_config(init_p_mean=50.0, init_p_sigma=10.0)
    assert cfg.velocity_scale() == pytest.approx(2e-3 * (50.0 + 4 * 10.0))
    assert base_config().velocity_scale() == pytest.approx(2e-3)


def test_clamp_threshold_tracks_drive_and_detuning():
    cfg = base_config()
    assert cfg.clamp_threshold() == pytest.approx(
        1e-3 * 0.1**2 / (1 + DELTA**2), rel=1e-12)


def test_project_psd_zeroes_negative_eigenvalues():
    flattened, dropped = project_psd(np.diag([1.0, -0.1]))
    assert flattened == pytest.approx(np.diag([1.0, 0.0]))
    assert dropped == pytest.approx(0.1)
    mixed = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3 and -1
    projected, dropped = project_psd(mixed)
    eigs = np.linalg.eigvalsh(projected)
    assert eigs.min() >= -1e-15
    assert projected == pytest.approx(projected.T)
    assert projected == pytest.approx(1.5 * np.ones((2, 2)))
    assert dropped == pytest.approx(1.0)
    with pytest.raises(DomainError, match="symmetric"):
        project_psd(np.array([[1.0, 0.5], [0.2, 1.0]]))


def test_assemble_local_sde_pieces():
    cfg = base_config()
    sde = assemble_local_sde(0.6, 300.0, cfg)
    assert sde["drift"][0] == pytest.approx(2 * cfg.omega_r * 300.0)
    projected = sde["diffusion_projected"]
    assert np.linalg.eigvalsh(projected).min() >= -1e-18
    # after projection the 2x2 matrix is rank one: a single noise direction
    outer = np.outer(sde["noise_vector"], sde["noise_vector"])
    assert outer == pytest.approx(2 * projected, rel=1e-9, abs=1e-18)
    assert sde["discarded"] < cfg.clamp_threshold()
    fast = assemble_local_sde(2.0, 2500.0, cfg)
    assert fast["discarded"] > cfg.clamp_threshold()


def test_ballistic_motion_is_exact():
    cfg = base_config(drive=0.0, delta=1.0, init_x=0.3, init_p_mean=50.0,
                      dt=0.1, t_end=10.0, trajectories=8, sample_every=10)
    stats = run_ensemble(cfg)
    assert np.all(stats.final_p == 50.0)
    assert stats.final_x == pytest.approx(0.3 + 2e-3 * 50.0 * 10.0, rel=1e-12)
    assert stats.times[0] == pytest.approx(cfg.sample_every * cfg.dt)
    assert np.diff(stats.times) == pytest.approx(cfg.sample_every * cfg.dt)


def test_constant_coefficient_moments_are_exact_in_distribution():
    # equal absorption and re-emission channels flatten their gratings
    cfg = base_config(drive=0.0, delta=1.0, absorption_diffusion=0.01,
                      scattering_diffusion=0.01, force_bias=0.01,
                      trajectories=4096, dt=0.05, t_end=50.0,
                      sample_every=100, seed=21)
    sde = assemble_local_sde(0.7, 0.0, cfg)
    assert sde["diffusion_raw"][1, 1] == pytest.approx(0.01, rel=1e-12)
    stats = run_ensemble(cfg)
    n = cfg.trajectories
    mean_p = stats.final_p.mean()
    var_p = stats.final_p.var()
    target_var = 2 * 0.01 * 50.0
    assert mean_p == pytest.approx(0.01 * 50.0, abs=6 * math.sqrt(target_var / n))
    assert var_p == pytest.approx(target_var, rel=6 * math.sqrt(2.0 / n))
    assert stats.clamp_fraction_any == 0.0


def test_clamp_accounting_at_rest_and_in_the_negative_lobes():
    rest = run_ensemble(base_config(t_end=20.0))
    assert rest.clamp_fraction_any > 0.9
    assert rest.clamp_fraction_material == 0.0
    rest_zero = run_ensemble(base_config(t_end=20.0,
                                         clamp_policy="zero_negative_dpp"))
    assert rest_zero.clamp_fraction_material == 0.0
    fast = run_ensemble(base_config(dt=0.004, t_end=40.0, init_p_mean=2500.0,
                                    trajectories=128))
    assert fast.clamp_fraction_material > 0.5
    assert fast.clamp_mean_magnitude > 0.0


def test_runs_are_deterministic_and_thread_invariant():
    first = run_ensemble(base_config(t_end=200.0, trajectories=128))
    second = run_ensemble(base_config(t_end=200.0, trajectories=128))
    assert np.array_equal(first.final_p, second.final_p)
    assert np.array_equal(first.mean_p2, second.mean_p2)
    threaded = run_ensemble(base_config(t_end=200.0, trajectories=128,
                                        threads=4))
    assert np.array_equal(first.final_p, threaded.final_p)
    reseeded = run_ensemble(base_config(t_end=200.0, trajectories=128,
                                        seed=10))
    assert not np.array_equal(first.final_p, reseeded.final_p)


def test_gaussian_noise_variant_matches_two_point_statistically():
    kwargs = dict(t_end=2000.0, trajectories=512, sample_every=400)
    two_point = run_ensemble(base_config(**kwargs))
    gaussian = run_ensemble(base_config(noise="gaussian", seed=77, **kwargs))
    assert gaussian.final_kinetic == pytest.approx(two_point.final_kinetic,
                                                   rel=0.35)


def test_halving_the_step_leaves_heating_statistics_unchanged():
    coarse = run_ensemble(base_config(dt=0.1, t_end=2000.0, trajectories=512,
                                      sample_every=100, seed=11))
    fine = run_ensemble(base_config(dt=0.025, t_end=2000.0, trajectories=512,
                                    sample_every=400, seed=12))
    assert fine.final_kinetic == pytest.approx(coarse.final_kinetic, rel=0.25)


def test_moving_ensemble_cools_toward_the_grating():
    cfg = base_config(dt=0.04, t_end=10000.0, init_p_mean=250.0,
                      trajectories=256, sample_every=2500)
    stats = run_ensemble(cfg)
    p2 = stats.mean_p2
    assert p2[-1] < 0.9 * p2[0]
    assert p2[-1] > 0.2 * p2[0]
    assert np.all(np.diff(p2) < 0)


def test_uniform_initial_positions_cover_the_period():
    stats = run_ensemble(base_config(t_end=20.0, trajectories=512))
    assert stats.hist_x_edges[0] == 0.0
    assert stats.hist_x_edges[-1] == pytest.approx(2 * math.pi)
    assert stats.hist_x_counts.sum() == 512
    occupied = (stats.hist_x_counts > 0).mean()
    assert occupied > 0.9


def test_predicted_kinetic_and_relaxation_rate():
    cfg = base_config()
    assert predicted_kinetic(cfg) == pytest.approx(0.5773502691896258, rel=1e-12)
    assert energy_relaxation_rate(cfg) == pytest.approx(
        8 * 1e-3 * 0.01 * DELTA / (1 + DELTA**2) ** 2, rel=1e-12)


def test_velocity_capture_scan_anchors():
    deltas = np.array([0.3, DELTA, 1.0])
    velocities = np.linspace(0.0, 10.0, 101)
    scan = velocity_capture_scan(deltas, velocities, 0.1)
    assert scan["force"].shape == (3, 101)
    assert scan["peak_velocity"] == pytest.approx([0.3, 0.4, 0.5])
    assert scan["peak_force"][2] == pytest.approx(-0.002, rel=1e-12)
    assert np.all(scan["peak_force"] < 0)
    assert np.all(np.abs(scan["force"][:, -1]) < np.abs(scan["peak_force"]) / 10)


def test_impulse_force_estimate_agrees_with_analytic_curve():
    out = impulse_force_estimate(DELTA, 1.0, 0.1, 1e-3)
    assert out["force_error"] > 0
    assert out["analytic"] == pytest.approx(-4.996300406448686e-4, rel=1e-10)
    assert abs(out["force"] - out["analytic"]) < 4 * out["force_error"]


def synthetic_arm(config, a, b, times):
    rate = energy_relaxation_rate(config)
    kinetic = a + b * np.exp(-rate * times)
    mean_p2 = kinetic / config.omega_r
    zeros = np.zeros_like(times)
    return EnsembleStats(
        config=config, times=times, mean_p=zeros, mean_p2=mean_p2,
        mean_x_mod=zeros, clamp_fraction_any=0.0, clamp_fraction_material=0.0,
        clamp_mean_magnitude=0.0, hist_p_edges=np.array([0.0, 1.0]),
        hist_p_counts=np.array([0]), hist_x_edges=np.array([0.0, 1.0]),
        hist_x_counts=np.array([0]), final_x=np.array([0.0]),
        final_p=np.array([0.0]), walltime_s=0.0)


def test_fit_recovers_a_synthetic_two_arm_relaxation():
    cfg = base_config()
    times = np.linspace(2000.0, 60000.0, 40)
    cold = synthetic_arm(cfg, 0.6, -0.35, times)
    hot = synthetic_arm(cfg, 0.6, +0.55, times)
    fit = fit_stationary_kinetic([cold, hot])
    assert fit is not None
    assert fit["arms"] == 2
    assert fit["stationary"] == pytest.approx(0.6, rel=1e-9)
    assert fit["rate"] == pytest.approx(energy_relaxation_rate(cfg), rel=1e-9)


def test_fit_declines_with_too_little_data():
    cfg = base_config()
    short = synthetic_arm(cfg, 0.6, -0.3, np.linspace(1000.0, 4000.0, 3))
    assert fit_stationary_kinetic([short]) is None
    assert fit_stationary_kinetic([]) is None
    lone = synthetic_arm(cfg, 0.6, -0.3, np.linspace(1000.0, 60000.0, 30))
    assert fit_stationary_kinetic(lone)["arms"] == 1


def test_stats_steady_window_and_final_kinetic():
    stats = run_ensemble(base_config())
    start, stop = stats.steady_window()
    assert (start, stop) == (75, 100)
    window_mean = float(np.mean(stats.kinetic[start:stop]))
    assert stats.final_kinetic == pytest.approx(window_mean, rel=1e-12)
    assert stats.final_kinetic_std > 0
