"""Degenerate-family friction study helpers on small, fast settings."""

from __future__ import annotations

import math

import numpy as np
import pytest

from cavitycool.confocal import (
    DEFAULT_DRIVE,
    DEFAULT_RECOIL,
    FIGURE_CAPS,
    OPTIMAL_DETUNING,
    SWEEP_CAP,
    box_averaged_weights,
    engine_friction,
    friction_average,
    friction_curve,
    parity_split,
    pointwise_friction,
    pump_overlap_map,
    run_confocal_study,
    scaled_channels,
    sweep_caps,
)
from cavitycool.modes import ConfocalSetup, confocal_degenerate_set
from cavitycool.units import DomainError

SETUP = ConfocalSetup(mirror_distance=0.01, fundamental_longitudinal=20000)


def test_module_defaults():
    assert OPTIMAL_DETUNING == pytest.approx(1 / math.sqrt(3), rel=1e-15)
    assert DEFAULT_DRIVE == 0.1
    assert DEFAULT_RECOIL == 1e-3
    assert FIGURE_CAPS == (0, 8, 18)
    assert SWEEP_CAP == 54


def test_fundamental_box_weight_matches_gaussian_integral():
    family = confocal_degenerate_set(SETUP, 0)
    weights = box_averaged_weights(family, SETUP.fundamental_waist)
    # box mean of exp(-2 r^2 / w0^2) over [-4 w0, 4 w0]^2 is pi/(128 sqrt 2)
    assert weights[0] == pytest.approx(math.pi / (128 * math.sqrt(2)), rel=1e-12)
    doubled = box_averaged_weights(family, SETUP.fundamental_waist, points=256)
    assert doubled[0] == pytest.approx(weights[0], rel=1e-12)


def test_box_weights_shrink_with_transverse_order():
    family = confocal_degenerate_set(SETUP, 8)
    weights = box_averaged_weights(family, SETUP.fundamental_waist)
    assert len(weights) == len(family)
    assert np.all(weights > 0)
    orders = np.array([2 * g.radial + g.azimuthal for g in family])
    assert weights[orders == 0][0] == weights.max()


def test_parity_split_conserves_total_weight():
    family = confocal_degenerate_set(SETUP, 8)
    weights = box_averaged_weights(family, SETUP.fundamental_waist)
    a_cos, a_sin = parity_split(family, weights, 8)
    assert a_cos >= 0 and a_sin >= 0
    assert a_cos + a_sin == pytest.approx(weights.sum(), rel=1e-12)


def test_sweep_caps_are_even_and_validated():
    assert sweep_caps(8) == (0, 2, 4, 6, 8)
    assert len(sweep_caps(54)) == 28
    with pytest.raises(DomainError, match="even"):
        sweep_caps(7)
    with pytest.raises(DomainError, match="even"):
        sweep_caps(-2)


def test_pump_overlap_map_peaks_on_axis():
    family = confocal_degenerate_set(SETUP, 0)
    w0 = SETUP.fundamental_waist
    ys = np.array([0.0, w0, 2 * w0])
    overlap = pump_overlap_map(family[0], w0, ys, np.zeros_like(ys))
    assert overlap[0] == overlap.max()
    assert np.all(np.diff(overlap) < 0)


def test_scaled_channels_structure():
    channels, couplings, amplitudes = scaled_channels(
        SETUP, 2, OPTIMAL_DETUNING, DEFAULT_DRIVE)
    # three degenerate modes plus the driven side channel
    assert len(channels) == 4
    assert couplings.shape == (4, 4)
    assert np.allclose(couplings, couplings.T)
    assert amplitudes.shape == (4,)
    assert amplitudes[0] != 0
    assert np.all(amplitudes[1:] == 0)
    kinds = {c.geometry.kind for c in channels}
    assert "gaussian_running" in kinds
    assert "laguerre_gaussian_standing" in kinds


def test_friction_curve_negative_and_average_consistent():
    xs = np.arange(64) * math.pi / 64
    curve = friction_curve(xs, 0.6, 0.4, OPTIMAL_DETUNING, DEFAULT_DRIVE,
                           DEFAULT_RECOIL)
    assert np.all(curve < 0)
    assert np.mean(curve) == pytest.approx(
        friction_average(0.6, 0.4, OPTIMAL_DETUNING, DEFAULT_DRIVE,
                         DEFAULT_RECOIL), rel=1e-12)
    with pytest.raises(DomainError, match="negative"):
        friction_curve(xs, -0.1, 0.4, OPTIMAL_DETUNING, DEFAULT_DRIVE,
                       DEFAULT_RECOIL)


def test_friction_average_additive_in_parity_weights():
    base = friction_average(0.0, 0.0, OPTIMAL_DETUNING, DEFAULT_DRIVE,
                            DEFAULT_RECOIL)
    cos_only = friction_average(0.5, 0.0, OPTIMAL_DETUNING, DEFAULT_DRIVE,
                                DEFAULT_RECOIL)
    sin_only = friction_average(0.0, 0.3, OPTIMAL_DETUNING, DEFAULT_DRIVE,
                                DEFAULT_RECOIL)
    both = friction_average(0.5, 0.3, OPTIMAL_DETUNING, DEFAULT_DRIVE,
                            DEFAULT_RECOIL)
    assert both == pytest.approx(cos_only + sin_only - base, rel=1e-12)


def test_engine_friction_cross_checks_closed_form():
    closed = pointwise_friction(0.4, 0.0, 0.0, SETUP, 2)
    fd = engine_friction(0.4, 0.0, 0.0, SETUP, 2)
    assert closed < 0 and fd < 0
    assert fd == pytest.approx(closed, rel=2e-3)


def test_small_study_shapes_and_normalization():
    study = run_confocal_study(SETUP, (0, 2), grid_points=64, x_points=65,
                               convergence_check=False)
    assert study.mode_counts == (1, 3)
    assert study.curves.shape == (2, 65)
    assert study.xs[0] == 0.0
    assert study.xs[-1] == pytest.approx(2 * math.pi)
    assert np.all(study.curves < 0)
    assert study.ratios[0] == 1.0
    assert study.ratios[1] == pytest.approx(2.375, rel=1e-2)
    assert study.averages[0] == pytest.approx(-2.2564345621225808e-07, rel=1e-9)
    assert study.convergence_delta == 0.0
    order = np.argsort(study.caps)
    mags = np.abs(study.averages[order])
    assert np.all(np.diff(mags) > 0)


def test_study_curve_means_match_reported_averages():
    study = run_confocal_study(SETUP, (0, 2), grid_points=64, x_points=65,
                               convergence_check=False)
    # endpoint-free mean over one period of each curve
    for i in range(len(study.caps)):
        xs = study.xs[:-1]
        assert len(xs) % 2 == 0
        assert np.mean(study.curves[i, :-1]) == pytest.approx(
            study.averages[i], rel=1e-10)
