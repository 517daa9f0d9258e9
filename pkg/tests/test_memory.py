"""Retarded-field memory integral: quadrature engine vs closed forms."""

from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from cavitycool.memory import (
    MemoryQuery,
    closed_form_from_harmonics,
    harmonic_components,
    memory_integral,
    memory_integral_fp_closed,
    memory_integral_grid,
    per_particle_memory,
)
from cavitycool.modes import (
    ModeChannel,
    gaussian_running,
    plane_running,
    plane_standing,
)
from cavitycool.units import DomainError

KAPPA = 1.0
DELTA = 1.0 / math.sqrt(3)
NU = complex(KAPPA, DELTA)
OMEGA_R = 1e-3


def cos_channel():
    return ModeChannel(geometry=plane_standing(1.0, parity="cos"),
                       kappa=KAPPA, delta=DELTA, coupling=0.1)


def side_pump():
    # runs along y, so its section is constant along the cavity axis
    return plane_running(1.0, direction=1, axis="y")


def test_zero_velocity_value_is_section_over_nu():
    ch = cos_channel()
    for x in (0.0, 0.6, 2.0, -1.3):
        res = memory_integral(MemoryQuery(channel=ch, pump_geometry=side_pump(),
                                          x=x, p=0.0, omega_r=OMEGA_R))
        assert res.converged
        assert res.value == pytest.approx(math.cos(x) / NU, rel=1e-12)


def test_constant_section_memory_is_one_over_nu_at_any_velocity():
    # standing wave along y varies only transversely; its x-section is flat
    ch = ModeChannel(geometry=plane_standing(1.0, parity="cos", axis="y"),
                     kappa=KAPPA, delta=DELTA, coupling=0.1)
    for p in (0.0, 137.0, -4000.0):
        res = memory_integral(MemoryQuery(channel=ch, pump_geometry=side_pump(),
                                          x=0.4, p=p, omega_r=OMEGA_R))
        assert res.value == pytest.approx(1.0 / NU, rel=1e-12)


def test_harmonics_of_cos_times_flat_pump():
    h = harmonic_components(cos_channel().geometry, side_pump())
    assert set(h) == {-1, 1}
    assert h[1] == pytest.approx(0.5)
    assert h[-1] == pytest.approx(0.5)


def test_quadrature_matches_closed_form_on_random_points():
    ch = cos_channel()
    h = harmonic_components(ch.geometry, side_pump())
    rng = np.random.default_rng(42)
    for _ in range(20):
        x = rng.uniform(0, math.pi)
        p = rng.uniform(-5000, 5000)
        quad = memory_integral(MemoryQuery(channel=ch, pump_geometry=side_pump(),
                                           x=x, p=p, omega_r=OMEGA_R))
        closed = closed_form_from_harmonics(h, x, 2 * OMEGA_R * p,
                                            KAPPA, DELTA, OMEGA_R)
        assert abs(quad.value - closed.value) <= 1e-10 * max(abs(closed.value), 1e-12)
        assert abs(quad.gradient_x - closed.gradient_x) <= 1e-8
        assert abs(quad.gradient_p - closed.gradient_p) <= 1e-8


def test_self_pumped_default_uses_cosine_squared_harmonics():
    x, p = 0.6, 700.0
    res = memory_integral_fp_closed(x, p, KAPPA, DELTA, OMEGA_R)
    by_hand = closed_form_from_harmonics({-2: 0.25, 0: 0.5, 2: 0.25},
                                         x, 2 * OMEGA_R * p, KAPPA, DELTA, OMEGA_R)
    assert res.value == pytest.approx(by_hand.value, rel=1e-14)
    assert res.gradient_p == pytest.approx(by_hand.gradient_p, rel=1e-14)


def test_closed_form_gradients_match_finite_differences():
    h = {-2: 0.25 + 0j, 0: 0.5 + 0j, 2: 0.25 + 0j}
    x, p = 0.9, 350.0
    v = 2 * OMEGA_R * p
    step = 1e-6
    base = closed_form_from_harmonics(h, x, v, KAPPA, DELTA, OMEGA_R)
    fd_x = (closed_form_from_harmonics(h, x + step, v, KAPPA, DELTA, OMEGA_R).value
            - closed_form_from_harmonics(h, x - step, v, KAPPA, DELTA, OMEGA_R).value
            ) / (2 * step)
    fd_p = (closed_form_from_harmonics(h, x, 2 * OMEGA_R * (p + step), KAPPA,
                                       DELTA, OMEGA_R).value
            - closed_form_from_harmonics(h, x, 2 * OMEGA_R * (p - step), KAPPA,
                                         DELTA, OMEGA_R).value) / (2 * step)
    assert base.gradient_x == pytest.approx(fd_x, rel=1e-8)
    assert base.gradient_p == pytest.approx(fd_p, rel=1e-6)


def test_velocity_reversal_mirrors_position_for_even_sections():
    ch = cos_channel()
    for x, p in ((0.6, 700.0), (1.9, 140.0)):
        forward = memory_integral(MemoryQuery(channel=ch, pump_geometry=side_pump(),
                                              x=x, p=p, omega_r=OMEGA_R))
        mirrored = memory_integral(MemoryQuery(channel=ch, pump_geometry=side_pump(),
                                               x=-x, p=-p, omega_r=OMEGA_R))
        assert mirrored.value == pytest.approx(forward.value, rel=1e-10)


def test_memory_magnitude_bounded_by_kernel_decay():
    ch = cos_channel()
    rng = np.random.default_rng(3)
    for _ in range(15):
        x = rng.uniform(-3, 3)
        p = rng.uniform(-2000, 2000)
        res = memory_integral(MemoryQuery(channel=ch, pump_geometry=side_pump(),
                                          x=x, p=p, omega_r=OMEGA_R))
        assert abs(res.value) <= 1.0 / KAPPA + 1e-9


def test_fast_particles_average_the_grating_away():
    ch = cos_channel()
    p = 5e5  # kv = 1000 kappa
    res = memory_integral(MemoryQuery(channel=ch, pump_geometry=side_pump(),
                                      x=0.6, p=p, omega_r=OMEGA_R))
    assert abs(res.value) < 1.0 / (2 * OMEGA_R * p)
    # self-pumped cos^2 keeps its standing offset harmonic instead
    settled = memory_integral_fp_closed(0.6, p, KAPPA, DELTA, OMEGA_R)
    assert settled.value == pytest.approx(0.5 / NU, rel=1e-3)


def test_gaussian_envelope_has_no_harmonics_and_needs_quadrature():
    mode = gaussian_running(1.0, 3.0, axis="y")
    assert harmonic_components(mode, side_pump()) is None
    ch = ModeChannel(geometry=mode, kappa=KAPPA, delta=DELTA, coupling=0.1)
    res = memory_integral(MemoryQuery(channel=ch, pump_geometry=side_pump(),
                                      x=0.5, p=400.0, omega_r=OMEGA_R))
    assert res.converged
    assert res.quadrature_error < 1e-10
    with pytest.raises(DomainError):
        memory_integral_fp_closed(0.5, 400.0, KAPPA, DELTA, OMEGA_R,
                                  mode_geometry=mode)


def test_unreachable_tolerance_warns_and_reports_nonconvergence():
    ch = ModeChannel(geometry=gaussian_running(1.0, 3.0, axis="y"),
                     kappa=KAPPA, delta=DELTA, coupling=0.1)
    query = MemoryQuery(channel=ch, pump_geometry=side_pump(),
                        x=0.5, p=400.0, omega_r=OMEGA_R)
    with pytest.warns(UserWarning, match="memory integral"):
        res = memory_integral(query, tolerance=1e-16)
    assert not res.converged


def test_query_validation():
    ch = cos_channel()
    with pytest.raises(DomainError, match="omega_r"):
        MemoryQuery(channel=ch, pump_geometry=side_pump(), x=0.0, p=0.0,
                    omega_r=0.0)
    with pytest.raises(DomainError, match="tolerance"):
        memory_integral(MemoryQuery(channel=ch, pump_geometry=side_pump(),
                                    x=0.0, p=0.0, omega_r=OMEGA_R),
                        tolerance=0.0)
    q = MemoryQuery(channel=ch, pump_geometry=side_pump(), x=0.0, p=250.0,
                    omega_r=OMEGA_R)
    assert q.velocity == pytest.approx(0.5)


def test_per_particle_memory_matches_individual_queries():
    ch = cos_channel()
    points = [(0.1, 50.0), (0.8, -120.0), (0.1, 50.0)]
    batch = per_particle_memory(ch, side_pump(), points, OMEGA_R)
    assert len(batch) == 3
    assert batch[0].value == batch[2].value
    single = memory_integral(MemoryQuery(channel=ch, pump_geometry=side_pump(),
                                         x=0.1, p=50.0, omega_r=OMEGA_R))
    assert batch[0].value == single.value


def test_grid_shape_and_agreement_with_closed_form():
    ch = cos_channel()
    xs = np.linspace(0, math.pi, 7)
    vs = np.linspace(0, 4.0, 5)
    grid = memory_integral_grid(xs, vs, ch, side_pump(), OMEGA_R)
    assert grid["value"].shape == (5, 7)
    h = harmonic_components(ch.geometry, side_pump())
    # scale-relative: the section has zeros, so normalize by the grid's peak
    scale = np.abs(grid["value"]).max()
    for i, v in enumerate(vs):
        for j, x in enumerate(xs):
            closed = closed_form_from_harmonics(h, x, v, KAPPA, DELTA, OMEGA_R)
            assert abs(grid["value"][i, j] - closed.value) < 1e-10 * scale
