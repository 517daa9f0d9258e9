"""Friction in a frequency-degenerate multimode standing-wave resonator.

A mirror-symmetric resonator whose mirror spacing equals the mirror
curvature radius carries, for every longitudinal order, a family of
higher-order transverse modes at exactly the same frequency and axial
wavenumber.  A particle crossing the resonator scatters pump photons
into every member of the family, and each scattering channel
contributes its own retarded friction.  This module evaluates the
low-velocity friction coefficient of that mode sum along the resonator
axis, with the transverse coordinates treated as parameters and then
averaged over a box around the axis.

Two structural facts keep the computation cheap.  All family members
share one axial wavenumber, so a member contributes sin^2(kx) or
cos^2(kx) according to the parity of its longitudinal order, and the
whole x-dependence collapses onto two numbers per mode set: the summed
transverse weights of the even-parity and odd-parity members.  And the
transverse weight of each member is the box average of its intensity
overlap with the pump envelope, which is independent of the drive and
detuning, so one weight table serves every cap, detuning, and drive.

The weights follow from eliminating the mode-volume convention: the
invariant coupling product is the drive strength times the l2-
normalized transverse profiles, which makes the fundamental's on-axis
weight exactly 1 and lets the quoted pump-to-fundamental coupling set
the overall scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .modes import (ConfocalSetup, ModeChannel, ModeGeometry,
                    confocal_degenerate_set, gaussian_running,
                    transverse_profile)
from .units import DomainError

OPTIMAL_DETUNING = 1.0 / math.sqrt(3.0)
DEFAULT_DRIVE = 0.1
DEFAULT_RECOIL = 1.0e-3
BOX_HALF_WIDTH = 4.0            # in fundamental waists
FIGURE_CAPS = (0, 8, 18)        # transverse order caps of the plotted curves
SWEEP_CAP = 54                  # largest cap of the saturation sweep


def pump_overlap_map(geometry: ModeGeometry, pump_waist: float,
                     y, z) -> np.ndarray:
    """Pointwise transverse weight of one family member.

    (pi w0^2 / 2) |u_m(y, z)|^2 exp(-2 z^2 / w0^2) with u_m the l2-
    normalized transverse profile; the Gaussian factor is the intensity
    of the pump running along y, whose slow axial variation is dropped.
    Equals 1 for the fundamental on the axis.
    """
    if not pump_waist > 0.0:
        raise DomainError("pump waist must be positive")
    u = transverse_profile(geometry, y, z, normalization="l2")
    envelope = np.exp(-2.0 * (np.asarray(z, dtype=float) / pump_waist) ** 2)
    return 0.5 * math.pi * pump_waist ** 2 * u * u * envelope


def box_averaged_weights(geometries: Sequence[ModeGeometry],
                         pump_waist: float,
                         half_width: float = BOX_HALF_WIDTH,
                         points: int = 128) -> np.ndarray:
    """Trapezoid box mean of `pump_overlap_map` for each geometry.

    The box spans +-half_width fundamental waists in both transverse
    coordinates; `points` grid nodes per axis.
    """
    if points < 64:
        raise DomainError("use at least 64 grid points per axis")
    span = half_width * pump_waist
    ys = np.linspace(-span, span, points)
    yg, zg = np.meshgrid(ys, ys, indexing="ij")
    envelope = np.exp(-2.0 * (zg / pump_waist) ** 2)
    scale = 0.5 * math.pi * pump_waist ** 2
    area = (2.0 * span) ** 2
    out = np.empty(len(geometries))
    for i, g in enumerate(geometries):
        u = transverse_profile(g, yg, zg, normalization="l2")
        integrand = scale * u * u * envelope
        out[i] = np.trapezoid(np.trapezoid(integrand, ys, axis=1), ys) / area
    return out


def parity_split(geometries: Sequence[ModeGeometry],
                 weights: np.ndarray, cap: int) -> Tuple[float, float]:
    """Summed weights of the even- and odd-parity members up to `cap`."""
    a_cos = a_sin = 0.0
    for g, w in zip(geometries, weights):
        if g.transverse_order > cap:
            continue
        if g.parity == "cos":
            a_cos += w
        else:
            a_sin += w
    return a_cos, a_sin


def friction_curve(xs: np.ndarray, a_cos: float, a_sin: float,
                   delta: float, drive: float, omega_r: float
                   ) -> np.ndarray:
    """Low-velocity friction rate along the axis, linewidth units.

    Even-parity members contribute through sin^2(kx) (their gradient)
    and odd ones through cos^2(kx); the second, recoil-suppressed term
    swaps the two.  Negative everywhere when 0 < delta < 1 and any
    weight is present.
    """
    if min(a_cos, a_sin) < 0.0:
        raise DomainError("parity weights cannot be negative")
    den = 1.0 + delta * delta
    lead = 8.0 * omega_r * drive * drive * delta / den ** 2
    recoil = 8.0 * omega_r ** 2 * drive * drive * (1.0 - delta * delta) \
        / den ** 3
    s2 = np.sin(np.asarray(xs, dtype=float)) ** 2
    c2 = 1.0 - s2
    return -(lead * (a_cos * s2 + a_sin * c2)
             + recoil * (a_cos * c2 + a_sin * s2))


def friction_average(a_cos: float, a_sin: float, delta: float,
                     drive: float, omega_r: float) -> float:
    """Axial average of `friction_curve` (sin^2 and cos^2 average to 1/2)."""
    den = 1.0 + delta * delta
    lead = 8.0 * omega_r * drive * drive * delta / den ** 2
    recoil = 8.0 * omega_r ** 2 * drive * drive * (1.0 - delta * delta) \
        / den ** 3
    return -0.5 * (lead + recoil) * (a_cos + a_sin)


@dataclass(frozen=True)
class ConfocalStudy:
    """Friction curves and the saturation sweep of one degenerate family."""

    setup: ConfocalSetup
    delta: float
    drive: float
    omega_r: float
    caps: Tuple[int, ...]
    mode_counts: Tuple[int, ...]
    cos_weights: Tuple[float, ...]
    sin_weights: Tuple[float, ...]
    xs: np.ndarray
    curves: np.ndarray                  # shape (len(caps), len(xs))
    averages: np.ndarray                # axial means, one per cap
    grid_points: int
    convergence_delta: float            # max relative shift on 2x grid

    @property
    def ratios(self) -> np.ndarray:
        """Averages relative to the first (usually fundamental-only) cap."""
        return self.averages / self.averages[0]


def run_confocal_study(setup: ConfocalSetup,
                       caps: Sequence[int],
                       delta: float = OPTIMAL_DETUNING,
                       drive: float = DEFAULT_DRIVE,
                       omega_r: float = DEFAULT_RECOIL,
                       grid_points: int = 128,
                       x_points: int = 257,
                       convergence_check: bool = True) -> ConfocalStudy:
    """Friction curves for each cap in `caps`, sharing one weight table.

    The mode list of the largest cap is enumerated once and each
    smaller cap selects the members within its transverse order.  When
    `convergence_check` is set the weight sums are recomputed on a
    doubled transverse grid and the largest relative shift of the
    axial averages is reported.
    """
    caps = tuple(sorted(int(c) for c in caps))
    if not caps:
        raise DomainError("need at least one transverse order cap")
    if caps[0] < 0:
        raise DomainError("caps must be non-negative")
    geometries = confocal_degenerate_set(setup, caps[-1])
    w0 = setup.fundamental_waist
    weights = box_averaged_weights(geometries, w0, points=grid_points)

    splits = [parity_split(geometries, weights, cap) for cap in caps]
    counts = tuple(sum(1 for g in geometries if g.transverse_order <= cap)
                   for cap in caps)
    xs = np.linspace(0.0, 2.0 * math.pi, x_points)
    curves = np.vstack([
        friction_curve(xs, ac, asn, delta, drive, omega_r)
        for ac, asn in splits])
    averages = np.array([
        friction_average(ac, asn, delta, drive, omega_r)
        for ac, asn in splits])

    shift = 0.0
    if convergence_check:
        fine = box_averaged_weights(geometries, w0, points=2 * grid_points)
        for cap, avg in zip(caps, averages):
            ac, asn = parity_split(geometries, fine, cap)
            avg_fine = friction_average(ac, asn, delta, drive, omega_r)
            shift = max(shift, abs(avg_fine - avg) / abs(avg_fine))

    return ConfocalStudy(
        setup=setup, delta=delta, drive=drive, omega_r=omega_r,
        caps=caps, mode_counts=counts,
        cos_weights=tuple(s[0] for s in splits),
        sin_weights=tuple(s[1] for s in splits),
        xs=xs, curves=curves, averages=averages,
        grid_points=grid_points, convergence_delta=shift)


def sweep_caps(max_cap: int = SWEEP_CAP) -> Tuple[int, ...]:
    """Every even transverse order cap up to `max_cap` (the full sweep)."""
    if max_cap < 0 or max_cap % 2:
        raise DomainError("the sweep cap must be even and non-negative")
    return tuple(range(0, max_cap + 1, 2))


# ---------------------------------------------------------------------------
# independent route through the generic multimode engine

def scaled_channels(setup: ConfocalSetup, cap: int, delta: float,
                    drive: float) -> Tuple[List[ModeChannel], np.ndarray,
                                           np.ndarray]:
    """Channels, coupling matrix, and amplitudes for the generic engine.

    Everything is rescaled to axial-wavenumber units (k = 1) and
    linewidth units (kappa = 1).  Channel 0 is the pumped running wave
    along y at unit amplitude; the empty family members couple to it
    with the drive scaled by the mode-volume ratio sqrt(V_fund / V_m),
    written via the profile peak and l2 norm so no volume convention
    enters.  Suitable for finite-difference friction checks against
    `friction_curve`.
    """
    from .modes import _lg_l2_norm, _lg_peak      # module-private helpers

    geometries = confocal_degenerate_set(setup, cap)
    k = setup.wavenumber
    w_scaled = setup.fundamental_waist * k
    pump = gaussian_running(1.0, w_scaled, axis="y")
    channels = [ModeChannel(geometry=pump, kappa=1.0, delta=delta,
                            coupling=drive)]
    ratios = [1.0]
    norm0 = _lg_l2_norm(0, 0)
    for g in geometries:
        scaled = replace(g, wavenumber=1.0, waist=g.waist * k)
        ratio = norm0 * _lg_peak(g.radial, g.azimuthal) \
            / _lg_l2_norm(g.radial, g.azimuthal)
        channels.append(ModeChannel(geometry=scaled, kappa=1.0, delta=delta,
                                    coupling=drive * ratio))
        ratios.append(ratio)
    m = len(channels)
    couplings = np.zeros((m, m))
    for i, r in enumerate(ratios):
        couplings[0, i] = couplings[i, 0] = drive * r
    couplings[0, 0] = drive
    amplitudes = np.zeros(m, dtype=complex)
    amplitudes[0] = 1.0
    return channels, couplings, amplitudes


def engine_friction(x: float, y: float, z: float, setup: ConfocalSetup,
                    cap: int, delta: float = OPTIMAL_DETUNING,
                    drive: float = DEFAULT_DRIVE,
                    omega_r: float = DEFAULT_RECOIL,
                    momentum_step: float = 1.0,
                    tolerance: float = 1e-11) -> float:
    """Friction at one point from the assembled multimode force.

    Centered finite difference of the dissipative force over momentum,
    with the memory integrals done by quadrature; an independent road
    to the same number as `friction_curve` at the matching transverse
    weight, used to validate the analytic reduction.
    """
    from .coefficients import assemble_parts

    channels, couplings, amplitudes = scaled_channels(setup, cap, delta,
                                                      drive)
    k = setup.wavenumber
    y_s, z_s = y * k, z * k
    forces = []
    for p in (momentum_step, -momentum_step):
        parts = assemble_parts(np.array([[x, p]]), channels, couplings,
                               amplitudes, omega_r, route="quadrature",
                               tolerance=tolerance, y=y_s, z=z_s)
        forces.append(float(parts["dissipative_first"][0]
                            + parts["dissipative_second"][0]))
    return (forces[0] - forces[1]) / (2.0 * momentum_step)


def pointwise_friction(x: float, y: float, z: float, setup: ConfocalSetup,
                       cap: int, delta: float = OPTIMAL_DETUNING,
                       drive: float = DEFAULT_DRIVE,
                       omega_r: float = DEFAULT_RECOIL) -> float:
    """`friction_curve` evaluated with pointwise (unaveraged) weights."""
    geometries = confocal_degenerate_set(setup, cap)
    w0 = setup.fundamental_waist
    a_cos = a_sin = 0.0
    for g in geometries:
        w = float(pump_overlap_map(g, w0, y, z))
        if g.parity == "cos":
            a_cos += w
        else:
            a_sin += w
    return float(friction_curve(np.array([x]), a_cos, a_sin, delta, drive,
                                omega_r)[0])
