"""Phase-space drift and diffusion coefficients of cavity-cooled motion.

Everything here is expressed in scaled units: positions in 1/k,
momenta in hbar k, rates in the reference linewidth kappa_ref, forces
in hbar k kappa_ref and momentum diffusion in (hbar k)^2 kappa_ref.
The dimensionless knobs are

    drive    = |U0 alpha| / kappa      (field pulled per photon, times
                                        the pump amplitude)
    pull     = U0 |alpha|^2 / kappa    (signed optical-potential depth)
    omega_r  = recoil frequency / kappa
    delta    = detuning / kappa

Two independent routes exist for the dissipative pieces: closed-form
expressions for the self-pumped standing cosine mode, and the generic
memory-integral engine, which also covers multimode and few-particle
configurations.  The closed forms never call the quadrature and vice
versa, so cross-checks between them are meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import memory as memory_mod
from .modes import (ModeChannel, ModeGeometry, plane_standing,
                    section_gradient_x, section_second_x, section_value)
from .params import DerivedRates
from .units import DomainError, FREQUENCY, Quantity

# ---------------------------------------------------------------------------
# containers


@dataclass
class CoefficientField:
    """Coefficient parts on a phase-space grid (arrays broadcast together).

    Forces are split by origin so reports can show them separately:
    `conservative` is the optical-potential gradient, `dissipative_first`
    the velocity-dependent part linear in the retardation,
    `dissipative_second` its first recoil correction.  `diffusion_xx`
    vanishes identically in this order of the expansion but is kept so
    exported tables state that fact explicitly.
    """

    x: np.ndarray
    p: np.ndarray
    conservative: np.ndarray
    dissipative_first: np.ndarray
    dissipative_second: np.ndarray
    diffusion_pp: np.ndarray
    diffusion_xp: np.ndarray
    absorption_force: Optional[np.ndarray] = None
    absorption_diffusion: Optional[np.ndarray] = None
    scattering_force: Optional[np.ndarray] = None
    scattering_diffusion: Optional[np.ndarray] = None

    def _zeros(self) -> np.ndarray:
        return np.zeros_like(self.diffusion_pp)

    @property
    def force_total(self) -> np.ndarray:
        total = (self.conservative + self.dissipative_first
                 + self.dissipative_second)
        if self.absorption_force is not None:
            total = total + self.absorption_force
        if self.scattering_force is not None:
            total = total + self.scattering_force
        return total

    @property
    def diffusion_pp_total(self) -> np.ndarray:
        total = self.diffusion_pp.copy()
        if self.absorption_diffusion is not None:
            total = total + self.absorption_diffusion
        if self.scattering_diffusion is not None:
            total = total + self.scattering_diffusion
        return total

    @property
    def diffusion_xx(self) -> np.ndarray:
        return self._zeros()


@dataclass(frozen=True)
class ScatteringPattern:
    """Direction moments of the re-emission pattern along the cavity axis."""

    mean_ux: float
    mean_ux2: float

    def __post_init__(self):
        if not (0.0 <= self.mean_ux2 <= 1.0):
            raise DomainError("mean_ux2 must lie in [0, 1]")
        if self.mean_ux * self.mean_ux > self.mean_ux2 + 1e-15:
            raise DomainError("pattern moments violate mean_ux^2 <= mean_ux2")

    @classmethod
    def isotropic(cls) -> "ScatteringPattern":
        return cls(0.0, 1.0 / 3.0)

    @classmethod
    def dipole_axis_along_x(cls) -> "ScatteringPattern":
        """Linear polarization along the cavity axis.

        Angular weight sin(theta) about the polarization axis, so
        <ux^2> = int cos^2 sin^2 / int sin^2 = 1/4.
        """
        return cls(0.0, 1.0 / 4.0)

    @classmethod
    def dipole_axis_perpendicular(cls) -> "ScatteringPattern":
        """Linear polarization perpendicular to the cavity axis:
        <ux^2> = (1 - 1/4) / 2 by symmetry of the remaining axes."""
        return cls(0.0, 3.0 / 8.0)


# ---------------------------------------------------------------------------
# closed forms for the self-pumped standing cosine mode

def standing_cos_parts(x, p, delta: float, drive: float, omega_r: float,
                       pull: float = 0.0, kappa: float = 1.0
                       ) -> CoefficientField:
    """All coefficient parts for f = cos(x), pumped directly.

    Uses the closed-form memory integral
    G = 1/(2 nu) + e^{2ix}/(4(nu + 2iv)) + e^{-2ix}/(4(nu - 2iv)),
    v = 2 omega_r p, from which

        force_1 = -drive^2 Re[2iG] sin(2x)         (retardation force)
        force_2 = +4 omega_r drive^2 Re[dG/dv] cos(2x)
        D_pp    = -2 drive^2 Re[dG/dx] sin(2x)
        D_xp    = +2 omega_r drive^2 Re[dG/dv] sin(2x)
        force_0 = pull * sin(2x)                   (potential gradient)
    """
    if not (kappa > 0.0 and math.isfinite(kappa)):
        raise DomainError("kappa must be positive and finite")
    if drive < 0.0:
        raise DomainError("drive must be non-negative")
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    x, p = np.broadcast_arrays(x, p)
    v = 2.0 * omega_r * p
    nu = complex(kappa, delta)
    a = nu + 2j * v
    b = nu - 2j * v
    e2 = np.exp(2j * x)
    g = 0.5 / nu + 0.25 * e2 / a + 0.25 * np.conj(e2) / b
    gx = 0.5j * (e2 / a - np.conj(e2) / b)
    gv = -0.5j * (e2 / a ** 2 - np.conj(e2) / b ** 2)
    s2 = np.sin(2.0 * x)
    c2 = np.cos(2.0 * x)
    d2 = drive * drive
    return CoefficientField(
        x=x, p=p,
        conservative=pull * s2,
        dissipative_first=2.0 * d2 * np.imag(g) * s2,
        dissipative_second=4.0 * omega_r * d2 * np.real(gv) * c2,
        diffusion_pp=-2.0 * d2 * np.real(gx) * s2,
        diffusion_xp=2.0 * omega_r * d2 * np.real(gv) * s2,
    )


def friction_profile(x, delta: float, drive: float, omega_r: float,
                     kappa: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Leading and next-order local friction of the standing cosine mode.

    Returned as rates (negative = cooling):
      first  = -8 omega_r drive^2 delta sin^2(2x) / (kappa^2+delta^2)^2
      second = -32 omega_r^2 drive^2 (kappa^2-delta^2) cos^2(2x)
               / (kappa^2+delta^2)^3
    with kappa scaled out (kappa = 1 default).  The second-order term
    flips sign beyond delta = kappa.
    """
    x = np.asarray(x, dtype=float)
    den = kappa * kappa + delta * delta
    s2 = np.sin(2.0 * x)
    c2 = np.cos(2.0 * x)
    first = -8.0 * omega_r * drive * drive * delta * s2 * s2 / den ** 2
    second = (-32.0 * omega_r ** 2 * drive * drive
              * (kappa * kappa - delta * delta) * c2 * c2 / den ** 3)
    return first, second


def optimal_detuning(kappa: float = 1.0) -> float:
    """Detuning maximizing the position-averaged leading friction.

    d/d delta of delta/(kappa^2+delta^2)^2 vanishes at delta = kappa/sqrt(3).
    """
    if not kappa > 0.0:
        raise DomainError("kappa must be positive")
    return kappa / math.sqrt(3.0)


def peak_friction(drive: float, omega_r: float) -> float:
    """Largest cooling rate: friction at the steepest-slope point of the
    standing wave at the optimal detuning, -(3 sqrt(3)/2) omega_r drive^2."""
    return -1.5 * math.sqrt(3.0) * omega_r * drive * drive


def averaged_friction(delta: float, drive: float, omega_r: float,
                      kappa: float = 1.0) -> float:
    """Position-averaged leading friction rate (negative = cooling)."""
    den = kappa * kappa + delta * delta
    return -4.0 * omega_r * drive * drive * delta * kappa ** 2 / den ** 2


def averaged_diffusion_scale(drive: float, kappa: float = 1.0) -> float:
    """Position-averaged momentum diffusion at rest, optimal detuning:
    (3/4) drive^2 in (hbar k)^2 kappa."""
    return 0.75 * drive * drive * kappa


def averaged_force(v, delta: float, drive: float, kappa: float = 1.0
                   ) -> np.ndarray:
    """Position-averaged retardation force versus velocity.

    -2 kappa drive^2 delta v / |nu^2 + (2v)^2|^2, antisymmetric in v and
    in delta; cooling (opposing v) for red detuning delta > 0.
    """
    v = np.asarray(v, dtype=float)
    nu2 = complex(kappa, delta) ** 2
    den = np.abs(nu2 + 4.0 * v * v) ** 2
    return -2.0 * kappa * drive * drive * delta * v / den


def averaged_diffusion(v, delta: float, drive: float, kappa: float = 1.0
                       ) -> np.ndarray:
    """Position-averaged momentum diffusion versus velocity.

    kappa drive^2 (|nu|^2 + (2v)^2) / |nu^2 + (2v)^2|^2.
    """
    v = np.asarray(v, dtype=float)
    nu = complex(kappa, delta)
    nu2 = nu * nu
    den = np.abs(nu2 + 4.0 * v * v) ** 2
    return kappa * drive * drive * (abs(nu) ** 2 + 4.0 * v * v) / den


def local_diffusion(x, v, delta: float, drive: float, kappa: float = 1.0
                    ) -> np.ndarray:
    """Momentum diffusion resolved in position and velocity.

    (2 drive^2 / |nu^2 + (2v)^2|^2) * [kappa (|nu|^2 + (2v)^2) sin^2(2x)
     - 2v (Re nu^2 + (2v)^2) sin(2x) cos(2x)].
    The second term tilts the pattern for moving particles and can make
    the local value negative near nodes; only the positive-definite
    total of the underlying process is physical, which is why the
    integrator projects its local diffusion matrix.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    x, v = np.broadcast_arrays(x, v)
    nu = complex(kappa, delta)
    nu2 = nu * nu
    den = np.abs(nu2 + 4.0 * v * v) ** 2
    s2 = np.sin(2.0 * x)
    c2 = np.cos(2.0 * x)
    term1 = kappa * (abs(nu) ** 2 + 4.0 * v * v) * s2 * s2
    term2 = -2.0 * v * (nu2.real + 4.0 * v * v) * s2 * c2
    return 2.0 * drive * drive * (term1 + term2) / den


def cooling_limit(delta: float, kappa: float = 1.0) -> float:
    """Steady-state energy scale (1/4)(delta/kappa + kappa/delta), in
    hbar kappa; minimized at delta = kappa.  Red detuning required."""
    if not kappa > 0.0:
        raise DomainError("kappa must be positive")
    if not delta > 0.0:
        raise DomainError("cooling limit needs red detuning, delta > 0")
    d = delta / kappa
    return 0.25 * (d + 1.0 / d)


def period_average(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Average over one spatial period sampled on a uniform open grid.

    For trigonometric-polynomial integrands the uniform-grid average is
    exact once the grid beats the highest harmonic, which is why the
    scan commands use it.
    """
    return np.mean(np.asarray(values), axis=axis)


# ---------------------------------------------------------------------------
# SI wrappers

def friction_rate_si(rates: DerivedRates, photon_number: float,
                     convention: str = "peak") -> Quantity:
    """Cooling rate in rad/s for a species at optimal detuning.

    "peak" quotes the steepest-slope value -(3 sqrt(3)/2) omega_r
    (U0 alpha/kappa)^2; "mean" the position average, half of it.
    """
    if not photon_number > 0.0:
        raise DomainError("photon_number must be positive")
    kappa = rates.cavity.linewidth.value
    drive = abs(rates.coupling_u0.value) * math.sqrt(photon_number) / kappa
    omega_r = rates.omega_r.value
    value = -1.5 * math.sqrt(3.0) * omega_r * drive * drive
    if convention == "mean":
        value *= 0.5
    elif convention != "peak":
        raise DomainError("convention must be 'peak' or 'mean'")
    return Quantity(value, FREQUENCY)


def diffusion_scale_si(rates: DerivedRates, photon_number: float) -> Quantity:
    """Averaged momentum diffusion (3 hbar m / 2)(U0 alpha/kappa)^2
    kappa omega_r in SI momentum^2 per second."""
    from .constants import CODATA2018
    from .units import MOMENTUM_DIFFUSION
    if not photon_number > 0.0:
        raise DomainError("photon_number must be positive")
    kappa = rates.cavity.linewidth.value
    drive2 = (rates.coupling_u0.value ** 2) * photon_number / kappa ** 2
    m = rates.species.mass.value
    value = 1.5 * CODATA2018.hbar * m * drive2 * kappa * rates.omega_r.value
    return Quantity(value, MOMENTUM_DIFFUSION)


def cooling_limit_si(linewidth: Quantity, detuning: Quantity) -> Quantity:
    """Steady-state energy scale in joules."""
    from .constants import CODATA2018
    from .units import ENERGY
    kappa = linewidth.require(FREQUENCY, "linewidth").value
    delta = detuning.require(FREQUENCY, "detuning").value
    return Quantity(CODATA2018.hbar * kappa * cooling_limit(delta, kappa),
                    ENERGY)


# ---------------------------------------------------------------------------
# absorption and elastic-scattering contributions

def absorption_terms(x, geometry: ModeGeometry, photon_number: float,
                     gamma_total: float, y: float = 0.0, z: float = 0.0
                     ) -> Tuple[np.ndarray, np.ndarray]:
    """Radiation-pressure force and recoil diffusion of photon removal.

    Each absorbed or scattered photon takes one local field-gradient
    kick: force 2 gamma |alpha|^2 Im[f* df/dx], diffusion
    gamma |alpha|^2 |df/dx|^2 (per axis, scaled units).
    """
    if gamma_total < 0.0 or photon_number < 0.0:
        raise DomainError("rates and photon number must be non-negative")
    x = np.asarray(x, dtype=float)
    f = section_value(geometry, x, y, z)
    df = section_gradient_x(geometry, x, y, z)
    weight = gamma_total * photon_number
    force = 2.0 * weight * np.imag(np.conj(f) * df)
    diffusion = weight * np.abs(df) ** 2
    return force, diffusion


def scattering_terms(x, geometry: ModeGeometry, photon_number: float,
                     gamma_sca: float, pattern: ScatteringPattern,
                     wavenumber_ratio: float = 1.0, y: float = 0.0,
                     z: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Re-emission recoil: biased-pattern force and diffusion.

    Diffusion gamma_s |alpha|^2 q (q <ux^2> |f|^2 + 2 <ux> Im[f df*/dx]),
    force -2 gamma_s q <ux> |alpha f|^2, with q the emitted-to-cavity
    wavenumber ratio (1 when pump and cavity share the wavelength).
    Both direction moments vanish for the symmetric patterns shipped
    here, leaving the plain <ux^2> recoil.
    """
    if gamma_sca < 0.0 or photon_number < 0.0:
        raise DomainError("rates and photon number must be non-negative")
    if wavenumber_ratio <= 0.0:
        raise DomainError("wavenumber_ratio must be positive")
    x = np.asarray(x, dtype=float)
    f = section_value(geometry, x, y, z)
    df = section_gradient_x(geometry, x, y, z)
    q = wavenumber_ratio
    weight = gamma_sca * photon_number
    diffusion = weight * q * (q * pattern.mean_ux2 * np.abs(f) ** 2
                              + 2.0 * pattern.mean_ux
                              * np.imag(f * np.conj(df)))
    force = -2.0 * weight * q * pattern.mean_ux * np.abs(f) ** 2
    return force, diffusion


# ---------------------------------------------------------------------------
# diffusion budget

@dataclass(frozen=True)
class BudgetReport:
    """Photon-loss diffusion relative to the unavoidable cavity diffusion.

    Ratios are drive-independent: both numerator and denominator scale
    with the intracavity photon number, so only gamma/kappa and
    (kappa/U0)^2 survive.
    """

    species_label: str
    geometry: str
    ratio_absorption: float
    ratio_scattering: float
    energy_inflation: float
    gradient_suppression: float


def _perpendicular_gradient_moments(waist_in_wavelengths: float
                                    ) -> Tuple[float, float]:
    """Mean |df/dx|^2 and |f|^2 of a transverse Gaussian envelope,
    averaged over |x| <= waist; closed form via the error function."""
    if not waist_in_wavelengths > 0.0:
        raise DomainError("waist must be positive")
    kw = 2.0 * math.pi * waist_in_wavelengths
    # mean over t in [-1, 1] of (2 t / kw)^2 e^{-2 t^2} and of e^{-2 t^2}
    int_e = math.sqrt(math.pi / 8.0) * math.erf(math.sqrt(2.0))
    int_t2e = -0.25 * math.exp(-2.0) + 0.25 * int_e
    return 4.0 * int_t2e / (kw * kw), int_e


def diffusion_budget(rates: DerivedRates, geometry: str = "axial",
                     waist_in_wavelengths: float = 100.0,
                     pattern: Optional[ScatteringPattern] = None
                     ) -> BudgetReport:
    """Compare photon-loss diffusion against cavity (retardation) diffusion.

    "axial": the particle sits in the pumped standing wave itself, so
    gradient kicks act at full strength along the axis.
    "perpendicular": side illumination by a running Gaussian beam; the
    axial intensity gradient is suppressed by (lambda/waist)^2, while
    re-emission recoil is not.

    Absorption counts only true absorption events (transparent species
    report exactly zero); the in-photon recoil of elastic scattering is
    booked under scattering together with the re-emitted photon.
    """
    if pattern is None:
        pattern = ScatteringPattern.isotropic()
    kappa = rates.cavity.linewidth.value
    u0 = rates.coupling_u0.value
    if u0 == 0.0:
        raise DomainError("species has no coupling; budget undefined")
    g_abs = rates.gamma_abs.value / kappa
    g_sca = rates.gamma_sca.value / kappa
    u2 = (u0 / kappa) ** 2
    cavity = 0.75 * u2                      # averaged optimal-detuning value

    if geometry == "axial":
        grad_mean, intensity_mean = 0.5, 0.5
        suppression = 1.0
    elif geometry == "perpendicular":
        grad_mean, intensity_mean = _perpendicular_gradient_moments(
            waist_in_wavelengths)
        suppression = grad_mean / 0.5
    else:
        raise DomainError("geometry must be 'axial' or 'perpendicular'")

    ratio_abs = g_abs * grad_mean / cavity
    ratio_sca = g_sca * (grad_mean
                         + pattern.mean_ux2 * intensity_mean) / cavity
    return BudgetReport(
        species_label=rates.species.label,
        geometry=geometry,
        ratio_absorption=ratio_abs,
        ratio_scattering=ratio_sca,
        energy_inflation=1.0 + ratio_abs + ratio_sca,
        gradient_suppression=suppression,
    )


# ---------------------------------------------------------------------------
# generic engine: multimode and several particles

def _sections(geometry: ModeGeometry, xs: np.ndarray, y: float, z: float
              ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (section_value(geometry, xs, y, z),
            section_gradient_x(geometry, xs, y, z),
            section_second_x(geometry, xs, y, z))


def _memory_arrays(channel: ModeChannel, pump_geometry: ModeGeometry,
                   xs: np.ndarray, ps: np.ndarray, omega_r: float,
                   route: str, tolerance: float, y: float, z: float
                   ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """G, dG/dx, dG/dp for each particle, closed form when available."""
    comps = None
    if route in ("auto", "closed"):
        comps = memory_mod.harmonic_components(channel.geometry,
                                               pump_geometry, y, z)
    if comps is None and route == "closed":
        raise DomainError("closed route requested but sections are not "
                          "harmonic; use route='auto' or 'quadrature'")
    n = len(xs)
    g = np.empty(n, dtype=complex)
    gx = np.empty(n, dtype=complex)
    gp = np.empty(n, dtype=complex)
    for i in range(n):
        if comps is not None and route != "quadrature":
            res = memory_mod.closed_form_from_harmonics(
                comps, float(xs[i]), 2.0 * omega_r * float(ps[i]),
                channel.kappa, channel.delta, omega_r)
        else:
            res = memory_mod.memory_integral(memory_mod.MemoryQuery(
                channel=channel, pump_geometry=pump_geometry,
                x=float(xs[i]), p=float(ps[i]), omega_r=omega_r,
                y=y, z=z), tolerance)
        g[i], gx[i], gp[i] = res.value, res.gradient_x, res.gradient_p
    return g, gx, gp


def assemble_parts(phase_points: np.ndarray,
                   channels: Sequence[ModeChannel],
                   couplings: np.ndarray,
                   amplitudes: np.ndarray,
                   omega_r: float,
                   route: str = "auto",
                   tolerance: float = 1e-10,
                   y: float = 0.0, z: float = 0.0) -> dict:
    """Coefficient parts of N particles coupled through M modes.

    `couplings` is the symmetric M x M light-shift matrix (units of the
    reference linewidth); `amplitudes` the complex steady field in each
    mode.  The retardation response of mode pair (m, n) is shared by
    all particles: the first-order force on particle k carries the sum
    over every particle's memory integral, while the recoil correction
    and the cross diffusion involve only particle k's own.  Returns a
    dict of part arrays; `n_particle_coefficients` packs them into the
    drift vector and diffusion matrix.
    """
    pts = np.asarray(phase_points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("phase_points must have shape (N, 2)")
    n_p = pts.shape[0]
    n_m = len(channels)
    u_mat = np.asarray(couplings, dtype=float)
    if u_mat.shape != (n_m, n_m):
        raise DomainError("couplings must be square, one row per channel")
    if not np.allclose(u_mat, u_mat.T, rtol=0.0, atol=1e-14):
        raise DomainError("coupling matrix must be symmetric")
    alphas = np.asarray(amplitudes, dtype=complex)
    if alphas.shape != (n_m,):
        raise DomainError("amplitudes must have one entry per channel")
    if not omega_r > 0.0:
        raise DomainError("omega_r must be positive")

    xs, ps = pts[:, 0], pts[:, 1]
    sec = [_sections(ch.geometry, xs, y, z) for ch in channels]

    # memory arrays per needed (m, n) mode pair
    g_cache: Dict[Tuple[int, int], Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def g_arrays(m: int, n: int):
        if (m, n) not in g_cache:
            g_cache[(m, n)] = _memory_arrays(
                channels[m], channels[n].geometry, xs, ps, omega_r,
                route, tolerance, y, z)
        return g_cache[(m, n)]

    conservative = np.zeros(n_p)
    first = np.zeros(n_p)
    second = np.zeros(n_p)
    d_pp = np.zeros((n_p, n_p))
    d_px = np.zeros((n_p, n_p))        # D[p_k, x_j]

    # coherent potential gradient: pairs (l, n)
    for l in range(n_m):
        for n in range(n_m):
            w = u_mat[l, n]
            a = np.conj(alphas[l]) * alphas[n]
            if w == 0.0 or a == 0.0:
                continue
            fl, dfl, _ = sec[l]
            fn, dfn, _ = sec[n]
            p1 = np.conj(dfl) * fn + np.conj(fl) * dfn
            conservative -= w * np.real(a * p1)

    # retardation terms: triples (l, m, n)
    for l in range(n_m):
        for m in range(n_m):
            if u_mat[l, m] == 0.0 or alphas[l] == 0.0:
                continue
            fl, dfl, d2fl = sec[l]
            fm, dfm, d2fm = sec[m]
            p1 = np.conj(dfl) * fm + np.conj(fl) * dfm
            p2 = (np.conj(d2fl) * fm + 2.0 * np.conj(dfl) * dfm
                  + np.conj(fl) * d2fm)
            for n in range(n_m):
                w = u_mat[l, m] * u_mat[m, n]
                a = np.conj(alphas[l]) * alphas[n]
                if w == 0.0 or a == 0.0:
                    continue
                g, gx, gp = g_arrays(m, n)
                s_all = g.sum()
                first += 2.0 * w * np.real(1j * a * p1 * s_all)
                second -= w * np.real(a * p2 * gp)
                d_pp += w * (np.real(a * p1[:, None] * gx[None, :])
                             + np.real(a * p1[None, :] * gx[:, None]))
                d_px += -w * np.real(a * p1[None, :] * gp[:, None])

    return {
        "conservative": conservative,
        "dissipative_first": first,
        "dissipative_second": second,
        "diffusion_pp": d_pp,
        "diffusion_px": d_px,
    }


def n_particle_coefficients(phase_points: np.ndarray,
                            channels: Sequence[ModeChannel],
                            couplings: np.ndarray,
                            amplitudes: np.ndarray,
                            omega_r: float,
                            route: str = "auto",
                            tolerance: float = 1e-10) -> Tuple[np.ndarray,
                                                               np.ndarray]:
    """Drift vector and diffusion matrix in (x1, p1, x2, p2, ...) order.

    Drift rows alternate velocity (2 omega_r p) and total force; the
    diffusion matrix carries the momentum-momentum block and the
    symmetric momentum-position cross block, with the position-position
    block identically zero at this order.
    """
    parts = assemble_parts(phase_points, channels, couplings, amplitudes,
                           omega_r, route=route, tolerance=tolerance)
    pts = np.asarray(phase_points, dtype=float)
    n_p = pts.shape[0]
    drift = np.zeros(2 * n_p)
    diff = np.zeros((2 * n_p, 2 * n_p))
    force = (parts["conservative"] + parts["dissipative_first"]
             + parts["dissipative_second"])
    for k in range(n_p):
        drift[2 * k] = 2.0 * omega_r * pts[k, 1]
        drift[2 * k + 1] = force[k]
        for j in range(n_p):
            diff[2 * k + 1, 2 * j + 1] = parts["diffusion_pp"][k, j]
            diff[2 * k + 1, 2 * j] = parts["diffusion_px"][k, j]
            diff[2 * j, 2 * k + 1] = parts["diffusion_px"][k, j]
    return drift, diff


def single_mode_channel(delta: float, coupling: float, kappa: float = 1.0,
                        parity: str = "cos") -> ModeChannel:
    """The standard self-pumped standing-wave channel at k = 1."""
    return ModeChannel(geometry=plane_standing(1.0, parity),
                       kappa=kappa, delta=delta, coupling=coupling)


def dissipative_single(x: float, p: float, channel: ModeChannel,
                       alpha: complex, omega_r: float, route: str = "auto",
                       tolerance: float = 1e-10) -> dict:
    """Single-particle coefficients in one channel via the shared engine.

    This is exactly the N = 1, M = 1 slice of `assemble_parts`; the
    closed-form `standing_cos_parts` is the independent route to test
    against.
    """
    parts = assemble_parts(np.array([[x, p]]), [channel],
                           np.array([[channel.coupling]]),
                           np.array([alpha], dtype=complex),
                           omega_r, route=route, tolerance=tolerance)
    return {
        "conservative": float(parts["conservative"][0]),
        "dissipative_first": float(parts["dissipative_first"][0]),
        "dissipative_second": float(parts["dissipative_second"][0]),
        "diffusion_pp": float(parts["diffusion_pp"][0, 0]),
        "diffusion_xp": float(parts["diffusion_px"][0, 0]),
    }


def coefficient_table(xs: np.ndarray, ps: np.ndarray, delta: float,
                      drive: float, omega_r: float, pull: float = 0.0,
                      kappa: float = 1.0,
                      photon_number: float = 1.0,
                      gamma_abs: float = 0.0, gamma_sca: float = 0.0,
                      pattern: Optional[ScatteringPattern] = None) -> dict:
    """Flat columns of every coefficient part over the (x, p) grid.

    Rows are ordered x-major (all p for the first x, then the next x),
    matching the CSV export; the optical-loss terms use the standing
    cosine mode itself as the illumination profile.
    """
    xs = np.asarray(xs, dtype=float)
    ps = np.asarray(ps, dtype=float)
    xg, pg = np.meshgrid(xs, ps, indexing="ij")
    fld = standing_cos_parts(xg, pg, delta, drive, omega_r, pull, kappa)
    geom = plane_standing(1.0, "cos")
    if pattern is None:
        pattern = ScatteringPattern.isotropic()
    abs_force, abs_diff = absorption_terms(
        xg.ravel(), geom, photon_number, gamma_abs + gamma_sca)
    sca_force, sca_diff = scattering_terms(
        xg.ravel(), geom, photon_number, gamma_sca, pattern)
    return {
        "x": xg.ravel(),
        "p": pg.ravel(),
        "v": 2.0 * omega_r * pg.ravel(),
        "force_conservative": fld.conservative.ravel(),
        "force_retard_first": fld.dissipative_first.ravel(),
        "force_retard_second": fld.dissipative_second.ravel(),
        "force_absorption": abs_force,
        "force_scattering": sca_force,
        "diffusion_pp": fld.diffusion_pp.ravel(),
        "diffusion_xp": fld.diffusion_xp.ravel(),
        "diffusion_xx": np.zeros(xg.size),
        "diffusion_pp_absorption": abs_diff,
        "diffusion_pp_scattering": sca_diff,
    }
