"""Resonator mode geometries and their spatial derivatives.

Supported shapes: plane standing waves (cosine or sine at the origin),
ideal plane running waves, running waves with a Gaussian transverse
envelope (side illumination), and standing Laguerre-Gauss modes in the
near-center approximation (no Gouy phase or wavefront curvature across
the sampled region).  Evaluation is analytic, including first and
second axial derivatives; nothing here differentiates numerically
except the transverse Laplacian probe used for residual reporting.

Positions are measured in whatever length unit `wavenumber` is the
inverse of, so scaled work simply sets k = 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from functools import lru_cache
from typing import IO, Iterable, Optional, Sequence, Union

import numpy as np
from scipy.special import eval_genlaguerre
from scipy.stats import qmc

from .units import DomainError

PLANE_STANDING = "plane_standing"
PLANE_RUNNING = "plane_running"
GAUSSIAN_RUNNING = "gaussian_running"
LG_STANDING = "laguerre_gaussian_standing"

_KINDS = (PLANE_STANDING, PLANE_RUNNING, GAUSSIAN_RUNNING, LG_STANDING)
_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class ModeGeometry:
    """Tagged union over the supported mode shapes.

    Only the fields relevant to `kind` are set; the constructors below
    are the intended way to build instances.  `evaluate` is normalized
    to unit peak, so |f| <= 1 everywhere.
    """

    kind: str
    wavenumber: float
    axis: str = "x"
    parity: Optional[str] = None           # standing kinds: "cos" | "sin"
    direction: int = 1                     # running kinds: +1 | -1
    waist: Optional[float] = None          # envelope kinds
    longitudinal: Optional[int] = None     # LG bookkeeping index n
    radial: Optional[int] = None           # LG radial index
    azimuthal: Optional[int] = None        # LG azimuthal index

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown mode kind {self.kind!r}")
        if not (self.wavenumber > 0.0 and math.isfinite(self.wavenumber)):
            raise DomainError("wavenumber must be positive and finite")
        if self.axis not in _AXES:
            raise DomainError(f"axis must be x, y or z, got {self.axis!r}")
        if self.kind in (PLANE_STANDING, LG_STANDING):
            if self.parity not in ("cos", "sin"):
                raise DomainError("standing modes need parity 'cos' or 'sin'")
        if self.kind in (PLANE_RUNNING, GAUSSIAN_RUNNING):
            if self.direction not in (1, -1):
                raise DomainError("direction must be +1 or -1")
        if self.kind in (GAUSSIAN_RUNNING, LG_STANDING):
            if self.waist is None or not self.waist > 0.0:
                raise DomainError("envelope modes need a positive waist")
        if self.kind == LG_STANDING:
            if self.radial is None or self.radial < 0:
                raise DomainError("radial index must be a non-negative integer")
            if self.azimuthal is None or self.azimuthal < 0:
                raise DomainError("azimuthal index must be a non-negative integer")
            if self.longitudinal is not None and self.longitudinal < 1:
                raise DomainError("longitudinal index must be positive")
            if self.axis != "x":
                raise DomainError("LG standing modes are implemented along x")

    @property
    def transverse_order(self) -> int:
        if self.kind != LG_STANDING:
            raise DomainError("transverse_order applies to LG modes only")
        return 2 * self.radial + self.azimuthal

    @property
    def effective_waist_value(self) -> Optional[float]:
        if self.kind == LG_STANDING:
            return effective_waist(self.radial, self.azimuthal, self.waist)
        return self.waist


def plane_standing(wavenumber: float, parity: str = "cos",
                   axis: str = "x") -> ModeGeometry:
    return ModeGeometry(kind=PLANE_STANDING, wavenumber=wavenumber,
                        parity=parity, axis=axis)


def plane_running(wavenumber: float, direction: int = 1,
                  axis: str = "x") -> ModeGeometry:
    return ModeGeometry(kind=PLANE_RUNNING, wavenumber=wavenumber,
                        direction=direction, axis=axis)


def gaussian_running(wavenumber: float, waist: float, direction: int = 1,
                     axis: str = "y") -> ModeGeometry:
    return ModeGeometry(kind=GAUSSIAN_RUNNING, wavenumber=wavenumber,
                        waist=waist, direction=direction, axis=axis)


def laguerre_gaussian_standing(radial: int, azimuthal: int, parity: str,
                               wavenumber: float, waist: float,
                               longitudinal: Optional[int] = None
                               ) -> ModeGeometry:
    return ModeGeometry(kind=LG_STANDING, wavenumber=wavenumber,
                        parity=parity, waist=waist, radial=radial,
                        azimuthal=azimuthal, longitudinal=longitudinal)


def effective_waist(radial: int, azimuthal: int, waist: float) -> float:
    """Radial extent of an LG mode grows as sqrt(2m + l + 1) times w0."""
    if radial < 0 or azimuthal < 0:
        raise DomainError("mode indices must be non-negative")
    if not waist > 0.0:
        raise DomainError("waist must be positive")
    return waist * math.sqrt(2.0 * radial + azimuthal + 1.0)


# ---------------------------------------------------------------------------
# Laguerre-Gauss transverse profiles

@lru_cache(maxsize=None)
def _lg_peak(radial: int, azimuthal: int) -> float:
    """Peak of (sqrt(2) r)^l L_m^l(2 r^2) exp(-r^2) over r >= 0 at w = 1."""
    if azimuthal == 0 and radial == 0:
        return 1.0
    r_max = math.sqrt(2.0 * radial + azimuthal + 1.0) + 4.0
    r = np.linspace(0.0, r_max, 16384)
    g = np.abs((math.sqrt(2.0) * r) ** azimuthal
               * eval_genlaguerre(radial, azimuthal, 2.0 * r * r)
               * np.exp(-r * r))
    return float(g.max())


@lru_cache(maxsize=None)
def _lg_l2_norm(radial: int, azimuthal: int) -> float:
    """L2 norm (at w = 1) of the peak-free radial form times cos(l phi).

    integral of u^l L_m^l(u)^2 e^{-u} du = (m+l)!/m!, and the azimuthal
    integral contributes 2 pi for l = 0 and pi otherwise.
    """
    log_ratio = math.lgamma(radial + azimuthal + 1) - math.lgamma(radial + 1)
    angular = 2.0 * math.pi if azimuthal == 0 else math.pi
    return 0.5 * math.sqrt(angular * math.exp(log_ratio))


def transverse_profile(geometry: ModeGeometry, y, z,
                       normalization: str = "peak") -> np.ndarray:
    """Transverse LG profile u(y, z), including the cos(l phi) factor.

    normalization "peak" scales the global maximum to 1 (the convention
    `evaluate` uses); "l2" makes the transverse plane integral of u^2
    equal 1, which is what intensity-weighted mode sums need.
    """
    if geometry.kind != LG_STANDING:
        raise DomainError("transverse_profile applies to LG modes only")
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    w = geometry.waist
    m, l = geometry.radial, geometry.azimuthal
    r2 = (y * y + z * z) / (w * w)
    g = ((math.sqrt(2.0) * np.sqrt(r2)) ** l
         * eval_genlaguerre(m, l, 2.0 * r2) * np.exp(-r2))
    if l > 0:
        phi = np.arctan2(z, y)
        g = g * np.cos(l * phi)
    if normalization == "peak":
        return g / _lg_peak(m, l)
    if normalization == "l2":
        return g / (w * _lg_l2_norm(m, l))
    raise DomainError(f"unknown normalization {normalization!r}")


# ---------------------------------------------------------------------------
# evaluation and axial derivatives

def _axial_coordinate(geometry: ModeGeometry, points: np.ndarray) -> np.ndarray:
    return points[..., _AXES[geometry.axis]]


def _standing(parity: str, phase: np.ndarray) -> np.ndarray:
    return np.cos(phase) if parity == "cos" else np.sin(phase)


def evaluate(geometry: ModeGeometry, points) -> np.ndarray:
    """Complex mode function at 3-vector points, unit peak amplitude."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != 3:
        raise DomainError("points must have a trailing dimension of 3")
    k = geometry.wavenumber
    u = _axial_coordinate(geometry, pts)
    if geometry.kind == PLANE_STANDING:
        return _standing(geometry.parity, k * u).astype(complex)
    if geometry.kind == PLANE_RUNNING:
        return np.exp(1j * geometry.direction * k * u)
    if geometry.kind == GAUSSIAN_RUNNING:
        i, w = _AXES[geometry.axis], geometry.waist
        t = [pts[..., j] for j in range(3) if j != i]
        env = np.exp(-(t[0] ** 2 + t[1] ** 2) / (w * w))
        return env * np.exp(1j * geometry.direction * k * u)
    # LG standing along x with transverse (y, z)
    prof = transverse_profile(geometry, pts[..., 1], pts[..., 2], "peak")
    return (prof * _standing(geometry.parity, k * pts[..., 0])).astype(complex)


def section_value(geometry: ModeGeometry, x, y: float = 0.0,
                  z: float = 0.0) -> np.ndarray:
    """Mode function along the x line through (y, z), vectorized in x."""
    x = np.asarray(x, dtype=float)
    pts = np.stack([x, np.broadcast_to(y, x.shape).astype(float),
                    np.broadcast_to(z, x.shape).astype(float)], axis=-1)
    return evaluate(geometry, pts)


def section_gradient_x(geometry: ModeGeometry, x, y: float = 0.0,
                       z: float = 0.0) -> np.ndarray:
    """Analytic d/dx of the mode function along the same line."""
    x = np.asarray(x, dtype=float)
    k = geometry.wavenumber
    if geometry.kind == PLANE_STANDING:
        if geometry.axis != "x":
            return np.zeros(x.shape, dtype=complex)
        d = -k * np.sin(k * x) if geometry.parity == "cos" else k * np.cos(k * x)
        return d.astype(complex)
    if geometry.kind == PLANE_RUNNING:
        if geometry.axis != "x":
            return np.zeros(x.shape, dtype=complex)
        return 1j * geometry.direction * k * np.exp(
            1j * geometry.direction * k * x)
    if geometry.kind == GAUSSIAN_RUNNING:
        f = section_value(geometry, x, y, z)
        if geometry.axis == "x":
            return 1j * geometry.direction * k * f
        w = geometry.waist
        return f * (-2.0 * x / (w * w))
    prof = transverse_profile(geometry, y, z, "peak")
    if geometry.parity == "cos":
        return (-prof * k * np.sin(k * x)).astype(complex)
    return (prof * k * np.cos(k * x)).astype(complex)


def section_second_x(geometry: ModeGeometry, x, y: float = 0.0,
                     z: float = 0.0) -> np.ndarray:
    """Analytic d^2/dx^2 of the mode function along the same line."""
    x = np.asarray(x, dtype=float)
    k = geometry.wavenumber
    if geometry.kind in (PLANE_STANDING, PLANE_RUNNING, LG_STANDING):
        if geometry.kind != LG_STANDING and geometry.axis != "x":
            return np.zeros(x.shape, dtype=complex)
        return -k * k * section_value(geometry, x, y, z)
    # gaussian_running
    f = section_value(geometry, x, y, z)
    if geometry.axis == "x":
        return -k * k * f
    w = geometry.waist
    return f * (4.0 * x * x / w ** 4 - 2.0 / (w * w))


# ---------------------------------------------------------------------------
# Helmholtz residual probe

def _sample_box(geometry: ModeGeometry, n_points: int) -> np.ndarray:
    k = geometry.wavenumber
    span = 2.0 * math.pi / k
    lo = np.array([0.0, 0.0, 0.0])
    hi = np.array([span, span, span])
    if geometry.kind in (GAUSSIAN_RUNNING, LG_STANDING):
        w = geometry.waist
        lo = np.array([0.0, -w, -w])
        hi = np.array([span, w, w])
    sampler = qmc.Halton(d=3, scramble=False)
    u = sampler.random(n_points)
    return lo + u * (hi - lo)


def _transverse_laplacian_lg(geometry: ModeGeometry, y: np.ndarray,
                             z: np.ndarray) -> np.ndarray:
    h = 1e-4 * geometry.waist

    def prof(yy, zz):
        return transverse_profile(geometry, yy, zz, "peak")

    lap_y = (prof(y + h, z) + prof(y - h, z) - 2.0 * prof(y, z)) / (h * h)
    lap_z = (prof(y, z + h) + prof(y, z - h) - 2.0 * prof(y, z)) / (h * h)
    return lap_y + lap_z


def helmholtz_residual(geometry: ModeGeometry, n_points: int = 128) -> float:
    """Max |laplacian f + k^2 f| over quasi-random sample points.

    Exact plane shapes return zero to rounding; envelope shapes report
    their paraxial defect of order (lambda/waist)^2 relative to k^2
    without asserting anything.
    """
    if n_points < 100:
        raise DomainError("use at least 100 sample points")
    pts = _sample_box(geometry, n_points)
    k = geometry.wavenumber
    f = evaluate(geometry, pts)
    if geometry.kind in (PLANE_STANDING, PLANE_RUNNING):
        lap = -k * k * f
    elif geometry.kind == GAUSSIAN_RUNNING:
        i = _AXES[geometry.axis]
        w = geometry.waist
        t = [pts[..., j] for j in range(3) if j != i]
        r2 = t[0] ** 2 + t[1] ** 2
        lap = (-k * k + 4.0 * r2 / w ** 4 - 4.0 / (w * w)) * f
    else:
        trig = _standing(geometry.parity, k * pts[..., 0])
        lap_t = _transverse_laplacian_lg(geometry, pts[..., 1], pts[..., 2])
        lap = lap_t * trig - k * k * f
    return float(np.max(np.abs(lap + k * k * f)))


# ---------------------------------------------------------------------------
# channels: a mode plus its dissipation, detuning and coupling strength

@dataclass(frozen=True)
class ModeChannel:
    """A resonator mode as the dynamics sees it.

    `kappa` and `delta` are the field decay rate and detuning of this
    mode in whatever rate unit the surrounding computation uses (the
    scaled core sets the pumped-mode kappa to 1).  `coupling` is the
    per-photon light shift U of the particle in this mode, signed.
    """

    geometry: ModeGeometry
    kappa: float
    delta: float
    coupling: float

    def __post_init__(self):
        if not (self.kappa > 0.0 and math.isfinite(self.kappa)):
            raise DomainError("kappa must be positive and finite")
        if not math.isfinite(self.delta):
            raise DomainError("delta must be finite")
        if not math.isfinite(self.coupling):
            raise DomainError("coupling must be finite")

    @property
    def nu(self) -> complex:
        return complex(self.kappa, self.delta)


# ---------------------------------------------------------------------------
# confocal degenerate families

@dataclass(frozen=True)
class ConfocalSetup:
    """Symmetric confocal resonator pumped at one degenerate frequency.

    The mirror spacing and the fundamental longitudinal index fix the
    wavelength through the confocal resonance condition; the fundamental
    waist follows from the geometry unless overridden.
    """

    mirror_distance: float
    fundamental_longitudinal: int
    waist_override: Optional[float] = None

    def __post_init__(self):
        if not self.mirror_distance > 0.0:
            raise DomainError("mirror_distance must be positive")
        if self.fundamental_longitudinal < 1:
            raise DomainError("fundamental_longitudinal must be >= 1")

    @property
    def wavelength(self) -> float:
        n0 = self.fundamental_longitudinal
        return 2.0 * self.mirror_distance / (n0 + 0.5)

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def fundamental_waist(self) -> float:
        if self.waist_override is not None:
            return self.waist_override
        return math.sqrt(self.wavelength * self.mirror_distance / (2.0 * math.pi))


def _lg_wavenumber(setup: ConfocalSetup, n: int, m: int, l: int) -> float:
    return (math.pi / setup.mirror_distance) * (n + (2 * m + l + 1) / 2.0)


def confocal_degenerate_set(setup: ConfocalSetup,
                            order_cap: int) -> list:
    """Enumerate the LG modes degenerate with the fundamental.

    In a confocal resonator, raising the transverse order 2m + l by two
    while lowering the longitudinal index by one leaves the frequency
    unchanged, and only even azimuthal indices survive the symmetric
    two-mirror boundary; so the family is {(n0 - j/2, m, l): 2m + l = j,
    j even, l even, j <= order_cap}.  The standing-wave quadrature at
    the waist follows the longitudinal index (cosine for n even, sine
    for n odd): each step j -> j + 2 trades a longitudinal node for
    transverse structure, shifting the pattern by a quarter wave.
    Modes are ordered by (j, l, m); all members share the fundamental
    wavenumber to rounding.
    """
    if order_cap < 0:
        raise DomainError("order_cap must be non-negative")
    n0 = setup.fundamental_longitudinal
    if n0 < 2 * max(order_cap, 1):
        raise DomainError(
            f"fundamental_longitudinal = {n0} too small for order cap "
            f"{order_cap}; need n0 >= {2 * max(order_cap, 1)}")
    modes = []
    w0 = setup.fundamental_waist
    entries = []
    for j in range(0, order_cap + 1, 2):
        for l in range(0, j + 1, 2):
            if (j - l) % 2 == 0:
                entries.append((j, l, (j - l) // 2))
    entries.sort()
    for j, l, m in entries:
        n = n0 - j // 2
        parity = "cos" if n % 2 == 0 else "sin"
        modes.append(laguerre_gaussian_standing(
            radial=m, azimuthal=l, parity=parity,
            wavenumber=_lg_wavenumber(setup, n, m, l),
            waist=w0, longitudinal=n))
    return modes


def degenerate_mode_count(order_cap: int) -> int:
    """Closed-form size of the family with 2m + l <= order_cap (l even)."""
    if order_cap < 0:
        raise DomainError("order_cap must be non-negative")
    big_j = order_cap // 2
    return (big_j + 1) * (big_j + 2) // 2


def export_mode_set(modes: Sequence[ModeGeometry],
                    destination: Union[str, IO]) -> None:
    """Write (n, m, l, parity, k, effective_waist) records as JSON."""
    records = []
    for g in modes:
        if g.kind != LG_STANDING:
            raise DomainError("mode-set export covers LG families only")
        records.append({
            "n": g.longitudinal,
            "m": g.radial,
            "l": g.azimuthal,
            "parity": g.parity,
            "k": g.wavenumber,
            "effective_waist": g.effective_waist_value,
        })
    payload = json.dumps(records, indent=2, sort_keys=True)
    if hasattr(destination, "write"):
        destination.write(payload)
    else:
        with open(destination, "w", encoding="utf-8") as fh:
            fh.write(payload)


def load_mode_set(source: Union[str, IO]) -> list:
    """Inverse of export_mode_set (waist recovered from effective waist)."""
    if hasattr(source, "read"):
        records = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            records = json.load(fh)
    modes = []
    for r in records:
        order = 2 * r["m"] + r["l"]
        waist = r["effective_waist"] / math.sqrt(order + 1.0)
        modes.append(laguerre_gaussian_standing(
            radial=r["m"], azimuthal=r["l"], parity=r["parity"],
            wavenumber=r["k"], waist=waist, longitudinal=r["n"]))
    return modes
