"""Particle, cavity and pump parameters with SI units attached.

Converts laboratory inputs (mass, polarizability volume, cross
sections, mode volume, wavelength, pump power) into the rates the
dynamics is built from: recoil frequency, optical potential depth per
photon, and photon absorption/scattering rates.  Also hosts the
species catalogue serialization and the dimensionless validity report
used to decide whether the weak-coupling coefficient expansion applies.
"""

from __future__ import annotations

import cmath
import math
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional, Sequence

from .constants import CODATA2018, PhysicalConstants
from .units import (AREA, DIMENSIONLESS, FREQUENCY, LENGTH, MASS,
                    POLARIZABILITY, POWER, VOLUME, DimensionError,
                    DomainError, Quantity, SingularityError,
                    expect, expect_nonnegative, expect_positive)

_C = CODATA2018


def polarizability_volume(chi_cubic_angstrom: float) -> Quantity:
    """SI polarizability from a polarizability volume in cubic angstrom.

    The catalogue lists chi/(4 pi eps0) in A^3; multiplying back by
    4 pi eps0 gives the SI value in C m^2/V.
    """
    if chi_cubic_angstrom < 0.0:
        raise DomainError("polarizability volume must be non-negative")
    si = 4.0 * math.pi * _C.eps0 * chi_cubic_angstrom * 1e-30
    return Quantity(si, POLARIZABILITY)


@dataclass(frozen=True)
class ParticleSpecies:
    """One row of the species catalogue, in SI units."""

    label: str
    mass: Quantity                     # [kg]
    chi: Quantity                      # SI polarizability [C m^2/V]
    sigma_abs: Quantity                # absorption cross section [m^2]
    sigma_sca: Quantity                # scattering cross section [m^2]

    def __post_init__(self):
        if not self.label:
            raise DomainError("species label must be non-empty")
        expect_positive(self.mass, MASS, "mass")
        expect_nonnegative(self.chi, POLARIZABILITY, "chi")
        expect_nonnegative(self.sigma_abs, AREA, "sigma_abs")
        expect_nonnegative(self.sigma_sca, AREA, "sigma_sca")

    @property
    def chi_volume(self) -> Quantity:
        """Polarizability volume chi/(4 pi eps0) as [m^3]."""
        return Quantity(self.chi.value / (4.0 * math.pi * _C.eps0), VOLUME)

    @classmethod
    def from_catalogue_row(cls, label: str, mass_amu: float, chi_A3: float,
                           sigma_abs_A2: float, sigma_sca_A2: float
                           ) -> "ParticleSpecies":
        return cls(
            label=label,
            mass=Quantity(mass_amu * _C.amu, MASS),
            chi=polarizability_volume(chi_A3),
            sigma_abs=Quantity(sigma_abs_A2 * 1e-20, AREA),
            sigma_sca=Quantity(sigma_sca_A2 * 1e-20, AREA),
        )

    def catalogue_row(self) -> dict:
        return {
            "label": self.label,
            "mass_amu": self.mass.value / _C.amu,
            "chi_A3": self.chi_volume.value / 1e-30,
            "sigma_abs_A2": self.sigma_abs.value / 1e-20,
            "sigma_sca_A2": self.sigma_sca.value / 1e-20,
        }


@dataclass(frozen=True)
class CavityGeometry:
    """Resonator parameters entering the derived rates."""

    mode_volume: Quantity              # [m^3]
    wavelength: Quantity               # [m]
    linewidth: Quantity                # field decay rate kappa [rad/s]

    def __post_init__(self):
        expect_positive(self.mode_volume, VOLUME, "mode_volume")
        expect_positive(self.wavelength, LENGTH, "wavelength")
        expect_positive(self.linewidth, FREQUENCY, "linewidth")

    @property
    def wavenumber(self) -> Quantity:
        return Quantity(2.0 * math.pi / self.wavelength.value, LENGTH ** -1)

    @property
    def optical_frequency(self) -> Quantity:
        return Quantity(2.0 * math.pi * _C.c / self.wavelength.value, FREQUENCY)


def recoil_frequency(mass: Quantity, wavelength: Quantity) -> Quantity:
    """omega_r = hbar k^2 / 2m for wavenumber k = 2 pi / wavelength."""
    m = expect_positive(mass, MASS, "mass")
    lam = expect_positive(wavelength, LENGTH, "wavelength")
    k = 2.0 * math.pi / lam
    return Quantity(_C.hbar * k * k / (2.0 * m), FREQUENCY)


def coupling_constant(chi: Quantity, wavelength: Quantity,
                      mode_volume: Quantity) -> Quantity:
    """Per-photon light shift U0 = -omega chi / (2 eps0 V), signed.

    Positive polarizability attracts the particle to intensity maxima,
    so U0 comes out negative.
    """
    chi_si = expect_nonnegative(chi, POLARIZABILITY, "chi")
    lam = expect_positive(wavelength, LENGTH, "wavelength")
    vol = expect_positive(mode_volume, VOLUME, "mode_volume")
    omega = 2.0 * math.pi * _C.c / lam
    return Quantity(-omega * chi_si / (2.0 * _C.eps0 * vol), FREQUENCY)


def photon_rate(cross_section: Quantity, mode_volume: Quantity) -> Quantity:
    """Photon loss rate per intracavity photon, gamma = c sigma / V."""
    sig = expect_nonnegative(cross_section, AREA, "cross_section")
    vol = expect_positive(mode_volume, VOLUME, "mode_volume")
    return Quantity(_C.c * sig / vol, FREQUENCY)


def sphere_polarizability(radius: Quantity, epsilon: complex) -> complex:
    """Clausius-Mossotti polarizability of a small dielectric sphere.

    Returns the complex SI polarizability 4 pi eps0 R^3 (eps-1)/(eps+2);
    the real part feeds ParticleSpecies.chi, the imaginary part encodes
    absorption.
    """
    r = expect_positive(radius, LENGTH, "radius")
    eps = complex(epsilon)
    if abs(eps + 2.0) < 1e-12:
        raise SingularityError("epsilon = -2 sits on the Clausius-Mossotti pole")
    return 4.0 * math.pi * _C.eps0 * r ** 3 * (eps - 1.0) / (eps + 2.0)


def _size_parameter(radius: Quantity, wavelength: Quantity) -> tuple:
    r = expect_positive(radius, LENGTH, "radius")
    lam = expect_positive(wavelength, LENGTH, "wavelength")
    x = 2.0 * math.pi * r / lam
    if x > 0.5:
        warnings.warn(
            f"size parameter 2 pi R/lambda = {x:.3g} is not small; "
            "the dipole cross-section formulas lose accuracy", stacklevel=3)
    return r, x


def absorption_cross_section(radius: Quantity, epsilon: complex,
                             wavelength: Quantity) -> Quantity:
    """Dipole absorption cross section of a small sphere."""
    r, x = _size_parameter(radius, wavelength)
    eps = complex(epsilon)
    if abs(eps + 2.0) < 1e-12:
        raise SingularityError("epsilon = -2 sits on the Clausius-Mossotti pole")
    val = 4.0 * math.pi * x * r * r * ((eps - 1.0) / (eps + 2.0)).imag
    if val < 0.0:
        raise DomainError("absorption cross section came out negative; "
                          "epsilon must have non-negative imaginary part")
    return Quantity(val, AREA)


def rayleigh_cross_section(radius: Quantity, epsilon: complex,
                           wavelength: Quantity) -> Quantity:
    """Dipole (Rayleigh) scattering cross section of a small sphere."""
    r, x = _size_parameter(radius, wavelength)
    eps = complex(epsilon)
    if abs(eps + 2.0) < 1e-12:
        raise SingularityError("epsilon = -2 sits on the Clausius-Mossotti pole")
    val = (8.0 * math.pi / 3.0) * x ** 4 * r * r * abs((eps - 1.0) / (eps + 2.0)) ** 2
    return Quantity(val, AREA)


def rayleigh_cross_section_from_chi(chi: Quantity,
                                    wavelength: Quantity) -> Quantity:
    """Rayleigh cross section (8 pi/3) k^4 (chi/4 pi eps0)^2 from chi."""
    chi_si = expect_nonnegative(chi, POLARIZABILITY, "chi")
    lam = expect_positive(wavelength, LENGTH, "wavelength")
    k = 2.0 * math.pi / lam
    chi_vol = chi_si / (4.0 * math.pi * _C.eps0)
    return Quantity((8.0 * math.pi / 3.0) * k ** 4 * chi_vol ** 2, AREA)


def pump_photon_number(power: Quantity, linewidth: Quantity,
                       wavelength: Quantity) -> float:
    """Steady intracavity photon number |alpha|^2 = P / (2 kappa hbar omega).

    Resonant drive of a one-sided cavity: input power P divided by the
    energy loss rate per photon.
    """
    p = expect_positive(power, POWER, "power")
    kap = expect_positive(linewidth, FREQUENCY, "linewidth")
    lam = expect_positive(wavelength, LENGTH, "wavelength")
    omega = 2.0 * math.pi * _C.c / lam
    return p / (2.0 * kap * _C.hbar * omega)


@dataclass(frozen=True)
class DerivedRates:
    """Rates obtained from a species in a given cavity."""

    species: ParticleSpecies
    cavity: CavityGeometry
    omega_r: Quantity                  # recoil frequency [rad/s]
    coupling_u0: Quantity              # signed light shift per photon [rad/s]
    gamma_abs: Quantity                # absorption rate per photon [rad/s]
    gamma_sca: Quantity                # scattering rate per photon [rad/s]


def derive_rates(species: ParticleSpecies, cavity: CavityGeometry) -> DerivedRates:
    return DerivedRates(
        species=species,
        cavity=cavity,
        omega_r=recoil_frequency(species.mass, cavity.wavelength),
        coupling_u0=coupling_constant(species.chi, cavity.wavelength,
                                      cavity.mode_volume),
        gamma_abs=photon_rate(species.sigma_abs, cavity.mode_volume),
        gamma_sca=photon_rate(species.sigma_sca, cavity.mode_volume),
    )


@dataclass(frozen=True)
class PumpConfig:
    """Drive strength and detuning of the pumped mode.

    Exactly one of `power` and `photon_number` must be supplied; the
    other is derived.  `detuning` is Delta = omega_cavity - omega_pump,
    positive for a red-detuned pump.
    """

    detuning: Quantity                                # [rad/s]
    power: Optional[Quantity] = None                  # [W]
    photon_number: Optional[float] = None             # |alpha|^2
    pumped_mode: str = "fundamental"

    def __post_init__(self):
        if (self.power is None) == (self.photon_number is None):
            raise DomainError(
                "specify exactly one of power and photon_number")
        expect(self.detuning, FREQUENCY, "detuning")
        if self.power is not None:
            expect_positive(self.power, POWER, "power")
        if self.photon_number is not None and not (self.photon_number > 0.0):
            raise DomainError("photon_number must be positive")

    def resolved_photon_number(self, cavity: CavityGeometry) -> float:
        if self.photon_number is not None:
            return float(self.photon_number)
        return pump_photon_number(self.power, cavity.linewidth,
                                  cavity.wavelength)


# ---------------------------------------------------------------------------
# validity report

WARN_RATIO = 0.3
FAIL_RATIO = 1.0


@dataclass(frozen=True)
class RatioCheck:
    name: str
    value: float
    level: str                         # "ok" | "warn" | "fail"
    description: str = ""


def _flag(value: float) -> str:
    if not math.isfinite(value) or value >= FAIL_RATIO:
        return "fail"
    if value >= WARN_RATIO:
        return "warn"
    return "ok"


@dataclass(frozen=True)
class ValidityReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.level != "fail" for c in self.checks)

    @property
    def clean(self) -> bool:
        return all(c.level == "ok" for c in self.checks)

    def lines(self) -> list:
        out = []
        for c in self.checks:
            out.append(f"[{c.level.upper():4s}] {c.name} = {c.value:.3g}"
                       + (f"  ({c.description})" if c.description else ""))
        return out


def validity_report(species: ParticleSpecies, pump: PumpConfig,
                    cavity: CavityGeometry, particle_count: int = 1,
                    doppler_shift: Optional[Quantity] = None) -> ValidityReport:
    """Dimensionless ratios that must stay small for the expansion.

    Checks the per-photon shift |U0|/kappa, the potential-to-linewidth
    ratio |U0 alpha|/kappa, its collective N-particle version, and,
    when a representative Doppler shift k*v is supplied, the phase-space
    shearing ratio 4 |omega_r alpha / (k v)| |U0 alpha / kappa|.
    Each ratio is flagged ok below 0.3, warn below 1, fail above.
    """
    if particle_count < 1:
        raise DomainError("particle_count must be at least 1")
    rates = derive_rates(species, cavity)
    kappa = cavity.linewidth.value
    alpha2 = pump.resolved_photon_number(cavity)
    alpha = math.sqrt(alpha2)
    u0 = abs(rates.coupling_u0.value)

    checks = [
        RatioCheck("U0_over_kappa", u0 / kappa, _flag(u0 / kappa),
                   "per-photon light shift vs linewidth"),
        RatioCheck("U0_alpha_over_kappa", u0 * alpha / kappa,
                   _flag(u0 * alpha / kappa),
                   "pumped-field frequency pull vs linewidth"),
        RatioCheck("collective_pull", particle_count * u0 * alpha / kappa,
                   _flag(particle_count * u0 * alpha / kappa),
                   f"N = {particle_count} particles pulling together"),
    ]
    if doppler_shift is not None:
        kv = abs(expect(doppler_shift, FREQUENCY, "doppler_shift"))
        if kv == 0.0:
            shear = math.inf
        else:
            shear = 4.0 * (rates.omega_r.value * alpha / kv) * (u0 * alpha / kappa)
        checks.append(RatioCheck(
            "phase_space_shearing", shear, _flag(shear),
            "memory-kernel straight-path approximation"))
    return ValidityReport(checks=tuple(checks))


# ---------------------------------------------------------------------------
# species catalogue serialization

_CATALOGUE_KEYS = ("label", "mass_amu", "chi_A3", "sigma_abs_A2", "sigma_sca_A2")


def parse_catalogue(text: str) -> list:
    """Parse the line-oriented key-value species catalogue format.

    Species are blocks of `key = value` lines separated by blank lines;
    `#` starts a comment.  Every block must supply exactly the keys
    label, mass_amu, chi_A3, sigma_abs_A2, sigma_sca_A2.
    """
    species = []
    block: dict = {}

    def close_block():
        if not block:
            return
        missing = [k for k in _CATALOGUE_KEYS if k not in block]
        if missing:
            raise DomainError(
                f"catalogue block {block.get('label', '?')!r} missing keys: "
                + ", ".join(missing))
        species.append(ParticleSpecies.from_catalogue_row(
            label=block["label"],
            mass_amu=float(block["mass_amu"]),
            chi_A3=float(block["chi_A3"]),
            sigma_abs_A2=float(block["sigma_abs_A2"]),
            sigma_sca_A2=float(block["sigma_sca_A2"]),
        ))
        block.clear()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            close_block()
            continue
        if "=" not in line:
            raise DomainError(f"catalogue line {lineno} is not key = value: {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CATALOGUE_KEYS:
            raise DomainError(f"catalogue line {lineno}: unknown key {key!r}")
        if key in block:
            raise DomainError(f"catalogue line {lineno}: duplicate key {key!r}")
        block[key] = value
    close_block()

    labels = [s.label for s in species]
    if len(set(labels)) != len(labels):
        raise DomainError("catalogue contains duplicate labels")
    return species


def format_catalogue(species: Iterable[ParticleSpecies],
                     header: str = "") -> str:
    lines = []
    if header:
        lines.extend("# " + h for h in header.splitlines())
        lines.append("")
    for sp in species:
        row = sp.catalogue_row()
        lines.append(f"label = {row['label']}")
        lines.append(f"mass_amu = {row['mass_amu']:.10g}")
        lines.append(f"chi_A3 = {row['chi_A3']:.10g}")
        lines.append(f"sigma_abs_A2 = {row['sigma_abs_A2']:.10g}")
        lines.append(f"sigma_sca_A2 = {row['sigma_sca_A2']:.10g}")
        lines.append("")
    return "\n".join(lines)


def load_catalogue(path=None) -> list:
    """Load a species catalogue; defaults to the shipped six-species file."""
    if path is None:
        text = resources.files("cavitycool.data").joinpath(
            "species_catalogue.txt").read_text(encoding="utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_catalogue(text)


def save_catalogue(species: Sequence[ParticleSpecies], path,
                   header: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_catalogue(species, header=header))


def catalogue_by_label(species: Sequence[ParticleSpecies]) -> dict:
    return {s.label: s for s in species}


def reference_cavity() -> CavityGeometry:
    """The cavity every catalogue rate is quoted for.

    Mode volume 0.1 mm^3, wavelength 1.5 um, linewidth 1 MHz: a
    centimeter-scale resonator with a moderately narrow line.
    """
    return CavityGeometry(
        mode_volume=Quantity(1e-10, VOLUME),
        wavelength=Quantity(1.5e-6, LENGTH),
        linewidth=Quantity(1e6, FREQUENCY),
    )


# ---------------------------------------------------------------------------
# derived-table reference fixture

TABLE_COLUMNS = ("omega_r", "u0", "two_gamma_abs", "two_gamma_sca")
_CHECK_CLASSES = ("rounded", "order_of_magnitude", "skip")


@dataclass(frozen=True)
class ReferenceValue:
    """One quoted table cell (MHz) with its comparison class."""

    value: float
    check: str = "rounded"

    def __post_init__(self):
        if self.check not in _CHECK_CLASSES:
            raise DomainError(f"unknown check class {self.check!r}")
        if self.value < 0.0 or not math.isfinite(self.value):
            raise DomainError("reference values must be finite and >= 0")

    def within(self, computed_mhz: float, tolerance: float) -> bool:
        """Does a computed value agree at this cell's precision class?

        `tolerance` applies to the rounded class; tilde cells pass
        within a factor of 10; skip cells always pass the gate (they
        are reported, not gated).
        """
        if self.check == "skip":
            return True
        if self.value == 0.0:
            return computed_mhz == 0.0
        if computed_mhz <= 0.0:
            return False
        if self.check == "order_of_magnitude":
            ratio = computed_mhz / self.value
            return 0.1 <= ratio <= 10.0
        return abs(computed_mhz - self.value) <= tolerance * self.value


def parse_table_reference(text: str) -> "OrderedDict[str, dict]":
    """Blocks of label / <column>_mhz / optional <column>_check lines."""
    rows: "OrderedDict[str, dict]" = OrderedDict()
    block: dict = {}

    def close_block():
        if not block:
            return
        label = block.pop("label", None)
        if label is None:
            raise DomainError("table reference block without a label")
        if label in rows:
            raise DomainError(f"duplicate table reference label {label!r}")
        cells = {}
        for col in TABLE_COLUMNS:
            key = col + "_mhz"
            if key not in block:
                raise DomainError(f"table reference {label!r} missing {key}")
            cells[col] = ReferenceValue(
                value=float(block.pop(key)),
                check=block.pop(col + "_check", "rounded"))
        if block:
            raise DomainError(f"table reference {label!r} has unknown keys: "
                              + ", ".join(sorted(block)))
        rows[label] = cells
        block.clear()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            close_block()
            continue
        if "=" not in line:
            raise DomainError(
                f"table reference line {lineno} is not key = value: {raw!r}")
        key, _, value = line.partition("=")
        block[key.strip()] = value.strip()
    close_block()
    return rows


def load_table_reference(path=None) -> "OrderedDict[str, dict]":
    """Quoted table values; defaults to the shipped fixture."""
    if path is None:
        text = resources.files("cavitycool.data").joinpath(
            "table_reference.txt").read_text(encoding="utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_table_reference(text)


def derived_table_mhz(species: ParticleSpecies,
                      cavity: CavityGeometry) -> dict:
    """The four derived table columns for one species, in MHz."""
    rates = derive_rates(species, cavity)
    return {
        "omega_r": rates.omega_r.value / 1e6,
        "u0": abs(rates.coupling_u0.value) / 1e6,
        "two_gamma_abs": 2.0 * rates.gamma_abs.value / 1e6,
        "two_gamma_sca": 2.0 * rates.gamma_sca.value / 1e6,
    }
