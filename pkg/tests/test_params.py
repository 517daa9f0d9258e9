"""Species catalogue, derived rates, optics helpers, and validity checks."""

from __future__ import annotations

import math

import numpy as np
import pytest

from cavitycool.constants import CODATA2018
from cavitycool.params import (
    PumpConfig,
    ReferenceValue,
    absorption_cross_section,
    catalogue_by_label,
    coupling_constant,
    derive_rates,
    derived_table_mhz,
    format_catalogue,
    load_table_reference,
    parse_catalogue,
    photon_rate,
    polarizability_volume,
    pump_photon_number,
    rayleigh_cross_section,
    rayleigh_cross_section_from_chi,
    recoil_frequency,
    save_catalogue,
    sphere_polarizability,
    validity_report,
)
from cavitycool.units import (
    FREQUENCY,
    LENGTH,
    POLARIZABILITY,
    POWER,
    DomainError,
    SingularityError,
    quantity,
)

LAMBDA = quantity(1.5e-6, LENGTH)


def test_polarizability_volume_converts_cubic_angstrom():
    chi = polarizability_volume(1.0)
    assert chi.dims == POLARIZABILITY
    # 1 A^3 of Clausius-Mossotti volume carries a factor 4 pi eps0.
    assert chi.value == pytest.approx(4 * math.pi * CODATA2018.eps0 * 1e-30, rel=1e-12)


def test_catalogue_contains_the_six_reference_species(catalogue, by_label):
    assert len(catalogue) == 6
    assert set(by_label) == {"Li", "C60", "He1000", "Li1000", "SiO2_1000", "Au1000"}


def test_catalogue_row_round_trip(catalogue):
    for species in catalogue:
        row = species.catalogue_row()
        clone = type(species).from_catalogue_row(**row)
        assert clone.label == species.label
        assert clone.mass.value == pytest.approx(species.mass.value, rel=1e-12)
        assert clone.chi.value == pytest.approx(species.chi.value, rel=1e-12)


def test_catalogue_text_round_trip(catalogue, tmp_path):
    path = tmp_path / "species.txt"
    save_catalogue(catalogue, path, header="round trip")
    text = path.read_text()
    reparsed = parse_catalogue(text)
    assert [s.label for s in reparsed] == [s.label for s in catalogue]
    assert format_catalogue(reparsed) == format_catalogue(catalogue)


def test_parse_catalogue_rejects_malformed_blocks():
    with pytest.raises(DomainError, match="missing keys"):
        parse_catalogue("label = X\nmass_amu = 1\n")
    with pytest.raises(DomainError, match="is not key = value"):
        parse_catalogue("label X\n")
    with pytest.raises(DomainError, match="unknown key"):
        parse_catalogue("label = X\nmass_amu = 1\nchi_A3 = 1\n"
                        "sigma_abs_A2 = 0\nsigma_sca_A2 = 0\ncolour = blue\n")
    with pytest.raises(DomainError, match="duplicate key"):
        parse_catalogue("label = X\nlabel = Y\n")
    block = ("label = X\nmass_amu = 1\nchi_A3 = 1\n"
             "sigma_abs_A2 = 0\nsigma_sca_A2 = 0\n")
    with pytest.raises(DomainError, match="duplicate labels"):
        parse_catalogue(block + "\n" + block)


def test_recoil_frequency_scales_as_inverse_mass_and_wavelength_squared(by_label):
    m = by_label["Li"].mass
    base = recoil_frequency(m, LAMBDA)
    assert base.dims == FREQUENCY
    assert recoil_frequency(2.0 * m, LAMBDA).value == pytest.approx(base.value / 2, rel=1e-14)
    half_lambda = quantity(LAMBDA.value / 2, LENGTH)
    assert recoil_frequency(m, half_lambda).value == pytest.approx(4 * base.value, rel=1e-14)


def test_recoil_frequency_matches_hbar_k_squared_over_2m(by_label):
    m = by_label["Li"].mass.value
    k = 2 * math.pi / LAMBDA.value
    expected = CODATA2018.hbar * k**2 / (2 * m)
    assert recoil_frequency(by_label["Li"].mass, LAMBDA).value == pytest.approx(expected, rel=1e-12)


def test_coupling_constant_is_negative_for_ordinary_dielectrics(catalogue, cavity):
    for species in catalogue:
        u0 = coupling_constant(species.chi, cavity.wavelength, cavity.mode_volume)
        assert u0.dims == FREQUENCY
        assert u0.value < 0


def test_photon_rate_scales_with_cross_section_and_mode_volume(by_label, cavity):
    sigma = by_label["Li1000"].sigma_abs
    base = photon_rate(sigma, cavity.mode_volume)
    assert base.dims == FREQUENCY
    assert photon_rate(3.0 * sigma, cavity.mode_volume).value == pytest.approx(
        3 * base.value, rel=1e-14)
    doubled = quantity(2 * cavity.mode_volume.value, cavity.mode_volume.dims)
    assert photon_rate(sigma, doubled).value == pytest.approx(base.value / 2, rel=1e-14)


def test_sphere_polarizability_clausius_mossotti_value():
    r = quantity(50e-9, LENGTH)
    alpha = sphere_polarizability(r, 2.0)
    expected = 4 * math.pi * CODATA2018.eps0 * (50e-9) ** 3 * (1.0 / 4.0)
    assert alpha.real == pytest.approx(expected, rel=1e-12)
    assert alpha.imag == 0.0


def test_sphere_polarizability_pole_raises():
    with pytest.raises(SingularityError):
        sphere_polarizability(quantity(50e-9, LENGTH), -2.0)


def test_absorption_cross_section_vanishes_for_lossless_sphere():
    r = quantity(50e-9, LENGTH)
    assert absorption_cross_section(r, 2.0, LAMBDA).value == 0.0
    assert absorption_cross_section(r, 2.0 + 0.1j, LAMBDA).value > 0.0
    with pytest.raises(DomainError):
        absorption_cross_section(r, 2.0 - 0.1j, LAMBDA)


def test_rayleigh_cross_section_r6_scaling_is_exact():
    r1 = quantity(50e-9, LENGTH)
    r2 = quantity(100e-9, LENGTH)
    s1 = rayleigh_cross_section(r1, 2.0, LAMBDA)
    s2 = rayleigh_cross_section(r2, 2.0, LAMBDA)
    assert s2.value / s1.value == pytest.approx(64.0, rel=1e-14)


def test_large_sphere_warns_about_dipole_approximation():
    with pytest.warns(UserWarning, match="size parameter"):
        rayleigh_cross_section(quantity(2e-7, LENGTH), 2.0, LAMBDA)


def test_catalogue_scattering_entry_consistent_with_its_polarizability(by_label):
    li = by_label["Li"]
    recomputed = rayleigh_cross_section_from_chi(li.chi, LAMBDA)
    assert recomputed.value == pytest.approx(li.sigma_sca.value, rel=1e-5)


def test_pump_photon_number_quarter_watt_anchor(cavity):
    n = pump_photon_number(quantity(0.25, POWER), cavity.linewidth, cavity.wavelength)
    assert n == pytest.approx(943896856992.6018, rel=1e-12)
    assert n == pytest.approx(9.4e11, rel=0.01)


def test_pump_config_requires_exactly_one_strength(cavity):
    det = quantity(5.7735e5, FREQUENCY)
    with pytest.raises(DomainError, match="exactly one"):
        PumpConfig(detuning=det, power=quantity(0.25, POWER), photon_number=1e12)
    with pytest.raises(DomainError, match="exactly one"):
        PumpConfig(detuning=det)
    via_power = PumpConfig(detuning=det, power=quantity(0.25, POWER))
    assert via_power.resolved_photon_number(cavity) == pytest.approx(
        943896856992.6018, rel=1e-12)
    via_number = PumpConfig(detuning=det, photon_number=1e12)
    assert via_number.resolved_photon_number(cavity) == 1e12


def test_validity_report_flags_strong_single_particle_drive(by_label, cavity):
    pump = PumpConfig(detuning=quantity(5.7735e5, FREQUENCY), photon_number=1e12)
    rep = validity_report(by_label["Au1000"], pump, cavity)
    levels = {c.name: c.level for c in rep.checks}
    assert levels["U0_over_kappa"] == "ok"
    assert levels["U0_alpha_over_kappa"] == "warn"
    assert rep.passed and not rep.clean
    values = {c.name: c.value for c in rep.checks}
    assert values["U0_alpha_over_kappa"] == pytest.approx(0.33, rel=1e-2)


def test_validity_report_fails_on_collective_pull(by_label, cavity):
    pump = PumpConfig(detuning=quantity(5.7735e5, FREQUENCY), photon_number=1e12)
    rep = validity_report(by_label["C60"], pump, cavity, particle_count=1000)
    levels = {c.name: c.level for c in rep.checks}
    assert levels["collective_pull"] == "fail"
    assert not rep.passed


def test_validity_report_zero_doppler_shift_fails_shearing(by_label, cavity):
    pump = PumpConfig(detuning=quantity(5.7735e5, FREQUENCY), photon_number=1e12)
    rep = validity_report(by_label["Li"], pump, cavity,
                          doppler_shift=quantity(0.0, FREQUENCY))
    shear = {c.name: c for c in rep.checks}["phase_space_shearing"]
    assert math.isinf(shear.value)
    assert shear.level == "fail"
    assert not rep.passed


def test_validity_report_lines_render_levels(by_label, cavity):
    pump = PumpConfig(detuning=quantity(5.7735e5, FREQUENCY), photon_number=1e12)
    rep = validity_report(by_label["Au1000"], pump, cavity)
    lines = rep.lines()
    assert any(line.startswith("[WARN]") for line in lines)
    assert any("U0_over_kappa" in line for line in lines)


def test_reference_value_tolerance_classes():
    rounded = ReferenceValue(2.0, check="rounded")
    assert rounded.within(2.1, 0.10)
    assert not rounded.within(2.5, 0.10)
    loose = ReferenceValue(1.0, check="order_of_magnitude")
    assert loose.within(5.0, 0.10)
    assert loose.within(0.2, 0.10)
    assert not loose.within(20.0, 0.10)
    skipped = ReferenceValue(1.0, check="skip")
    assert skipped.within(50.0, 0.10)


def test_reference_table_marks_known_special_cells():
    ref = load_table_reference()
    assert ref["SiO2_1000"]["omega_r"].check == "skip"
    assert ref["C60"]["two_gamma_abs"].check == "order_of_magnitude"
    ordinary = ref["Li"]["omega_r"]
    assert ordinary.check == "rounded"


def test_derived_rates_monotone_in_catalogue_mass(catalogue, cavity):
    rng = np.random.default_rng(7)
    for _ in range(20):
        a, b = rng.choice(len(catalogue), size=2, replace=False)
        sa, sb = catalogue[a], catalogue[b]
        ra, rb = derive_rates(sa, cavity), derive_rates(sb, cavity)
        if sa.mass.value < sb.mass.value:
            assert ra.omega_r.value > rb.omega_r.value
        else:
            assert ra.omega_r.value < rb.omega_r.value


def test_derived_table_has_all_columns_in_megahertz(by_label, cavity):
    row = derived_table_mhz(by_label["Li1000"], cavity)
    assert set(row) == {"omega_r", "u0", "two_gamma_abs", "two_gamma_sca"}
    assert row["omega_r"] == pytest.approx(7.959325143494033e-05, rel=1e-12)
    assert row["u0"] == pytest.approx(4.34041070102906e-07, rel=1e-12)
    assert all(v >= 0 for v in row.values())
