"""Physical constants frozen to CODATA 2018 values.

The values are spelled out as literals rather than imported from
scipy.constants so that outputs stay bit-reproducible across scipy
releases (scipy tracks newer CODATA adjustments).  A unit test
cross-checks each entry against scipy's table at loose tolerance to
guard against typos.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 constants used by the derived-rate formulas."""

    hbar: float = 1.054571817e-34        # reduced Planck constant [J s], exact (2019 SI)
    c: float = 299792458.0               # speed of light [m/s], exact
    eps0: float = 8.8541878128e-12       # vacuum permittivity [F/m]
    k_B: float = 1.380649e-23            # Boltzmann constant [J/K], exact
    amu: float = 1.66053906660e-27       # atomic mass unit [kg]

    def __post_init__(self) -> None:
        for name in ("hbar", "c", "eps0", "k_B", "amu"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"constant {name} must be positive")


CODATA2018 = PhysicalConstants()

HBAR = CODATA2018.hbar
C_LIGHT = CODATA2018.c
EPSILON_0 = CODATA2018.eps0
K_BOLTZMANN = CODATA2018.k_B
ATOMIC_MASS = CODATA2018.amu
