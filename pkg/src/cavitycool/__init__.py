"""Cavity-assisted cooling of polarizable particles.

Semiclassical phase-space coefficients (conservative and dissipative
forces, momentum diffusion) for particles coupled to driven optical
resonators, with single-mode standing-wave, multimode confocal, and
few-particle variants, plus a stochastic integrator and a small CLI.
Internally all dynamics are expressed in scaled units: lengths in 1/k,
times in 1/kappa, momenta in hbar*k and energies in hbar*kappa.
"""

__version__ = "0.1.0"

from . import constants, units, params, modes, memory, coefficients
from . import confocal, langevin, config, report

__all__ = [
    "constants",
    "units",
    "params",
    "modes",
    "memory",
    "coefficients",
    "confocal",
    "langevin",
    "config",
    "report",
    "__version__",
]
