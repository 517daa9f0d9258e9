"""Experiment configuration: flat key = value files with one section per
command, every key carrying a baked-in default so each study runs with
no arguments at all.

The grammar is the stdlib configparser dialect (``[section]`` headers,
``key = value`` lines, ``#`` comments).  A user file only needs the
keys it overrides; unknown sections or keys are rejected so typos
cannot silently fall back to defaults.
"""

from __future__ import annotations

import configparser
import io
import math
from typing import Dict, List, Optional

from .units import ConfigError

OPTIMAL_DETUNING = repr(1.0 / math.sqrt(3.0))

DEFAULTS: Dict[str, Dict[str, str]] = {
    "table1": {
        # reference cavity of the parameter table
        "mode_volume_mm3": "0.1",
        "wavelength_um": "1.5",
        "tolerance": "0.10",
    },
    "forcescan": {
        # velocity dependence of the position-averaged force
        "detunings_kappa": OPTIMAL_DETUNING + ", 2.0, 5.0",
        "velocity_max_kappa": "10.0",
        "velocity_points": "401",
        "drive": "0.1",
    },
    "diffscan": {
        # position-resolved momentum diffusion at several velocities
        "velocities_kappa": "0.0, 1.0, 2.0, 5.0",
        "delta_kappa": OPTIMAL_DETUNING,
        "drive": "0.1",
        "x_points": "257",
    },
    "confocal": {
        # degenerate-family friction curves and the saturation sweep
        "mirror_distance_mm": "10.0",
        "fundamental_index": "20000",
        "curve_caps": "0, 8, 18",
        "sweep_cap": "54",
        "delta_kappa": OPTIMAL_DETUNING,
        "drive": "0.1",
        "recoil_kappa": "1e-3",
        "grid_points": "128",
        "x_points": "257",
        "convergence_check": "true",
    },
    "cool": {
        # stochastic cooling run toward the stationary kinetic energy
        "delta_kappa": OPTIMAL_DETUNING,
        "drive": "0.1",
        "recoil_kappa": "1e-3",
        "pull_kappa": "-0.1",
        "include_second": "true",
        "trajectories": "1000",
        "dt": "0.05",
        "t_end": "60000.0",
        "sample_every": "800",
        "seed": "20260814",
        "init_x": "uniform",
        "init_p_mean": "0.0",
        # 0.6 of the predicted stationary spread: relaxation stays visible
        "init_p_sigma": "14.4",
        "clamp_policy": "project_psd",
        "noise": "two_point",
        "threads": "1",
    },
    "budget": {
        # extra-diffusion-to-cavity-diffusion ratios per species
        "species": "all",
        "geometry": "axial",
        "waist_wavelengths": "100.0",
        "mode_volume_mm3": "0.1",
        "wavelength_um": "1.5",
    },
    "validate": {
        # weak-coupling and related validity checks
        "species": "Li1000",
        "photon_number": "1e12",
        "detuning_kappa": OPTIMAL_DETUNING,
        "particle_count": "1",
        "kappa_per_s": "1e6",
        "mode_volume_mm3": "0.1",
        "wavelength_um": "1.5",
    },
}


def _fresh_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_dict(DEFAULTS)
    return parser


def load_config(path: Optional[str] = None) -> configparser.ConfigParser:
    """Defaults overlaid with the user's file (if given).

    Raises ConfigError for unreadable files, unknown sections, or
    unknown keys.
    """
    parser = _fresh_parser()
    if path is None:
        return parser
    probe = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            probe.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from exc
    for section in probe.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in probe.items(section):
            if key not in DEFAULTS[section]:
                raise ConfigError(
                    f"unknown key {key!r} in section [{section}]")
            parser.set(section, key, value)
    return parser


def render_defaults(section: Optional[str] = None) -> str:
    """Default configuration as text, one section or all of them."""
    parser = configparser.ConfigParser(interpolation=None)
    if section is None:
        parser.read_dict(DEFAULTS)
    else:
        if section not in DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        parser.read_dict({section: DEFAULTS[section]})
    out = io.StringIO()
    parser.write(out)
    return out.getvalue().rstrip() + "\n"


def _raw(cfg: configparser.ConfigParser, section: str, key: str) -> str:
    try:
        return cfg.get(section, key)
    except configparser.Error as exc:
        raise ConfigError(f"missing [{section}] {key}") from exc


def get_float(cfg, section: str, key: str) -> float:
    raw = _raw(cfg, section, key)
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") \
            from exc


def get_int(cfg, section: str, key: str) -> int:
    raw = _raw(cfg, section, key)
    try:
        return int(raw, 0)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not an integer") \
            from exc


def get_bool(cfg, section: str, key: str) -> bool:
    raw = _raw(cfg, section, key).strip().lower()
    if raw in ("1", "true", "yes", "on"):
        return True
    if raw in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key} = {raw!r} is not a boolean")


def get_str(cfg, section: str, key: str) -> str:
    return _raw(cfg, section, key).strip()


def get_float_list(cfg, section: str, key: str) -> List[float]:
    raw = _raw(cfg, section, key)
    items = [s for s in raw.replace(",", " ").split() if s]
    if not items:
        raise ConfigError(f"[{section}] {key} is empty")
    try:
        return [float(s) for s in items]
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} has a non-number") \
            from exc


def get_int_list(cfg, section: str, key: str) -> List[int]:
    raw = _raw(cfg, section, key)
    items = [s for s in raw.replace(",", " ").split() if s]
    if not items:
        raise ConfigError(f"[{section}] {key} is empty")
    try:
        return [int(s, 0) for s in items]
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} has a non-integer") \
            from exc


def config_dict(cfg: configparser.ConfigParser, section: str
                ) -> Dict[str, str]:
    """The resolved key = value mapping of one section (for manifests)."""
    if section not in DEFAULTS:
        raise ConfigError(f"unknown config section [{section}]")
    return dict(cfg.items(section))
