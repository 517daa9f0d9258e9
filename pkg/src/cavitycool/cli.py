"""Command line front end.

Each subcommand wires a config section to one experiment and leaves a
self-contained record in the output directory: CSV data files, rendered
PNG figures, and a JSON manifest with content hashes, library versions,
and the resolved configuration.  Data files are deterministic, so a
rerun with the same config and seed reproduces them byte for byte (the
figures carry rasterizer metadata and are hashed but not pinned).

Exit codes: 0 on success, 1 when a validation gate fails (reference
table deviation, feasibility check, noise-clamp budget), 2 for bad
input or configuration.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

import numpy as np

from . import config as cfgmod
from . import report
from .coefficients import (averaged_force, diffusion_budget, local_diffusion,
                           optimal_detuning)
from .confocal import run_confocal_study, sweep_caps
from .langevin import SimulationConfig, predicted_kinetic, run_ensemble
from .modes import ConfocalSetup
from .params import (CavityGeometry, PumpConfig, catalogue_by_label,
                     derive_rates, derived_table_mhz, load_catalogue,
                     load_table_reference, validity_report, TABLE_COLUMNS)
from .units import (ConfigError, DimensionError, DomainError, FREQUENCY,
                    LENGTH, Quantity, VOLUME)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BAD_INPUT = 2

MM3 = 1e-9      # m^3 per mm^3
UM = 1e-6       # m per micrometre
MM = 1e-3       # m per millimetre


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings of one command invocation, as they enter the
    manifest: the section's key = value map plus the output target."""

    kind: str
    settings: Dict[str, str]
    out_dir: str
    seed: Optional[int] = None
    extra: Dict[str, str] = field(default_factory=dict)

    def manifest_settings(self) -> Dict[str, str]:
        merged = dict(self.settings)
        merged.update(self.extra)
        return merged


def _experiment(args, kind: str, cfg, **extra) -> ExperimentConfig:
    out_dir = report.ensure_out_dir(args.out)
    return ExperimentConfig(
        kind=kind,
        settings=cfgmod.config_dict(cfg, kind),
        out_dir=out_dir,
        seed=getattr(args, "seed", None),
        extra={k: str(v) for k, v in extra.items()},
    )


def _finish(exp: ExperimentConfig, outputs: List[str], started: float,
            results: Optional[Mapping] = None) -> str:
    path = f"{exp.out_dir}/{exp.kind}_manifest.json"
    report.write_manifest(
        path,
        command=exp.kind,
        config=exp.manifest_settings(),
        outputs=outputs,
        walltime_s=time.perf_counter() - started,
        seed=exp.seed,
        extra=results,
    )
    return path


def _cavity_from(cfg, section: str) -> CavityGeometry:
    volume = cfgmod.get_float(cfg, section, "mode_volume_mm3") * MM3
    wavelength = cfgmod.get_float(cfg, section, "wavelength_um") * UM
    try:
        kappa = cfgmod.get_float(cfg, section, "kappa_per_s")
    except ConfigError:
        kappa = 1e6     # placeholder; the derived columns do not use it
    return CavityGeometry(
        mode_volume=Quantity(volume, VOLUME),
        wavelength=Quantity(wavelength, LENGTH),
        linewidth=Quantity(kappa, FREQUENCY),
    )


# ---------------------------------------------------------------------------
# table1

def cmd_table1(args) -> int:
    started = time.perf_counter()
    cfg = cfgmod.load_config(args.config)
    tolerance = (args.tolerance if args.tolerance is not None
                 else cfgmod.get_float(cfg, "table1", "tolerance"))
    if not 0.0 < tolerance < 1.0:
        raise ConfigError("tolerance must lie in (0, 1)")
    exp = _experiment(args, "table1", cfg, tolerance=tolerance)

    cavity = _cavity_from(cfg, "table1")
    species = load_catalogue()
    reference = load_table_reference()

    labels: List[str] = []
    columns: List[str] = []
    computed: List[float] = []
    printed: List[float] = []
    classes: List[str] = []
    verdicts: List[str] = []
    missing: List[str] = []
    deviations = 0

    for sp in species:
        if sp.label not in reference:
            missing.append(sp.label)
            continue
        derived = derived_table_mhz(sp, cavity)
        for column in TABLE_COLUMNS:
            ref = reference[sp.label][column]
            ok = ref.within(derived[column], tolerance)
            if ref.check == "skip":
                verdict = "flagged"
            elif ok:
                verdict = "ok"
            else:
                verdict = "deviates"
                deviations += 1
            labels.append(sp.label)
            columns.append(column)
            computed.append(derived[column])
            printed.append(ref.value)
            classes.append(ref.check)
            verdicts.append(verdict)

    table_path = f"{exp.out_dir}/table1.csv"
    report.write_csv(table_path, {
        "species": labels,
        "column": columns,
        "computed_mhz": computed,
        "reference_mhz": printed,
        "check": classes,
        "verdict": verdicts,
    })

    width = max((len(s) for s in labels), default=7)
    for row in zip(labels, columns, computed, printed, classes, verdicts):
        print(f"{row[0]:<{width}}  {row[1]:<13}  computed {row[2]:12.4e}  "
              f"reference {row[3]:12.4e}  [{row[4]}] {row[5]}")
    for label in missing:
        print(f"{label}: no reference row, skipped", file=sys.stderr)

    results = {"rows": len(labels), "deviations": deviations,
               "missing": missing, "tolerance": tolerance}
    _finish(exp, [table_path], started, results)

    if not labels:
        print("no table rows produced", file=sys.stderr)
        return EXIT_VALIDATION
    if missing or deviations:
        return EXIT_VALIDATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# forcescan

def cmd_forcescan(args) -> int:
    started = time.perf_counter()
    cfg = cfgmod.load_config(args.config)
    exp = _experiment(args, "forcescan", cfg)

    deltas = cfgmod.get_float_list(cfg, "forcescan", "detunings_kappa")
    v_max = cfgmod.get_float(cfg, "forcescan", "velocity_max_kappa")
    points = cfgmod.get_int(cfg, "forcescan", "velocity_points")
    drive = cfgmod.get_float(cfg, "forcescan", "drive")
    if not deltas:
        raise ConfigError("need at least one detuning")
    if points < 3:
        raise ConfigError("velocity_points must be at least 3")

    velocities = np.linspace(-v_max, v_max, points)
    data: Dict[str, np.ndarray] = {"kv_kappa": velocities}
    curves: Dict[str, np.ndarray] = {}
    for delta in deltas:
        force = averaged_force(velocities, delta, drive)
        data[f"force_delta_{delta:g}"] = force
        curves[f"detuning {delta:g} kappa"] = force

    csv_path = f"{exp.out_dir}/forcescan.csv"
    fig_path = f"{exp.out_dir}/forcescan.png"
    report.write_csv(csv_path, data)
    report.line_figure(
        fig_path, velocities, curves,
        xlabel="velocity k v / kappa",
        ylabel="averaged force [hbar k kappa^2]",
        title="velocity dependence of the retarded force")
    _finish(exp, [csv_path, fig_path], started)
    return EXIT_OK


# ---------------------------------------------------------------------------
# diffscan

def cmd_diffscan(args) -> int:
    started = time.perf_counter()
    cfg = cfgmod.load_config(args.config)
    exp = _experiment(args, "diffscan", cfg)

    velocities = cfgmod.get_float_list(cfg, "diffscan", "velocities_kappa")
    delta = cfgmod.get_float(cfg, "diffscan", "delta_kappa")
    drive = cfgmod.get_float(cfg, "diffscan", "drive")
    points = cfgmod.get_int(cfg, "diffscan", "x_points")
    if not velocities:
        raise ConfigError("need at least one velocity")
    if points < 3:
        raise ConfigError("x_points must be at least 3")

    xs = np.linspace(0.0, math.pi, points)
    data: Dict[str, np.ndarray] = {"kx": xs}
    curves: Dict[str, np.ndarray] = {}
    for v in velocities:
        diff = local_diffusion(xs, v, delta, drive)
        data[f"diffusion_kv_{v:g}"] = diff
        curves[f"k v = {v:g} kappa"] = diff

    csv_path = f"{exp.out_dir}/diffscan.csv"
    fig_path = f"{exp.out_dir}/diffscan.png"
    report.write_csv(csv_path, data)
    report.line_figure(
        fig_path, xs, curves,
        xlabel="position k x",
        ylabel="momentum diffusion [(hbar k)^2 kappa]",
        title="local momentum diffusion along the standing wave")
    _finish(exp, [csv_path, fig_path], started)
    return EXIT_OK


# ---------------------------------------------------------------------------
# confocal

def cmd_confocal(args) -> int:
    started = time.perf_counter()
    cfg = cfgmod.load_config(args.config)

    distance = cfgmod.get_float(cfg, "confocal", "mirror_distance_mm") * MM
    n0 = cfgmod.get_int(cfg, "confocal", "fundamental_index")
    curve_caps = cfgmod.get_int_list(cfg, "confocal", "curve_caps")
    sweep_cap = cfgmod.get_int(cfg, "confocal", "sweep_cap")
    delta = cfgmod.get_float(cfg, "confocal", "delta_kappa")
    drive = cfgmod.get_float(cfg, "confocal", "drive")
    omega_r = cfgmod.get_float(cfg, "confocal", "recoil_kappa")
    grid_points = cfgmod.get_int(cfg, "confocal", "grid_points")
    x_points = cfgmod.get_int(cfg, "confocal", "x_points")
    check = cfgmod.get_bool(cfg, "confocal", "convergence_check")
    if not curve_caps:
        raise ConfigError("need at least one curve cap")

    setup = ConfocalSetup(mirror_distance=distance,
                          fundamental_longitudinal=n0)
    all_caps = sorted(set(curve_caps) | set(sweep_caps(sweep_cap)))
    study = run_confocal_study(
        setup, all_caps, delta=delta, drive=drive, omega_r=omega_r,
        grid_points=grid_points, x_points=x_points,
        convergence_check=check)
    exp = _experiment(
        args, "confocal", cfg,
        wavelength_um=setup.wavelength / UM,
        fundamental_waist_um=setup.fundamental_waist / UM)

    index = {cap: i for i, cap in enumerate(study.caps)}
    data: Dict[str, np.ndarray] = {"kx": study.xs}
    curves: Dict[str, np.ndarray] = {}
    for cap in curve_caps:
        i = index[cap]
        count = study.mode_counts[i]
        data[f"friction_m{count}_kappa"] = study.curves[i]
        curves[f"M = {count} modes"] = np.abs(study.curves[i]) * 1e6
    curves_path = f"{exp.out_dir}/confocal_curves.csv"
    curves_fig = f"{exp.out_dir}/confocal_curves.png"
    report.write_csv(curves_path, data)
    report.line_figure(
        curves_fig, study.xs, curves,
        xlabel="position k x",
        ylabel="|friction| [1e-6 kappa]",
        title="multimode friction along the axis")

    ratios = study.ratios
    sweep_path = f"{exp.out_dir}/confocal_sweep.csv"
    sweep_fig = f"{exp.out_dir}/confocal_sweep.png"
    report.write_csv(sweep_path, {
        "transverse_cap": np.asarray(study.caps, dtype=int),
        "mode_count": np.asarray(study.mode_counts, dtype=int),
        "mean_friction_kappa": study.averages,
        "ratio_to_single_mode": ratios,
    })
    report.line_figure(
        sweep_fig, np.asarray(study.mode_counts, dtype=float),
        {"averaged friction / single-mode value": ratios},
        xlabel="number of modes M",
        ylabel="friction enhancement",
        title="saturation of the averaged multimode friction",
        markers=True)

    results = {
        "convergence_delta": study.convergence_delta,
        "single_mode_mean_kappa": float(study.averages[index[0]]),
        "largest_ratio": float(ratios[-1]),
    }
    _finish(exp, [curves_path, curves_fig, sweep_path, sweep_fig],
            started, results)
    return EXIT_OK


# ---------------------------------------------------------------------------
# cool

def _parse_init_x(raw: str):
    if raw.strip().lower() == "uniform":
        return "uniform"
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(
            f"init_x must be 'uniform' or a number, got {raw!r}") from exc


def cmd_cool(args) -> int:
    started = time.perf_counter()
    cfg = cfgmod.load_config(args.config)

    seed = (args.seed if args.seed is not None
            else cfgmod.get_int(cfg, "cool", "seed"))
    threads = (args.threads if args.threads is not None
               else cfgmod.get_int(cfg, "cool", "threads"))
    sim = SimulationConfig(
        delta=cfgmod.get_float(cfg, "cool", "delta_kappa"),
        drive=cfgmod.get_float(cfg, "cool", "drive"),
        omega_r=cfgmod.get_float(cfg, "cool", "recoil_kappa"),
        pull=cfgmod.get_float(cfg, "cool", "pull_kappa"),
        include_second=cfgmod.get_bool(cfg, "cool", "include_second"),
        trajectories=cfgmod.get_int(cfg, "cool", "trajectories"),
        dt=cfgmod.get_float(cfg, "cool", "dt"),
        t_end=cfgmod.get_float(cfg, "cool", "t_end"),
        seed=seed,
        sample_every=cfgmod.get_int(cfg, "cool", "sample_every"),
        clamp_policy=cfgmod.get_str(cfg, "cool", "clamp_policy"),
        noise=cfgmod.get_str(cfg, "cool", "noise"),
        init_x=_parse_init_x(cfgmod.get_str(cfg, "cool", "init_x")),
        init_p_mean=cfgmod.get_float(cfg, "cool", "init_p_mean"),
        init_p_sigma=cfgmod.get_float(cfg, "cool", "init_p_sigma"),
        threads=threads,
    )
    exp = _experiment(args, "cool", cfg, seed=seed, threads=threads)

    stats = run_ensemble(sim)
    target = predicted_kinetic(sim)

    series_path = f"{exp.out_dir}/cool_series.csv"
    report.write_csv(series_path, {
        "time_kappa": stats.times,
        "mean_p": stats.mean_p,
        "mean_p2": stats.mean_p2,
        "kinetic_hbar_kappa": stats.kinetic,
        "mean_x_mod": stats.mean_x_mod,
    })

    hist_path = f"{exp.out_dir}/cool_histograms.csv"
    report.write_csv(hist_path, {
        "p_bin_low": stats.hist_p_edges[:-1],
        "p_bin_high": stats.hist_p_edges[1:],
        "p_count": stats.hist_p_counts,
        "x_bin_low": stats.hist_x_edges[:-1],
        "x_bin_high": stats.hist_x_edges[1:],
        "x_count": stats.hist_x_counts,
    })

    fig_path = f"{exp.out_dir}/cool_kinetic.png"
    report.line_figure(
        fig_path, stats.times,
        {"ensemble kinetic energy": stats.kinetic,
         "stationary balance": np.full_like(stats.times, target)},
        xlabel="time [1/kappa]",
        ylabel="kinetic energy [hbar kappa]",
        title="relaxation of the ensemble kinetic energy")

    final = stats.final_kinetic
    results = {
        "final_kinetic_hbar_kappa": final,
        "final_kinetic_std_hbar_kappa": stats.final_kinetic_std,
        "predicted_kinetic_hbar_kappa": target,
        "clamp_fraction_any": stats.clamp_fraction_any,
        "clamp_fraction_material": stats.clamp_fraction_material,
        "clamp_mean_magnitude": stats.clamp_mean_magnitude,
        "walltime_s": stats.walltime_s,
    }
    _finish(exp, [series_path, hist_path, fig_path], started, results)

    print(f"final kinetic energy  {final:.4f} hbar kappa  "
          f"(stationary balance {target:.4f})")
    print(f"noise clamps: any {stats.clamp_fraction_any:.2e}, "
          f"material {stats.clamp_fraction_material:.2e}")
    if stats.clamp_fraction_material > 0.01:
        print("material noise-clamp fraction exceeds 1%; "
              "results are not trustworthy", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# budget

def cmd_budget(args) -> int:
    started = time.perf_counter()
    cfg = cfgmod.load_config(args.config)
    exp = _experiment(args, "budget", cfg)

    selection = cfgmod.get_str(cfg, "budget", "species")
    geometry = cfgmod.get_str(cfg, "budget", "geometry")
    waist = cfgmod.get_float(cfg, "budget", "waist_wavelengths")
    cavity = _cavity_from(cfg, "budget")

    species = load_catalogue()
    if selection != "all":
        by_label = catalogue_by_label(species)
        if selection not in by_label:
            raise ConfigError(
                f"unknown species {selection!r}; catalogue has "
                + ", ".join(sorted(by_label)))
        species = [by_label[selection]]

    rows = [diffusion_budget(derive_rates(sp, cavity), geometry, waist)
            for sp in species]

    csv_path = f"{exp.out_dir}/budget.csv"
    report.write_csv(csv_path, {
        "species": [r.species_label for r in rows],
        "geometry": [r.geometry for r in rows],
        "ratio_absorption": [r.ratio_absorption for r in rows],
        "ratio_scattering": [r.ratio_scattering for r in rows],
        "energy_inflation": [r.energy_inflation for r in rows],
        "gradient_suppression": [r.gradient_suppression for r in rows],
    })
    width = max(len(r.species_label) for r in rows)
    for r in rows:
        print(f"{r.species_label:<{width}}  absorption/cavity "
              f"{r.ratio_absorption:10.3e}  scattering/cavity "
              f"{r.ratio_scattering:10.3e}  energy inflation "
              f"{r.energy_inflation:10.3e}")
    _finish(exp, [csv_path], started,
            {"species": [r.species_label for r in rows]})
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate

def cmd_validate(args) -> int:
    started = time.perf_counter()
    cfg = cfgmod.load_config(args.config)
    exp = _experiment(args, "validate", cfg)

    label = cfgmod.get_str(cfg, "validate", "species")
    by_label = catalogue_by_label(load_catalogue())
    if label not in by_label:
        raise ConfigError(
            f"unknown species {label!r}; catalogue has "
            + ", ".join(sorted(by_label)))
    cavity = _cavity_from(cfg, "validate")
    kappa = cavity.linewidth.value
    pump = PumpConfig(
        detuning=Quantity(
            cfgmod.get_float(cfg, "validate", "detuning_kappa") * kappa,
            FREQUENCY),
        photon_number=cfgmod.get_float(cfg, "validate", "photon_number"),
    )
    particles = cfgmod.get_int(cfg, "validate", "particle_count")

    rep = validity_report(by_label[label], pump, cavity,
                          particle_count=particles)
    lines = rep.lines()
    text_path = f"{exp.out_dir}/validate.txt"
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    for line in lines:
        print(line)

    _finish(exp, [text_path], started,
            {"passed": rep.passed, "clean": rep.clean})
    return EXIT_OK if rep.passed else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# parser

_COMMANDS = {
    "table1": (cmd_table1,
               "recompute the parameter table and gate it against the "
               "shipped reference"),
    "forcescan": (cmd_forcescan,
                  "position-averaged force versus velocity for several "
                  "detunings"),
    "diffscan": (cmd_diffscan,
                 "local momentum diffusion along the standing wave"),
    "confocal": (cmd_confocal,
                 "multimode friction curves and their saturation with "
                 "mode number"),
    "cool": (cmd_cool,
             "stochastic ensemble relaxation toward the stationary "
             "energy"),
    "budget": (cmd_budget,
               "photon-loss diffusion relative to cavity diffusion per "
               "species"),
    "validate": (cmd_validate,
                 "feasibility checks of a species/cavity/pump operating "
                 "point"),
}


def _nonnegative_seed(raw: str) -> int:
    value = int(raw)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavitycool",
        description="Cavity cooling studies: parameter tables, transport "
                    "coefficient scans, confocal multimode friction, and "
                    "ensemble simulations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (handler, help_text) in _COMMANDS.items():
        p = sub.add_parser(
            name, help=help_text, description=help_text,
            epilog="defaults:\n" + cfgmod.render_defaults(name),
            formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", metavar="PATH", default=None,
                       help="key = value file overriding the defaults")
        p.add_argument("--out", metavar="DIR", default=".",
                       help="output directory (created if missing)")
        if name == "cool":
            p.add_argument("--seed", metavar="U64", default=None,
                           type=_nonnegative_seed,
                           help="override the noise seed")
            p.add_argument("--threads", metavar="N", default=None, type=int,
                           help="worker threads for the ensemble")
        if name == "table1":
            p.add_argument("--tolerance", metavar="F", default=None,
                           type=float,
                           help="relative deviation gate for checked cells")
        p.set_defaults(handler=handler)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, DomainError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
