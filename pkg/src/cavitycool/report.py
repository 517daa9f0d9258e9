"""Output side of the command line tools: delimited data, run manifests,
and rendered figures.

Data files are CSV with twelve-significant-digit floats and newline
line endings, so identical runs produce identical bytes.  Every command
drops a JSON manifest next to its data recording the resolved
configuration, the seed, library versions, and the SHA-256 of each
output, which is what makes reruns checkable.  Figures are rendered
through the Agg backend into PNG files alongside the data.
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Dict, Iterable, Mapping, Optional, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import __version__
from .units import ConfigError

FLOAT_FORMAT = "%.12g"

RC_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 110,
    "savefig.dpi": 160,
    "savefig.bbox": "tight",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.35,
    "lines.linewidth": 1.4,
    "legend.framealpha": 0.9,
}


def _format_cell(value) -> str:
    if isinstance(value, str):
        if "," in value or "\n" in value:
            raise ConfigError(f"cell {value!r} would break the CSV layout")
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return FLOAT_FORMAT % float(value)


def write_csv(path: str, columns: Mapping[str, Sequence]) -> None:
    """One header row, then rows in column-dict order, \\n endings."""
    names = list(columns)
    if not names:
        raise ConfigError("refusing to write a CSV with no columns")
    arrays = [columns[n] for n in names]
    length = len(arrays[0])
    for name, arr in zip(names, arrays):
        if len(arr) != length:
            raise ConfigError(f"column {name!r} has length {len(arr)}, "
                              f"expected {length}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(length):
            fh.write(",".join(_format_cell(arr[i]) for arr in arrays) + "\n")


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def library_versions() -> Dict[str, str]:
    import numba
    import scipy
    return {
        "cavitycool": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "matplotlib": matplotlib.__version__,
    }


def write_manifest(path: str, command: str, config: Mapping[str, str],
                   outputs: Iterable[str], walltime_s: float,
                   seed: Optional[int] = None,
                   extra: Optional[Mapping] = None) -> dict:
    """Record what produced which bytes; returns the manifest dict."""
    manifest = {
        "command": command,
        "config": dict(config),
        "seed": seed,
        "versions": library_versions(),
        "outputs": {os.path.basename(p): file_sha256(p) for p in outputs},
        "walltime_s": round(walltime_s, 3),
    }
    if extra:
        manifest["results"] = dict(extra)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def line_figure(path: str, x: np.ndarray, curves: Mapping[str, np.ndarray],
                xlabel: str, ylabel: str, title: Optional[str] = None,
                yscale: Optional[str] = None,
                markers: bool = False) -> None:
    """Render labelled curves over a shared abscissa to a PNG file."""
    with plt.rc_context(RC_STYLE):
        fig, ax = plt.subplots()
        for label, y in curves.items():
            ax.plot(x, y, marker="o" if markers else None,
                    markersize=3.5, label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if yscale:
            ax.set_yscale(yscale)
        if len(curves) > 1:
            ax.legend()
        fig.savefig(path)
        plt.close(fig)


def ensure_out_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {path!r} is not writable")
    return path
