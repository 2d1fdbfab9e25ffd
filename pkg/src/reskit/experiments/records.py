"""Writing experiment outputs: results.csv, curves/*.csv, meta.json.

Numeric cells are written with ``repr`` so files round-trip at full float64
precision and rerunning an experiment reproduces them byte for byte.
Wall-clock information lives only in meta.json (and in the measured columns
of the timing experiment, where the duration *is* the result).
"""

from __future__ import annotations

import csv
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from .config import config_hash, semantic_dict


def _cell(value) -> str:
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fieldnames(rows) -> list[str]:
    names: list[str] = []
    for row in rows:
        for key in row:
            if key not in names:
                names.append(key)
    return names


def write_rows(path: Path, rows, fieldnames=None) -> None:
    if fieldnames is None:
        fieldnames = _fieldnames(rows)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_cell(row.get(k, "")) for k in fieldnames])


def write_curve(path: Path, header, columns) -> None:
    """Write named columns (equal-length sequences) as one CSV."""
    cols = [np.asarray(c) for c in columns]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(cols[0])):
            writer.writerow([_cell(c[i]) for c in cols])


def environment_info() -> dict:
    import scipy

    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
        "cpu_count": os.cpu_count(),
    }


def stamp_rows(rows, kind: str, cfg) -> list[dict]:
    """Prefix every row with the config hash and make sure it names a seed.

    Rows that describe an aggregate (or a deterministic quantity) may carry a
    descriptive seed label instead of an integer; rows that omit the field
    entirely inherit the config-level seed.
    """
    digest = config_hash(kind, cfg)
    stamped = []
    for row in rows:
        new = {"config_hash": digest}
        if "seed" not in row:
            new["seed"] = getattr(cfg, "seed", "")
        new.update(row)
        stamped.append(new)
    return stamped


def write_outputs(out_dir, kind: str, cfg, rows, curves, elapsed: float) -> None:
    """Write the standard output triple for one experiment run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_rows(out / "results.csv", stamp_rows(rows, kind, cfg))
    if curves:
        curve_dir = out / "curves"
        curve_dir.mkdir(exist_ok=True)
        for name, (header, columns) in sorted(curves.items()):
            write_curve(curve_dir / f"{name}.csv", header, columns)
    meta = {
        "experiment": kind,
        "config": semantic_dict(kind, cfg),
        "config_hash": config_hash(kind, cfg),
        "environment": environment_info(),
        "finished_unix": time.time(),
        "elapsed_seconds": elapsed,
    }
    with open(out / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
