"""CSV and JSON writers. Floats use 17 significant digits with a dot separator."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

FLOAT_FMT = "%.17g"


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return FLOAT_FMT % float(v)


def write_columns(path: Path, header: Sequence[str], columns: Iterable) -> Path:
    cols = [np.asarray(c) if not isinstance(c, list) else c for c in columns]
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])
    return path


def write_profile(path: Path, x, u, name: str = "u") -> Path:
    return write_columns(path, ["x", name], [x, u])


def write_trajectory(path: Path, field) -> Path:
    """Matrix CSV: header ``t, x_0, ..., x_n``; each row starts with its time level."""
    g = field.grid
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [_fmt(v) for v in g.x])
        for tk, row in zip(g.t, field.values):
            w.writerow([_fmt(tk)] + [_fmt(v) for v in row])
    return path


def write_kkt(path: Path, kkt) -> Path:
    return write_columns(
        path,
        ["x", "phi", "rho", "mu", "nu", "label"],
        [kkt.x, kkt.phi, kkt.rho, kkt.mu, kkt.nu, list(kkt.labels())],
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_columns(path: Path) -> dict:
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        col = [r[j] for r in body]
        try:
            out[name] = np.array([float(v) for v in col])
        except ValueError:
            out[name] = col
    return out
