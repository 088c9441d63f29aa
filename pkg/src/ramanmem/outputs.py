"""Deterministic CSV and JSON writers with provenance headers."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import __version__


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def header_lines(config_sha256: str, description: str = "") -> list:
    out = [f"ramanmem {__version__}", f"config_sha256 {config_sha256}"]
    if description:
        out.append(description)
    return out


def write_csv(path, columns, rows, header=()) -> Path:
    """Comma-separated table; header lines are prefixed with '#'."""
    path = Path(path)
    lines = [f"# {h}" for h in header]
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row length does not match the column count")
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Return (header lines, column names, float array) from :func:`write_csv` output."""
    header, names, data = [], None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            header.append(line[1:].strip())
        elif not line.strip():
            continue
        elif names is None:
            names = [c.strip() for c in line.split(",")]
        else:
            data.append([float(c) for c in line.split(",")])
    arr = np.array(data, dtype=float).reshape(len(data), len(names) if names else 0)
    return header, names or [], arr


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def write_json(path, payload: dict, config_sha256: str) -> Path:
    path = Path(path)
    doc = {"meta": {"generator": "ramanmem", "version": __version__, "config_sha256": config_sha256}}
    doc.update(_clean(payload))
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
