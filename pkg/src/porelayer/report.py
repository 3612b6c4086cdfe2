"""JSON and CSV output of experiment results.

``report.json`` is written with sorted keys and ``repr`` floats so an
identical run produces a byte-identical file.  Sweep tables are CSV with a
header ``eps,<column>...``; field exports use ``x1,x2,value``.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


class ReportError(ValueError):
    """A report value is not finite."""


def _clean(obj, path="report"):
    if isinstance(obj, dict):
        return {str(k): _clean(v, f"{path}.{k}") for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v, f"{path}[{i}]") for i, v in enumerate(obj)]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist(), path)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise ReportError(f"non-finite value at {path}")
        return v
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__} at {path}")


def write_report(out_dir, payload: dict, name: str = "report.json") -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n")
    return path


def write_sweep_csv(path, eps, table: dict, columns=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = list(table) if columns is None else list(columns)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps"] + cols)
        for k, e in enumerate(eps):
            row = [repr(float(e))]
            for c in cols:
                v = table[c][k]
                row.append("" if v is None else repr(float(v)))
            w.writerow(row)
    return path


def write_rows_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return path
