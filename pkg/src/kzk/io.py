"""CSV and JSON artifacts with round-trip float formatting."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from pathlib import Path

import numpy as np

FIELD_KEYS = ("nx", "ny", "X_max", "L", "family")


def fmt(v) -> str:
    """Shortest round-trip decimal for floats."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _ensure_parent(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_field_csv(path, values: np.ndarray, x: np.ndarray, y: np.ndarray, X_max: float,
                    L: float, family: str) -> Path:
    """Header lines ``# key=value`` then one row per x node: x, u(x, y_0), ..., u(x, y_{ny-1})."""
    path = _ensure_parent(path)
    values = np.asarray(values, dtype=float)
    nx, ny = values.shape
    with path.open("w", newline="") as fh:
        for k, v in (("nx", nx), ("ny", ny), ("X_max", X_max), ("L", L), ("family", family)):
            fh.write(f"# {k}={v if isinstance(v, str) else fmt(v)}\n")
        fh.write("# y=" + ",".join(fmt(t) for t in y) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x"] + [f"u{j}" for j in range(ny)])
        for xi, row in zip(x, values):
            w.writerow([fmt(xi)] + [fmt(t) for t in row])
    return path


def read_field_csv(path) -> tuple[np.ndarray, dict]:
    meta: dict = {}
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k.strip()] = v.strip()
                continue
            if line.startswith("x,") or not line.strip():
                continue
            rows.append([float(t) for t in line.strip().split(",")])
    missing = [k for k in FIELD_KEYS if k not in meta]
    if missing:
        raise ValueError(f"field CSV header lacks {', '.join(missing)}")
    arr = np.array(rows, dtype=float)
    out = {"nx": int(meta["nx"]), "ny": int(meta["ny"]), "X_max": float(meta["X_max"]),
           "L": float(meta["L"]), "family": meta["family"]}
    if "y" in meta:
        out["y"] = np.array([float(t) for t in meta["y"].split(",")])
    values = arr[:, 1:]
    if values.shape != (out["nx"], out["ny"]):
        raise ValueError(f"field CSV body has shape {values.shape}, header declares "
                         f"{(out['nx'], out['ny'])}")
    out["x"] = arr[:, 0]
    return values, out


def write_table_csv(path, columns, rows, schema_note: str | None = None) -> Path:
    """A header comment declaring the column schema, then a header row and data rows."""
    path = _ensure_parent(path)
    with path.open("w", newline="") as fh:
        fh.write("# columns=" + ";".join(columns) + "\n")
        if schema_note:
            fh.write(f"# {schema_note}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in r])
    return path


def read_table_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rdr = list(csv.reader(lines))
    return rdr[0], rdr[1:]


def write_records_csv(path, records) -> Path:
    records = list(records)
    cols = records[0].columns() if records else ["t"]
    return write_table_csv(path, cols, [r.row() for r in records])


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        f = float(o)
        return f if math.isfinite(f) else str(f)
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    return o


def write_json(path, obj) -> Path:
    path = _ensure_parent(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_metadata(directory, **info) -> Path:
    """Timestamped run metadata, kept apart so data files stay byte-stable."""
    info = dict(info)
    info["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return write_json(Path(directory) / "metadata.json", info)
