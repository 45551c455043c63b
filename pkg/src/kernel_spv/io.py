"""CSV / JSON serialization.

CSV files are comma-separated with a header row, LF line endings and floats
printed with 17 significant digits (lossless round trip).  Missing values are
empty fields.  JSON is written with sorted keys so reruns are byte-identical.
"""
import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .dynamics import SnapshotData, system_from_descriptor
from .errors import ConfigError, DimensionMismatch


def fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return ""
        return format(v, ".17g")
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --- snapshots ---------------------------------------------------------------

def write_snapshots(data, csv_path, meta_path=None):
    n = data.n
    header = [f"x{i + 1}" for i in range(n)] + [f"tx{i + 1}" for i in range(n)]
    rows = np.vstack([data.X, data.TX]).T
    write_csv(csv_path, header, rows.tolist())
    if meta_path is not None:
        write_json(meta_path, data.metadata())
    return csv_path


def read_snapshots(csv_path, meta_path):
    header, rows = read_csv(csv_path)
    meta = read_json(meta_path)
    system = system_from_descriptor(meta["system"])
    n = system.state_dim
    if len(header) != 2 * n:
        raise DimensionMismatch(f"{csv_path}: expected {2 * n} columns, found {len(header)}")
    arr = np.array(rows, dtype=float).reshape(len(rows), 2 * n)
    box = tuple(tuple(b) for b in meta.get("box", ()))
    return SnapshotData(arr[:, :n].T.copy(), arr[:, n:].T.copy(), system, meta.get("seed"), box)


# --- matrices ---------------------------------------------------------------

def write_matrix(path, M, prefix="c"):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return write_csv(path, [f"{prefix}{j}" for j in range(M.shape[1])], M.tolist())


def read_matrix(path):
    header, rows = read_csv(path)
    if not rows:
        return np.zeros((0, len(header)))
    return np.array(rows, dtype=float)


def require(path, hint):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing input {path}; {hint}")
    return path
