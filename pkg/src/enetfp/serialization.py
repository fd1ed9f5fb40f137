"""CSV and JSON persistence: datasets, tabulated features, dictionary configs
and coefficient lists."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .dictionary import Dictionary, HaarDictionary, TabulatedDictionary, WaveletSpec
from .errors import ConfigError, DataError
from .operators import Dataset
from .prox import Coefficients


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path} is empty")
    return [h.strip() for h in rows[0]], rows[1:]


def _to_float_matrix(rows, ncols, path) -> np.ndarray:
    try:
        out = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric entry ({exc})") from None
    if out.size == 0:
        raise DataError(f"{path} has a header but no rows")
    if out.ndim != 2 or out.shape[1] != ncols:
        raise DataError(f"{path}: every row needs {ncols} columns")
    return out


def read_dataset_csv(path) -> Dataset:
    """Columns ``x_1..x_d, y_1..y_m`` with a header row."""
    header, rows = _read_rows(path)
    xs = [i for i, h in enumerate(header) if h.startswith("x_")]
    ys = [i for i, h in enumerate(header) if h.startswith("y_")]
    if not xs or not ys or len(xs) + len(ys) != len(header):
        raise DataError(f"{path}: header must be x_1..x_d, y_1..y_m, got {header}")
    M = _to_float_matrix(rows, len(header), path)
    return Dataset(M[:, xs], M[:, ys])


def write_dataset_csv(path, data: Dataset):
    d, m = data.inputs.shape[1], data.output_dim
    header = [f"x_{i + 1}" for i in range(d)] + [f"y_{i + 1}" for i in range(m)]
    lines = [",".join(header)]
    for x, y in zip(data.inputs, data.outputs):
        lines.append(",".join(repr(float(v)) for v in (*x, *y)))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_feature_table(path, weights_path=None) -> TabulatedDictionary:
    """Feature evaluations (rows = samples, columns = features) plus optional
    weights CSV with columns ``feature, weight``."""
    header, rows = _read_rows(path)
    table = _to_float_matrix(rows, len(header), path)
    weights = None
    if weights_path is not None:
        wh, wrows = _read_rows(weights_path)
        if [h.lower() for h in wh] != ["feature", "weight"]:
            raise DataError(f"{weights_path}: header must be 'feature,weight'")
        by_name = {}
        for r in wrows:
            try:
                by_name[r[0].strip()] = float(r[1])
            except (IndexError, ValueError):
                raise DataError(f"{weights_path}: malformed row {r}") from None
        missing = [h for h in header if h not in by_name]
        if missing:
            raise DataError(f"{weights_path}: no weight for features {missing}")
        weights = [by_name[h] for h in header]
    return TabulatedDictionary(table, weights=weights, ids=header)


def dictionary_from_config(cfg: dict) -> Dictionary:
    """``{"type": "haar", "max_level", "s", "a"}`` or
    ``{"type": "csv", "features", "weights"}``."""
    if not isinstance(cfg, dict) or "type" not in cfg:
        raise ConfigError("dictionary config needs a 'type' field")
    kind = cfg["type"]
    if kind == "haar":
        unknown = set(cfg) - {"type", "max_level", "s", "a"}
        if unknown:
            raise ConfigError(f"unknown haar fields: {sorted(unknown)}")
        return HaarDictionary(WaveletSpec(max_level=cfg.get("max_level", 4),
                                          s=float(cfg.get("s", 1.0)),
                                          a=float(cfg.get("a", 0.0))))
    if kind == "csv":
        if "features" not in cfg:
            raise ConfigError("csv dictionary needs a 'features' path")
        return read_feature_table(cfg["features"], cfg.get("weights"))
    raise ConfigError(f"unknown dictionary type {kind!r}")


def encode_id(gid):
    if isinstance(gid, tuple):
        return [encode_id(g) for g in gid]
    if isinstance(gid, np.integer):
        return int(gid)
    return gid


def decode_id(obj):
    if isinstance(obj, list):
        return tuple(decode_id(o) for o in obj)
    return obj


def coefficients_to_json(beta: Coefficients) -> list:
    return [[encode_id(g), float(v)] for g, v in beta.items()]


def coefficients_from_json(items) -> Coefficients:
    try:
        return Coefficients({decode_id(g): float(v) for g, v in items})
    except (TypeError, ValueError):
        raise ConfigError("coefficients must be a list of [id, value] pairs") from None


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, shortest round-trip floats, non-finite as strings."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(_clean(obj), sort_keys=True).encode()).hexdigest()[:16]


def atomic_write_text(path, text: str):
    """Write to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write_text(path, dumps(obj))


def read_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    fields = sorted({k for r in rows for k in r})
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v
                         for k, v in r.items()})
    return buf.getvalue()
