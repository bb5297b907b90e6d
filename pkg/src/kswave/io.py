"""CSV/JSON export with lossless, byte-stable number formatting."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .exact import WaveProfile

FLOAT_FMT = "%.17g"


def _fmt(x) -> str:
    return FLOAT_FMT % float(x)


def write_profile_csv(profile: WaveProfile, path, extra: dict | None = None) -> Path:
    """Write ``coordinate,u,w`` rows preceded by one ``#`` metadata line."""
    path = Path(path)
    meta = {"construction": profile.construction}
    meta.update(extra or {})
    comment = "# " + " ".join(f"{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in meta.items())
    with path.open("w", newline="") as fh:
        fh.write(comment + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([profile.coordinate, "u", "w"])
        for z, u, w in zip(profile.z, profile.u, profile.w):
            writer.writerow([_fmt(z), _fmt(u), _fmt(w)])
    return path


def read_profile_csv(path) -> WaveProfile:
    path = Path(path)
    meta = {}
    rows = []
    header = None
    with path.open(newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                for item in line[1:].split():
                    key, _, value = item.partition("=")
                    meta[key] = value
            elif header is None:
                header = line.strip().split(",")
            elif line.strip():
                rows.append([float(x) for x in line.split(",")])
    if header is None or header[1:] != ["u", "w"]:
        raise ValueError(f"{path}: expected a '<coordinate>,u,w' header")
    data = np.array(rows, dtype=float).reshape(-1, 3)
    construction = meta.pop("construction", "exact")
    return WaveProfile(
        data[:, 0], data[:, 1], data[:, 2], construction=construction, coordinate=header[0], meta=meta
    )


def write_table_csv(rows: list[dict], path) -> Path:
    path = Path(path)
    keys = list(rows[0]) if rows else []
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(keys)
        for row in rows:
            writer.writerow([_fmt(row[k]) if isinstance(row[k], (float, np.floating)) else row[k] for k in keys])
    return path


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
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def profile_to_dict(profile: WaveProfile) -> dict:
    return {
        "construction": profile.construction,
        "coordinate": profile.coordinate,
        profile.coordinate: profile.z,
        "u": profile.u,
        "w": profile.w,
    }
