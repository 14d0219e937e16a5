"""CSV / JSON writers for fronts, sweeps and reports.

All writers are deterministic (fixed row order, fixed float formatting,
sorted JSON keys) and atomic: the file is written next to its target and
renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .pareto import ParetoFront
from .scalarize import S0Set, ScalarizationResult


def _fmt(x: float) -> str:
    return repr(float(x))


def psnr(d, peak: float) -> np.ndarray:
    """``10 log10(peak^2 / d)``; zero distortion maps to inf."""
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(peak**2 / d)


def atomic_write(path: Path, text: str) -> Path:
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
    return path


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, Path):
        return str(value)
    return value


def json_text(data) -> str:
    return json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n"


def _front_order(front: ParetoFront) -> np.ndarray:
    # allocations first when present so rows follow the lattice
    keys = front.distortions if front.allocations is None else np.hstack(
        [front.allocations, front.distortions])
    return np.lexsort(keys.T[::-1])


def front_rows(front: ParetoFront, peak: float | None = None):
    n = front.dimension
    header = []
    if front.allocations is not None:
        header += [f"b_{i}" for i in range(front.allocations.shape[1])]
    header += [f"g_{i}" for i in range(n)]
    if peak is not None:
        header += [f"psnr_{i}" for i in range(n)]
    header.append("label")
    rows = []
    for k in _front_order(front):
        row = []
        if front.allocations is not None:
            row += [_fmt(x) for x in front.allocations[k]]
        row += [_fmt(x) for x in front.distortions[k]]
        if peak is not None:
            row += [_fmt(x) for x in psnr(front.distortions[k], peak)]
        row.append(str(front.labels[k]))
        rows.append(row)
    return header, rows


def write_front_csv(front: ParetoFront, path, peak: float | None = None) -> Path:
    header, rows = front_rows(front, peak)
    return atomic_write(path, _csv_text(header, rows))


def front_json(front: ParetoFront, metadata: dict | None = None) -> dict:
    order = _front_order(front)
    points = []
    for k in order:
        point = {"g": front.distortions[k], "label": str(front.labels[k])}
        if front.allocations is not None:
            point["b"] = front.allocations[k]
        points.append(point)
    return {
        "metadata": {
            **(metadata or {}),
            "budget": front.budget,
            "grid_step": front.grid_step,
            "eps": front.eps,
            "counts": front.counts(),
        },
        "points": points,
    }


def write_front_json(front: ParetoFront, path, metadata: dict | None = None) -> Path:
    return atomic_write(path, json_text(front_json(front, metadata)))


def sweep_rows(entries: list[ScalarizationResult], peak: float | None = None):
    """One row per (weight, minimizer); ties give several rows for one weight."""
    first = entries[0]
    n = first.distortions.shape[1]
    header = [f"w_{i}" for i in range(n)] + ["objective"]
    with_alloc = first.allocations is not None
    if with_alloc:
        header += [f"b_{i}" for i in range(first.allocations.shape[1])]
    header += [f"g_{i}" for i in range(n)]
    if peak is not None:
        header += [f"psnr_{i}" for i in range(n)]
    rows = []
    for entry in entries:
        for alloc, dist in entry.minimizers:
            row = [_fmt(x) for x in entry.weight.weights] + [_fmt(entry.objective)]
            if with_alloc:
                row += [_fmt(x) for x in alloc]
            row += [_fmt(x) for x in dist]
            if peak is not None:
                row += [_fmt(x) for x in psnr(dist, peak)]
            rows.append(row)
    return header, rows


def write_sweep_csv(entries, path, peak: float | None = None) -> Path:
    header, rows = sweep_rows(list(entries), peak)
    return atomic_write(path, _csv_text(header, rows))


def result_json(entry: ScalarizationResult) -> dict:
    out = {
        "weight": entry.weight.weights,
        "objective": entry.objective,
        "ties": len(entry.distortions),
        "minimizers": [
            {"g": d} if a is None else {"b": a, "g": d} for a, d in entry.minimizers
        ],
    }
    return out


def sweep_json(s0: S0Set, metadata: dict | None = None) -> dict:
    return {
        "metadata": {**(metadata or {}), "weights": len(s0.entries),
                     "distinct_points": len(s0.distinct_distortions)},
        "entries": [result_json(e) for e in s0.entries],
        "s0": s0.distinct_distortions,
    }


def write_sweep_json(s0: S0Set, path, metadata: dict | None = None) -> Path:
    return atomic_write(path, json_text(sweep_json(s0, metadata)))


def write_plotdata(front: ParetoFront, s0: S0Set | None, directory, stem: str) -> list[Path]:
    """Front curve (weak points, sorted by first coordinate) and S0 points as two CSVs."""
    directory = Path(directory)
    weak = front.weak()
    n = front.dimension
    order = np.lexsort(weak.distortions.T[::-1])
    curve = [[_fmt(x) for x in weak.distortions[k]] + [str(weak.labels[k])] for k in order]
    paths = [atomic_write(directory / f"{stem}.plot-front.csv",
                          _csv_text([f"g_{i}" for i in range(n)] + ["label"], curve))]
    if s0 is not None:
        pts = [[_fmt(x) for x in p] for p in s0.distinct_distortions]
        paths.append(atomic_write(directory / f"{stem}.plot-s0.csv",
                                  _csv_text([f"g_{i}" for i in range(n)], pts)))
    return paths


def write_json(data, path) -> Path:
    return atomic_write(path, json_text(data))
