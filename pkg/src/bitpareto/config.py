"""Experiment configuration: JSON schema, validation and defaults.

Schema (keys not listed are rejected)::

    {
      "name": "diamond3",                              # optional
      "dag": {"node_count": 3, "arcs": [[0, 1], [0, 2]],
              "labels": ["base", ...]},                # labels optional
      "model": {"kind": "layered-exponential",
                "base": [1, 1, 1],                     # optional, default 1
                "gains": {"1": {"0": 1, "1": 2}}}      # optional, default 1
            or {"kind": "tabulated", "table": "t.csv", # path relative to config
                "step": 0.5},                          # optional, default grid_step
      "budget": 1.0,
      "grid_step": 0.05,
      "weight_resolution": 64,
      "tolerances": {"tie": 1e-12, "match": <2*grid_step>, "envelope": 1e-12,
                     "continuity_factor": 4, "support": 1e-9, "dominance_eps": 0},
      "outputs": {"directory": "out", "formats": ["csv", "json", "plotdata"]}
    }
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .distortion import LayeredExponentialModel, TabulatedModel
from .errors import BitParetoError, ParseError, SchemaError
from .graph import LayerDag, build_dag

FORMATS = ("csv", "json", "plotdata")
FIXTURES = ("qcif-chain", "dag5", "svc-fig3", "svc-fig4", "diamond3", "nonconvex3", "flat-chain3")

_TOP_KEYS = {"name", "dag", "model", "budget", "grid_step", "weight_resolution", "tolerances", "outputs"}
_TOLERANCE_KEYS = {"tie", "match", "envelope", "continuity_factor", "support", "dominance_eps"}


@dataclass
class Tolerances:
    tie: float = 1e-12
    match: float = 0.0
    envelope: float = 1e-12
    continuity_factor: float = 4.0
    support: float = 1e-9
    dominance_eps: float = 0.0


@dataclass
class ExperimentConfig:
    name: str
    node_count: int
    arcs: list[tuple[int, int]]
    model_spec: dict
    budget: float
    grid_step: float
    weight_resolution: int
    tolerances: Tolerances
    output_directory: Path
    formats: tuple[str, ...]
    labels: list[str] | None = None
    source: Path | None = None
    dag: LayerDag = field(init=False, repr=False)
    model: LayeredExponentialModel | TabulatedModel = field(init=False, repr=False)

    def __post_init__(self):
        self.dag = build_dag(self.node_count, self.arcs)
        self.model = _build_model(self.model_spec, self.dag, self.grid_step, self.source)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dag": {"node_count": self.node_count, "arcs": [list(a) for a in self.arcs]},
            "model": self.model_spec,
            "budget": self.budget,
            "grid_step": self.grid_step,
            "weight_resolution": self.weight_resolution,
            "tolerances": vars(self.tolerances),
        }


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise SchemaError(f"{where}: missing required field '{key}'")
    return data[key]


def _positive(value, where: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise SchemaError(f"{where}: expected an integer, got {value!r}")
    if not value > 0:
        raise SchemaError(f"{where}: must be positive, got {value!r}")
    return int(value) if integer else float(value)


def load_table(path: Path, node_count: int) -> tuple[np.ndarray, np.ndarray]:
    """Read a ``b_0..b_{N-1}, g_0..g_{N-1}`` CSV table."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise SchemaError(f"model.table: cannot read {path}: {exc.strerror}") from None
    b_cols = [f"b_{i}" for i in range(node_count)]
    g_cols = [f"g_{i}" for i in range(node_count)]
    if not rows:
        raise SchemaError(f"model.table: {path} has no rows")
    missing = [c for c in b_cols + g_cols if c not in rows[0]]
    if missing:
        raise SchemaError(f"model.table: {path} lacks column '{missing[0]}'")
    try:
        allocs = np.array([[float(r[c]) for c in b_cols] for r in rows])
        dists = np.array([[float(r[c]) for c in g_cols] for r in rows])
    except ValueError as exc:
        raise SchemaError(f"model.table: {path}: {exc}") from None
    return allocs, dists


def _build_model(spec: dict, dag: LayerDag, grid_step: float, source: Path | None):
    kind = spec.get("kind")
    n = dag.node_count
    if kind == "layered-exponential":
        unknown = set(spec) - {"kind", "base", "gains"}
        if unknown:
            raise SchemaError(f"model: unknown field '{sorted(unknown)[0]}'")
        base = spec.get("base", [1.0] * n)
        if not isinstance(base, list) or len(base) != n:
            raise SchemaError(f"model.base: expected a list of {n} numbers")
        base = [_positive(c, f"model.base[{i}]") for i, c in enumerate(base)]
        raw = spec.get("gains", {})
        if not isinstance(raw, dict):
            raise SchemaError("model.gains: expected an object keyed by resolution")
        gains = {}
        for res, row in raw.items():
            where = f"model.gains[{res}]"
            try:
                i = int(res)
            except ValueError:
                raise SchemaError(f"{where}: resolution key must be an integer") from None
            if not 0 <= i < n:
                raise SchemaError(f"{where}: resolution {i} out of range [0, {n})")
            if not isinstance(row, dict):
                raise SchemaError(f"{where}: expected an object keyed by node")
            members = dag.members(i)
            gains[i] = {}
            for node, value in row.items():
                try:
                    j = int(node)
                except ValueError:
                    raise SchemaError(f"{where}: node key must be an integer") from None
                if j not in members:
                    raise SchemaError(
                        f"{where}: node {j} is outside the subgraph of resolution {i} {list(members)}"
                    )
                if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
                    raise SchemaError(f"{where}[{j}]: gain must be a nonnegative number")
                gains[i][j] = float(value)
        try:
            return LayeredExponentialModel.from_gain_maps(dag, base, gains)
        except ValueError as exc:
            raise SchemaError(f"model: {exc}") from None
    if kind == "tabulated":
        unknown = set(spec) - {"kind", "table", "step"}
        if unknown:
            raise SchemaError(f"model: unknown field '{sorted(unknown)[0]}'")
        table = Path(_require(spec, "table", "model"))
        if not table.is_absolute():
            table = (source.parent if source else Path.cwd()) / table
        step = _positive(spec.get("step", grid_step), "model.step")
        allocs, dists = load_table(table, n)
        try:
            return TabulatedModel(allocs, dists, step)
        except (ValueError, BitParetoError) as exc:
            raise SchemaError(f"model.table: {exc}") from None
    raise SchemaError(f"model.kind: expected 'layered-exponential' or 'tabulated', got {kind!r}")


def config_from_dict(data, source: Path | None = None, output_directory: str | None = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise SchemaError("config: top level must be an object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise SchemaError(f"config: unknown field '{sorted(unknown)[0]}'")
    dag = _require(data, "dag", "config")
    if not isinstance(dag, dict):
        raise SchemaError("dag: expected an object")
    node_count = _positive(_require(dag, "node_count", "dag"), "dag.node_count", integer=True)
    arcs = _require(dag, "arcs", "dag")
    if not isinstance(arcs, list) or any(
        not isinstance(a, list) or len(a) != 2 or not all(isinstance(x, int) for x in a) for a in arcs
    ):
        raise SchemaError("dag.arcs: expected a list of [from, to] integer pairs")
    labels = dag.get("labels")
    if labels is not None and (not isinstance(labels, list) or len(labels) != node_count):
        raise SchemaError(f"dag.labels: expected a list of {node_count} names")
    model = _require(data, "model", "config")
    if not isinstance(model, dict):
        raise SchemaError("model: expected an object")
    budget = _positive(_require(data, "budget", "config"), "budget")
    grid_step = _positive(_require(data, "grid_step", "config"), "grid_step")
    resolution = _positive(data.get("weight_resolution", 16), "weight_resolution", integer=True)

    raw_tol = data.get("tolerances", {})
    if not isinstance(raw_tol, dict):
        raise SchemaError("tolerances: expected an object")
    unknown = set(raw_tol) - _TOLERANCE_KEYS
    if unknown:
        raise SchemaError(f"tolerances: unknown field '{sorted(unknown)[0]}'")
    tol = Tolerances(match=2 * grid_step)
    for key, value in raw_tol.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
            raise SchemaError(f"tolerances.{key}: must be a nonnegative number")
        setattr(tol, key, float(value))

    outputs = data.get("outputs", {})
    if not isinstance(outputs, dict):
        raise SchemaError("outputs: expected an object")
    formats = outputs.get("formats", list(FORMATS))
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        raise SchemaError(f"outputs.formats: expected a subset of {list(FORMATS)}")
    directory = output_directory or outputs.get("directory", "out")

    try:
        return ExperimentConfig(
            name=str(data.get("name", source.stem if source else "experiment")),
            node_count=node_count,
            arcs=[(a[0], a[1]) for a in arcs],
            model_spec=model,
            budget=budget,
            grid_step=grid_step,
            weight_resolution=resolution,
            tolerances=tol,
            output_directory=Path(directory),
            formats=tuple(formats),
            labels=labels,
            source=source,
        )
    except SchemaError:
        raise
    except BitParetoError as exc:
        # graph errors keep their own type and exit code
        raise exc from None


def parse_config(path, output_directory: str | None = None) -> ExperimentConfig:
    """Read and validate a JSON experiment config, applying defaults."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return config_from_dict(data, source=path, output_directory=output_directory)


def fixture_path(name: str) -> Path:
    if name not in FIXTURES:
        raise SchemaError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    return Path(str(resources.files("bitpareto") / "fixtures" / f"{name}.json"))


def load_fixture(name: str, output_directory: str | None = None) -> ExperimentConfig:
    return parse_config(fixture_path(name), output_directory)
