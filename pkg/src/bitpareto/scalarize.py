"""Weighted-sum scalarization and the weight-simplex sweep.

For a normalized weight ``w`` the scalar problem is ``min_b sum_i w_i g_i(b)``
over the feasible allocations.  The discrete solver takes the exact argmin
over a point cloud (all ties kept); the continuous solver runs projected
gradient descent on ``{b >= 0, sum(b) <= budget}`` for convex models.
Sweeping ``w`` over the lattice ``{k/M}`` of the simplex yields S0, the set
of all scalarization solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distortion import LayeredExponentialModel, _check_model
from .errors import DimensionMismatch, EmptyInput, NoConvergence, NotConvexModel
from .graph import LayerDag
from .pareto import Cloud

TIE_TOL_DISCRETE = 1e-12
TIE_TOL_CONTINUOUS = 1e-9
DEDUP_TOL = 1e-9
MAX_ITER = 100_000


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError(f"weights must be finite and nonnegative, got {w.tolist()}")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {w.sum()}")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, raw) -> "WeightVector":
        raw = np.asarray(raw, dtype=float)
        total = raw.sum()
        if not total > 0:
            raise ValueError("weights must have a positive sum")
        return cls(raw / total)

    def __len__(self):
        return self.weights.size


def _weight(w) -> WeightVector:
    return w if isinstance(w, WeightVector) else WeightVector(w)


@dataclass(frozen=True)
class ScalarizationResult:
    weight: WeightVector
    allocations: np.ndarray | None
    distortions: np.ndarray
    objective: float

    @property
    def minimizers(self) -> list[tuple[np.ndarray | None, np.ndarray]]:
        allocs = self.allocations
        return [(None if allocs is None else allocs[k], self.distortions[k])
                for k in range(len(self.distortions))]


@dataclass(frozen=True)
class S0Set:
    entries: list[ScalarizationResult]
    distinct_distortions: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.entries)


def weight_lattice(dimension: int, resolution: int) -> np.ndarray:
    """All weights with components ``k/M`` summing to one, lexicographic in ``k``."""
    if resolution < 1 or dimension < 1:
        raise ValueError("weight lattice needs dimension >= 1 and resolution M >= 1")

    def parts(n: int, total: int):
        if n == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in parts(n - 1, total - first):
                yield (first, *rest)

    return np.array(list(parts(dimension, resolution)), dtype=float) / resolution


def lattice_size(dimension: int, resolution: int) -> int:
    return math.comb(resolution + dimension - 1, dimension - 1)


def scalarize_discrete(weight, cloud, tie_tol: float = TIE_TOL_DISCRETE) -> ScalarizationResult:
    """Exact minimizers of ``w . g`` over a finite cloud, ties within ``tie_tol`` included."""
    weight = _weight(weight)
    cloud = Cloud.of(cloud)
    if len(cloud) == 0:
        raise EmptyInput("cannot scalarize an empty cloud")
    if cloud.dimension != len(weight):
        raise DimensionMismatch(
            f"weight has {len(weight)} components, distortions have {cloud.dimension}"
        )
    values = cloud.distortions @ weight.weights
    best = float(values.min())
    hits = np.flatnonzero(values <= best + tie_tol)
    allocs = None if cloud.allocations is None else cloud.allocations[hits]
    return ScalarizationResult(weight, allocs, cloud.distortions[hits], best)


def project_capped_simplex(v: np.ndarray, budget: float) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum(x) <= budget}``."""
    x = np.maximum(v, 0.0)
    if x.sum() <= budget:
        return x
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - budget
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def scalarize_continuous(
    weight,
    model,
    dag: LayerDag,
    budget: float,
    tol: float = TIE_TOL_CONTINUOUS,
    max_iter: int = MAX_ITER,
) -> ScalarizationResult:
    """Minimize ``w . g(b)`` over the feasible set by projected gradient descent.

    Stops once the projected-gradient residual ``|b - P(b - grad)|`` is at
    most ``tol``; the objective is convex, so that point is a global minimum.
    """
    weight = _weight(weight)
    if not isinstance(model, LayeredExponentialModel):
        raise NotConvexModel(f"continuous scalarization needs a convex model, got {model.kind}")
    _check_model(model, dag)
    if len(weight) != dag.node_count:
        raise DimensionMismatch(f"weight has {len(weight)} components, dag has {dag.node_count}")
    w = weight.weights
    gains = model.gains
    base = model.base

    def objective(b):
        g = base * np.exp(-(gains @ b))
        return float(w @ g), g

    # g_i <= c_i on the feasible set bounds the Hessian, so 1/L always descends
    lipschitz = float(np.sum(w * base * np.sum(gains**2, axis=1)))
    safe = 1.0 / lipschitz if lipschitz > 0 else 1.0

    b = np.full(dag.node_count, budget / dag.node_count)
    f, g = objective(b)
    step = safe
    residual = math.inf
    for _ in range(max_iter):
        grad = -((w * g) @ gains)
        residual = float(np.linalg.norm(b - project_capped_simplex(b - grad, budget)))
        if residual <= tol:
            break
        step *= 2.0
        while True:
            trial = project_capped_simplex(b - step * grad, budget)
            move = trial - b
            f_trial, g_trial = objective(trial)
            if step <= safe or f_trial <= f + grad @ move + (move @ move) / (2 * step):
                break
            step = max(step * 0.5, safe)
        b, f, g = trial, f_trial, g_trial
    else:
        raise NoConvergence(residual, max_iter)
    return ScalarizationResult(weight, b.reshape(1, -1), g.reshape(1, -1), f)


def _dedup(points: np.ndarray, tol: float) -> np.ndarray:
    unique = np.unique(points, axis=0)
    kept = np.empty_like(unique)
    count = 0
    for p in unique:
        if count and np.min(np.linalg.norm(kept[:count] - p, axis=1)) <= tol:
            continue
        kept[count] = p
        count += 1
    return kept[:count]


def sweep_s0(
    source,
    resolution: int,
    dag: LayerDag | None = None,
    budget: float | None = None,
    tie_tol: float | None = None,
    dedup_tol: float = DEDUP_TOL,
    chunk: int = 256,
) -> S0Set:
    """Scalarize at every lattice weight of resolution ``M``.

    ``source`` is either a cloud (exact discrete sweep) or a convex model,
    in which case ``dag`` and ``budget`` are required and every weight is
    solved with :func:`scalarize_continuous`.
    """
    entries: list[ScalarizationResult] = []
    if isinstance(source, LayeredExponentialModel):
        if dag is None or budget is None:
            raise ValueError("continuous sweep needs dag and budget")
        for w in weight_lattice(dag.node_count, resolution):
            entries.append(scalarize_continuous(
                WeightVector(w), source, dag, budget,
                tol=TIE_TOL_CONTINUOUS if tie_tol is None else tie_tol,
            ))
    else:
        cloud = Cloud.of(source)
        if len(cloud) == 0:
            raise EmptyInput("cannot sweep an empty cloud")
        tie = TIE_TOL_DISCRETE if tie_tol is None else tie_tol
        lattice = weight_lattice(cloud.dimension, resolution)
        d = cloud.distortions
        for start in range(0, len(lattice), chunk):
            block = lattice[start : start + chunk]
            values = block @ d.T
            best = values.min(axis=1)
            for row, w in enumerate(block):
                hits = np.flatnonzero(values[row] <= best[row] + tie)
                allocs = None if cloud.allocations is None else cloud.allocations[hits]
                entries.append(ScalarizationResult(WeightVector(w), allocs, d[hits], float(best[row])))
    found = np.vstack([e.distortions for e in entries])
    return S0Set(entries, _dedup(found, dedup_tol))
