"""Orthant partial order, Pareto / weakly-Pareto labelling and grid enumeration.

Relations follow the usual cone conventions on distortion vectors:

* ``x <= y``  every component ``x_i <= y_i``
* ``x < y``   ``x <= y`` and some component strictly smaller
* ``x << y``  every component strictly smaller

A point is *pareto* when no other point is ``<`` it, *weak_only* when it is
not pareto but no point is ``<<`` it, and *dominated* otherwise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .distortion import DistortionModel, _check_model
from .errors import DimensionMismatch, EmptyInput, GridTooLarge
from .graph import LayerDag

GRID_CAP = 10**7

PARETO = "pareto"
WEAK_ONLY = "weak_only"
DOMINATED = "dominated"


class Order(str, enum.Enum):
    EQUAL = "equal"
    LEQ = "leq"
    LT = "lt"
    LL = "ll"
    GEQ = "geq"
    GT = "gt"
    GG = "gg"
    INCOMPARABLE = "incomparable"

    def implies(self, other: "Order") -> bool:
        """Whether this (strongest) relation entails ``other``; e.g. LL implies LT and LEQ."""
        chains = {
            Order.EQUAL: {Order.EQUAL, Order.LEQ, Order.GEQ},
            Order.LL: {Order.LL, Order.LT, Order.LEQ},
            Order.LT: {Order.LT, Order.LEQ},
            Order.LEQ: {Order.LEQ},
            Order.GG: {Order.GG, Order.GT, Order.GEQ},
            Order.GT: {Order.GT, Order.GEQ},
            Order.GEQ: {Order.GEQ},
            Order.INCOMPARABLE: {Order.INCOMPARABLE},
        }
        return other in chains[self]


def compare(x, y, eps: float = 0.0) -> Order:
    """Strongest order relation between ``x`` and ``y``.

    Components within ``eps`` of each other count as ties.  LEQ/GEQ are
    never returned (a non-strict relation is always either EQUAL or LT/GT);
    use :meth:`Order.implies` to query them.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"cannot compare shapes {x.shape} and {y.shape}")
    less = x < y - eps
    greater = x > y + eps
    if not less.any() and not greater.any():
        return Order.EQUAL
    if not greater.any():
        return Order.LL if less.all() else Order.LT
    if not less.any():
        return Order.GG if greater.all() else Order.GT
    return Order.INCOMPARABLE


@dataclass(frozen=True)
class Cloud:
    """Feasible point cloud: allocations (may be None) paired with distortion vectors."""

    allocations: np.ndarray | None
    distortions: np.ndarray
    budget: float | None = None
    grid_step: float | None = None

    def __post_init__(self):
        d = np.array(self.distortions, dtype=float)
        if d.ndim != 2:
            raise DimensionMismatch(f"distortions must be a (n, N) array, got shape {d.shape}")
        d.flags.writeable = False
        object.__setattr__(self, "distortions", d)
        if self.allocations is not None:
            a = np.array(self.allocations, dtype=float)
            if a.shape[0] != d.shape[0] or a.ndim != 2:
                raise DimensionMismatch(
                    f"{a.shape[0]} allocations for {d.shape[0]} distortion vectors"
                )
            a.flags.writeable = False
            object.__setattr__(self, "allocations", a)

    @classmethod
    def from_pairs(cls, pairs: Iterable, budget=None, grid_step=None) -> "Cloud":
        pairs = list(pairs)
        if not pairs:
            raise EmptyInput("empty point list")
        allocs = [np.asarray(getattr(a, "bits", a), dtype=float) for a, _ in pairs]
        dists = [np.asarray(d, dtype=float).ravel() for _, d in pairs]
        if len({d.size for d in dists}) > 1:
            raise DimensionMismatch("distortion vectors of differing dimension")
        if len({a.size for a in allocs}) > 1:
            raise DimensionMismatch("allocations of differing dimension")
        return cls(np.array(allocs), np.array(dists), budget, grid_step)

    @classmethod
    def of(cls, points) -> "Cloud":
        """Coerce a Cloud, a ParetoFront, a list of (alloc, distortion) pairs or a bare distortion array."""
        if isinstance(points, Cloud):
            return points
        if isinstance(points, ParetoFront):
            return Cloud(points.allocations, points.distortions, points.budget, points.grid_step)
        if isinstance(points, np.ndarray):
            if points.size == 0:
                raise EmptyInput("empty point list")
            return cls(None, np.atleast_2d(points))
        points = list(points)
        if not points:
            raise EmptyInput("empty point list")
        first = points[0]
        if isinstance(first, tuple) and len(first) == 2 and np.ndim(first[1]) == 1:
            return cls.from_pairs(points)
        dists = [np.asarray(p, dtype=float).ravel() for p in points]
        if len({d.size for d in dists}) > 1:
            raise DimensionMismatch("distortion vectors of differing dimension")
        return cls(None, np.array(dists))

    def __len__(self):
        return self.distortions.shape[0]

    @property
    def dimension(self) -> int:
        return self.distortions.shape[1]

    def __iter__(self) -> Iterator[tuple[np.ndarray | None, np.ndarray]]:
        for k in range(len(self)):
            alloc = None if self.allocations is None else self.allocations[k]
            yield alloc, self.distortions[k]


@dataclass(frozen=True)
class LabeledPoint:
    alloc: np.ndarray | None
    distortion: np.ndarray
    label: str


@dataclass(frozen=True)
class ParetoFront:
    """Labelled cloud; ``labels[k]`` is one of ``pareto``, ``weak_only``, ``dominated``."""

    allocations: np.ndarray | None
    distortions: np.ndarray
    labels: np.ndarray
    budget: float | None = None
    grid_step: float | None = None
    eps: float = 0.0

    def __len__(self):
        return self.distortions.shape[0]

    @property
    def dimension(self) -> int:
        return self.distortions.shape[1]

    @property
    def pareto_mask(self) -> np.ndarray:
        return self.labels == PARETO

    @property
    def weak_mask(self) -> np.ndarray:
        return self.labels != DOMINATED

    @property
    def points(self) -> list[LabeledPoint]:
        return [
            LabeledPoint(
                None if self.allocations is None else self.allocations[k],
                self.distortions[k],
                str(self.labels[k]),
            )
            for k in range(len(self))
        ]

    def subset(self, mask) -> "ParetoFront":
        mask = np.asarray(mask)
        return ParetoFront(
            None if self.allocations is None else self.allocations[mask],
            self.distortions[mask],
            self.labels[mask],
            self.budget,
            self.grid_step,
            self.eps,
        )

    def weak(self) -> "ParetoFront":
        return self.subset(self.weak_mask)

    def counts(self) -> dict[str, int]:
        return {label: int(np.sum(self.labels == label)) for label in (PARETO, WEAK_ONLY, DOMINATED)}


def _lex_order(d: np.ndarray) -> np.ndarray:
    return np.lexsort(d.T[::-1])


def _pareto_mask_exact(d: np.ndarray, chunk_cells: int = 1 << 22) -> np.ndarray:
    """Mask of points no other point is ``<`` to.

    Scans in lexicographic order: any ``<``-dominator of a point is
    lexicographically smaller, and is itself ``<=`` some pareto point that
    is smaller still, so comparing against the front found so far plus the
    current chunk is exhaustive.
    """
    n, dim = d.shape
    order = _lex_order(d)
    keep = np.zeros(n, dtype=bool)
    front = np.empty((0, dim))
    start = 0
    while start < n:
        size = max(1, min(n - start, chunk_cells // max(1, (len(front) + 256) * dim)))
        size = min(size, 2048)
        idx = order[start : start + size]
        block = d[idx]
        dominated = np.zeros(len(idx), dtype=bool)
        if len(front):
            le = np.all(front[None, :, :] <= block[:, None, :], axis=2)
            lt = np.any(front[None, :, :] < block[:, None, :], axis=2)
            dominated |= np.any(le & lt, axis=1)
        le = np.all(block[None, :, :] <= block[:, None, :], axis=2)
        lt = np.any(block[None, :, :] < block[:, None, :], axis=2)
        dominated |= np.any(le & lt, axis=1)
        keep[idx[~dominated]] = True
        front = np.vstack([front, block[~dominated]])
        start += size
    return keep


def dominator_mask(candidates: np.ndarray, d: np.ndarray, strict_all: bool, eps: float = 0.0,
                   chunk_cells: int = 1 << 22) -> np.ndarray:
    """For each row of ``d``: is some row of ``candidates`` ``<<`` it (strict_all) or ``<`` it."""
    n, dim = d.shape
    out = np.zeros(n, dtype=bool)
    if len(candidates) == 0:
        return out
    size = max(1, chunk_cells // (len(candidates) * dim))
    for start in range(0, n, size):
        block = d[start : start + size]
        if strict_all:
            hit = np.all(candidates[None, :, :] < block[:, None, :] - eps, axis=2)
        else:
            le = np.all(candidates[None, :, :] <= block[:, None, :] + eps, axis=2)
            lt = np.any(candidates[None, :, :] < block[:, None, :] - eps, axis=2)
            hit = le & lt
        out[start : start + size] = np.any(hit, axis=1)
    return out


def label_points(distortions: np.ndarray, eps: float = 0.0) -> np.ndarray:
    """Label array for a ``(n, N)`` distortion array."""
    d = np.asarray(distortions, dtype=float)
    if eps == 0.0:
        pareto = _pareto_mask_exact(d)
        # any << dominator is >= some pareto point, which is then << too
        weak_killed = dominator_mask(d[pareto], d, True, 0.0)
    else:
        # slack breaks transitivity, compare against everything
        pareto = ~dominator_mask(d, d, False, eps)
        weak_killed = dominator_mask(d, d, True, eps)
    labels = np.full(len(d), DOMINATED, dtype=object)
    labels[~weak_killed] = WEAK_ONLY
    labels[pareto] = PARETO
    return labels.astype(str)


def filter_front(points, eps: float = 0.0) -> ParetoFront:
    """Label every point of ``points`` as pareto, weak_only or dominated.

    ``points`` may be a :class:`Cloud`, a list of ``(alloc, distortion)``
    pairs, or a list/array of bare distortion vectors.  Labels depend only on
    the set of distortion vectors, so equal vectors share a label and the
    result does not depend on input order.
    """
    cloud = Cloud.of(points)
    if len(cloud) == 0:
        raise EmptyInput("cannot filter an empty point list")
    labels = label_points(cloud.distortions, eps)
    return ParetoFront(
        cloud.allocations, cloud.distortions, labels, cloud.budget, cloud.grid_step, eps
    )


def grid_size(node_count: int, budget: float, step: float) -> int:
    """Number of lattice allocations (stars and bars)."""
    units = int(math.floor(budget / step + 1e-9))
    return math.comb(units + node_count, node_count)


def _compositions(node_count: int, units: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``node_count`` with sum <= units, lexicographic."""
    if node_count == 1:
        return np.arange(units + 1).reshape(-1, 1)
    parts = []
    for first in range(units + 1):
        rest = _compositions(node_count - 1, units - first)
        parts.append(np.hstack([np.full((len(rest), 1), first), rest]))
    return np.vstack(parts)


def enumerate_grid(
    model: DistortionModel,
    dag: LayerDag,
    budget: float,
    step: float,
    cap: int = GRID_CAP,
) -> Cloud:
    """Every allocation on the ``step`` lattice with total at most ``budget``, with distortions.

    Allocations come in lexicographic order of their lattice coordinates.
    """
    _check_model(model, dag)
    if not step > 0:
        raise ValueError("grid step must be positive")
    if not budget > 0:
        raise ValueError("budget must be positive")
    estimate = grid_size(dag.node_count, budget, step)
    if estimate > cap:
        raise GridTooLarge(estimate, cap)
    units = int(math.floor(budget / step + 1e-9))
    lattice = _compositions(dag.node_count, units)
    allocations = lattice * float(step)
    distortions = model.evaluate_lattice(lattice, float(step))
    return Cloud(allocations, distortions, float(budget), float(step))
