"""Per-resolution distortion models, R-D envelopes and their inverse maps.

Two model families are provided.  :class:`LayeredExponentialModel` is the
analytic, convex family

    g_i(b) = c_i * exp(-sum_{j in pi_i} gamma_ij * b_j)

whose envelopes are strictly decreasing and convex by construction.
:class:`TabulatedModel` is an explicit lookup table over a lattice of
allocations and is free to break any of those properties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySlice,
    InfeasibleAllocation,
    NotMonotone,
    OffGrid,
    OutOfRange,
)
from .graph import LayerDag

FEASIBILITY_TOL = 1e-9
BISECTION_TOL = 1e-9
BISECTION_MAX_ITER = 200


@dataclass(frozen=True)
class BitAllocation:
    """Nonnegative per-layer bits under a total budget (a point of the feasible set)."""

    bits: np.ndarray
    budget: float

    def __post_init__(self):
        bits = np.array(self.bits, dtype=float).ravel()
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)
        if not self.budget > 0:
            raise InfeasibleAllocation(f"budget must be positive, got {self.budget}")
        check_feasible(bits, self.budget)

    @property
    def total(self) -> float:
        return float(self.bits.sum())

    def __len__(self):
        return self.bits.size


def check_feasible(bits: np.ndarray, budget: float, tol: float = FEASIBILITY_TOL) -> None:
    bits = np.asarray(bits, dtype=float)
    negative = np.flatnonzero(bits < 0)
    if negative.size:
        i = int(negative[0])
        raise InfeasibleAllocation(f"b_{i} = {bits[i]} is negative")
    total = float(bits.sum())
    if total > budget * (1 + tol) + tol:
        raise InfeasibleAllocation(f"sum of bits {total} exceeds budget {budget}")


def _as_bits(alloc) -> np.ndarray:
    if isinstance(alloc, BitAllocation):
        return alloc.bits
    return np.asarray(alloc, dtype=float)


class LayeredExponentialModel:
    """``g_i(b) = c_i exp(-gains[i] . b)``, gains supported on the resolution subgraph."""

    kind = "layered-exponential"

    def __init__(self, base: np.ndarray, gains: np.ndarray):
        self.base = np.array(base, dtype=float)
        self.gains = np.array(gains, dtype=float)
        n = self.base.size
        if self.gains.shape != (n, n):
            raise DimensionMismatch(f"gain matrix must be {n}x{n}, got {self.gains.shape}")
        if np.any(self.base <= 0):
            raise ValueError("every base distortion c_i must be positive")
        if np.any(self.gains < 0):
            raise ValueError("gains must be nonnegative")
        if np.any(self.gains.max(axis=1) <= 0):
            raise ValueError("every resolution needs at least one positive gain")
        self.base.flags.writeable = False
        self.gains.flags.writeable = False

    @classmethod
    def from_gain_maps(
        cls,
        dag: LayerDag,
        base=None,
        gains: Mapping[int, Mapping[int, float]] | None = None,
    ) -> "LayeredExponentialModel":
        """Build from sparse per-resolution gain maps.

        Nodes of a resolution subgraph without an explicit gain get 1.  A gain
        on a node outside the subgraph is rejected with KeyError.
        """
        n = dag.node_count
        base = np.ones(n) if base is None else np.broadcast_to(np.asarray(base, float), (n,))
        matrix = np.zeros((n, n))
        gains = gains or {}
        for i in range(n):
            members = dag.members(i)
            given = {int(j): float(v) for j, v in gains.get(i, {}).items()}
            outside = sorted(set(given) - set(members))
            if outside:
                raise KeyError(
                    f"resolution {i}: gain given for node {outside[0]} outside its subgraph {list(members)}"
                )
            for j in members:
                matrix[i, j] = given.get(j, 1.0)
        return cls(base, matrix)

    @property
    def node_count(self) -> int:
        return self.base.size

    def evaluate(self, bits: np.ndarray) -> np.ndarray:
        """Distortions for one allocation (shape ``(N,)``) or many (``(n, N)``)."""
        bits = np.asarray(bits, dtype=float)
        return self.base * np.exp(-(bits @ self.gains.T))

    def evaluate_lattice(self, units: np.ndarray, step: float) -> np.ndarray:
        """Distortions at ``units * step``.

        The exponent is summed over integer lattice coordinates before
        scaling, so allocations with equal true exponents get bit-identical
        distortions (for dyadic gains) and exact ties survive.
        """
        return self.base * np.exp(-(np.asarray(units) @ self.gains.T) * step)

    def max_gain(self, i: int) -> float:
        return float(self.gains[i].max())


class TabulatedModel:
    """Distortion table over lattice allocations with spacing ``step``; no extrapolation."""

    kind = "tabulated"

    def __init__(self, allocations, distortions, step: float):
        self.allocations = np.array(allocations, dtype=float)
        self.distortions = np.array(distortions, dtype=float)
        if self.allocations.ndim != 2 or self.allocations.shape != self.distortions.shape:
            raise DimensionMismatch(
                f"allocation table {self.allocations.shape} and distortion table "
                f"{self.distortions.shape} must be matching (rows, N) arrays"
            )
        if not step > 0:
            raise ValueError("step must be positive")
        if not np.all(np.isfinite(self.distortions)) or np.any(self.distortions < 0):
            raise ValueError("tabulated distortions must be finite and nonnegative")
        self.step = float(step)
        self._index: dict[tuple[int, ...], int] = {}
        for row, bits in enumerate(self.allocations):
            key = self._key(bits)
            if key is None:
                raise OffGrid(f"table row {row} {bits.tolist()} is not on the step-{step} lattice")
            self._index[key] = row
        self.allocations.flags.writeable = False
        self.distortions.flags.writeable = False

    @property
    def node_count(self) -> int:
        return self.allocations.shape[1]

    def _key(self, bits) -> tuple[int, ...] | None:
        units = np.asarray(bits, dtype=float) / self.step
        rounded = np.round(units)
        if np.any(np.abs(units - rounded) > 1e-6):
            return None
        return tuple(int(u) for u in rounded)

    def lookup(self, bits) -> np.ndarray:
        key = self._key(bits)
        row = None if key is None else self._index.get(key)
        if row is None:
            raise OffGrid(f"allocation {np.asarray(bits).tolist()} is not in the table")
        return self.distortions[row]

    def evaluate_lattice(self, units: np.ndarray, step: float) -> np.ndarray:
        ratio = step / self.step
        if abs(ratio - round(ratio)) > 1e-9:
            return self.evaluate(np.asarray(units) * step)
        ratio = int(round(ratio))
        rows = []
        for u in np.asarray(units):
            row = self._index.get(tuple(int(x) * ratio for x in u))
            if row is None:
                raise OffGrid(f"allocation {(u * step).tolist()} is not in the table")
            rows.append(row)
        return self.distortions[rows]

    def evaluate(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=float)
        if bits.ndim == 1:
            return self.lookup(bits).copy()
        return np.array([self.lookup(b) for b in bits])


DistortionModel = LayeredExponentialModel | TabulatedModel


def _check_model(model, dag: LayerDag) -> None:
    if model.node_count != dag.node_count:
        raise DimensionMismatch(
            f"model has {model.node_count} resolutions, dag has {dag.node_count} nodes"
        )


def distortion_vector(model: DistortionModel, dag: LayerDag, alloc) -> np.ndarray:
    """Distortion at every resolution for one feasible allocation."""
    _check_model(model, dag)
    bits = _as_bits(alloc)
    if bits.shape != (dag.node_count,):
        raise DimensionMismatch(f"allocation has shape {bits.shape}, expected ({dag.node_count},)")
    if isinstance(alloc, BitAllocation):
        check_feasible(bits, alloc.budget)
    elif np.any(bits < 0):
        check_feasible(bits, math.inf)
    return model.evaluate(bits)


@dataclass(frozen=True)
class RdEnvelope:
    """Lower envelope ``D_i(r)`` of resolution ``i`` on ``[0, budget]``."""

    resolution: int
    budget: float
    evaluator: Callable[[float], float] = field(repr=False)
    rates: np.ndarray = field(repr=False)

    def __call__(self, r: float) -> float:
        if r < -FEASIBILITY_TOL or r > self.budget * (1 + FEASIBILITY_TOL) + FEASIBILITY_TOL:
            raise OutOfRange(f"rate {r} outside [0, {self.budget}]")
        return float(self.evaluator(min(max(r, 0.0), self.budget)))

    def samples(self) -> list[tuple[float, float]]:
        return [(float(r), self(r)) for r in self.rates]


def _rate_grid(budget: float, step: float) -> np.ndarray:
    count = int(math.floor(budget / step + 1e-9))
    return np.arange(count + 1) * step


def rd_envelope(
    model: DistortionModel,
    dag: LayerDag,
    i: int,
    budget: float,
    sample_step: float | None = None,
) -> RdEnvelope:
    """R-D envelope of resolution ``i``.

    Layered-exponential: ``c_i exp(-max_j gamma_ij r)`` (all rate on the
    highest-gain layer).  Tabulated: for every lattice total rate ``r`` over
    the subgraph, the minimum tabulated distortion among allocations with
    that total; linear interpolation between neighbouring slices.
    """
    _check_model(model, dag)
    dag.subgraph(i)
    if isinstance(model, LayeredExponentialModel):
        c, gamma = float(model.base[i]), model.max_gain(i)
        rates = _rate_grid(budget, sample_step or budget / 100)
        return RdEnvelope(i, float(budget), lambda r: c * math.exp(-gamma * r), rates)

    step = model.step
    members = list(dag.members(i))
    feasible = model.allocations.sum(axis=1) <= budget * (1 + FEASIBILITY_TOL) + FEASIBILITY_TOL
    units = np.round(model.allocations[feasible][:, members].sum(axis=1) / step).astype(int)
    values = model.distortions[feasible][:, i]
    slices: dict[int, float] = {}
    for u, v in zip(units.tolist(), values.tolist()):
        if u not in slices or v < slices[u]:
            slices[u] = v

    def evaluate(r: float) -> float:
        pos = r / step
        lo = int(math.floor(pos + 1e-9))
        frac = pos - lo
        if abs(frac) <= 1e-9:
            if lo not in slices:
                raise EmptySlice(f"resolution {i}: no table entry with total rate {lo * step}")
            return slices[lo]
        hi = lo + 1
        missing = [k for k in (lo, hi) if k not in slices]
        if missing:
            raise EmptySlice(f"resolution {i}: no table entry with total rate {missing[0] * step}")
        return (1 - frac) * slices[lo] + frac * slices[hi]

    rates = np.array(sorted(slices)) * step
    return RdEnvelope(i, float(budget), evaluate, rates)


def inverse_rate(
    envelope: RdEnvelope,
    d: float,
    tol: float = BISECTION_TOL,
    max_iter: int = BISECTION_MAX_ITER,
) -> float:
    """Rate ``r`` in ``[0, budget]`` with ``|D(r) - d| <= tol``, by bisection."""
    samples = envelope.samples()
    values = [v for _, v in samples]
    for k in range(len(values) - 1):
        if not values[k + 1] < values[k]:
            raise NotMonotone(
                f"envelope of resolution {envelope.resolution} is not strictly decreasing "
                f"between r={samples[k][0]} and r={samples[k + 1][0]}"
            )
    lo, hi = 0.0, envelope.budget
    top, bottom = envelope(lo), envelope(hi)
    if d == top:
        return lo
    if d == bottom:
        return hi
    if not bottom - tol <= d <= top + tol:
        raise OutOfRange(f"distortion {d} outside envelope image [{bottom}, {top}]")
    r = 0.5 * (lo + hi)
    for _ in range(max_iter):
        r = 0.5 * (lo + hi)
        value = envelope(r)
        if abs(value - d) <= tol:
            return r
        if value > d:
            lo = r
        else:
            hi = r
    return r
