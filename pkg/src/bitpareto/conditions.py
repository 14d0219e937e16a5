"""Executable checks for the scalarization-coverage conditions.

Every checker returns a :class:`ConditionReport` whose ``witnesses`` list the
concrete counterexamples (violating triples, unsupported points, gaps).  A
check passes exactly when it found no witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .distortion import rd_envelope
from .errors import DimensionMismatch, EmptyFront, EmptyInput, TooFewSamples
from .pareto import Cloud, ParetoFront, dominator_mask, filter_front
from .scalarize import S0Set, lattice_size, weight_lattice

CONTINUITY_FACTOR = 4.0
BOX_SLACK = 1e-9
SUPPORT_TOL = 1e-9
SUPPORT_LATTICE = 64
MAX_LATTICE_WEIGHTS = 50_000


def _vec(x) -> list[float]:
    return [float(v) for v in np.asarray(x, dtype=float).ravel()]


@dataclass
class ConditionReport:
    check_name: str
    witnesses: list[dict] = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.witnesses

    def to_dict(self) -> dict:
        return {
            "check": self.check_name,
            "passed": self.passed,
            "tolerances": self.tolerances,
            "details": self.details,
            "witnesses": self.witnesses,
        }


@dataclass
class CoverageReport:
    weak_pareto_count: int
    covered_count: int
    missed: np.ndarray
    match_tolerance: float
    max_match_distance: float = 0.0

    @property
    def complete(self) -> bool:
        return self.covered_count == self.weak_pareto_count

    def to_dict(self) -> dict:
        return {
            "weak_pareto_count": self.weak_pareto_count,
            "covered_count": self.covered_count,
            "missed": [_vec(m) for m in self.missed],
            "match_tolerance": self.match_tolerance,
            "max_match_distance": self.max_match_distance,
            "complete": self.complete,
        }


def check_envelope(samples, tol: float = 1e-12, name: str = "envelope") -> ConditionReport:
    """Strict decrease and discrete convexity of ``(r, D(r))`` samples sorted by rate.

    A step counts as decreasing only if it drops by more than ``tol``; a
    second difference may dip to ``-tol`` before it counts as non-convex.
    """
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or len(pts) < 3:
        raise TooFewSamples(f"need at least 3 (rate, distortion) samples, got {len(pts)}")
    rates, values = pts[:, 0], pts[:, 1]
    if np.any(np.diff(rates) <= 0):
        raise ValueError("sample rates must be distinct and sorted ascending")
    report = ConditionReport(name, tolerances={"tol": tol})
    for k in range(len(pts) - 1):
        if not values[k] - values[k + 1] > tol:
            report.witnesses.append({
                "kind": "not_strictly_decreasing",
                "points": [_vec(pts[k]), _vec(pts[k + 1])],
            })
    for k in range(len(pts) - 2):
        (r0, d0), (r1, d1), (r2, d2) = pts[k], pts[k + 1], pts[k + 2]
        # twice the chord gap at r1: d0 - 2 d1 + d2 on even spacing
        lam = (r2 - r1) / (r2 - r0)
        second = 2 * (lam * d0 + (1 - lam) * d2 - d1)
        if second < -tol:
            report.witnesses.append({
                "kind": "not_convex",
                "points": [_vec(pts[k]), _vec(pts[k + 1]), _vec(pts[k + 2])],
                "second_difference": float(second),
            })
    return report


def _weak_points(front: ParetoFront) -> ParetoFront:
    weak = front.weak()
    if len(weak) == 0:
        raise EmptyFront("front has no weakly Pareto points")
    return weak


def check_front_continuity(front: ParetoFront, gap_threshold: float | None = None) -> ConditionReport:
    """Discrete continuity surrogate for the weak Pareto set.

    Passes when linking weak points closer than ``gap_threshold`` (Euclidean)
    leaves a single connected piece, which also bounds every nearest-neighbour
    gap.  Witnesses are the gaps separating the pieces, largest first.  The
    default threshold is ``4 * grid_step``.
    """
    weak = _weak_points(front)
    if gap_threshold is None:
        if front.grid_step is None:
            raise ValueError("gap_threshold is required for fronts without a grid step")
        gap_threshold = CONTINUITY_FACTOR * front.grid_step
    pts = np.unique(weak.distortions, axis=0)
    report = ConditionReport("front_continuity", tolerances={"gap_threshold": float(gap_threshold)})
    if len(pts) == 1:
        report.details["max_nearest_neighbor_gap"] = 0.0
        return report
    tree = cKDTree(pts)
    nn_dist, _ = tree.query(pts, k=2)
    report.details["max_nearest_neighbor_gap"] = float(nn_dist[:, 1].max())
    graph = tree.sparse_distance_matrix(tree, gap_threshold, output_type="coo_matrix")
    count, component = connected_components(graph, directed=False)
    report.details["components"] = int(count)
    if count == 1:
        return report
    gaps = {}
    for c in range(count):
        inside = component == c
        outside_tree = cKDTree(pts[~inside])
        dist, idx = outside_tree.query(pts[inside])
        best = int(np.argmin(dist))
        a = pts[inside][best]
        b = pts[~inside][idx[best]]
        key = tuple(sorted((tuple(a), tuple(b))))
        gaps[key] = float(dist[best])
    for (a, b), gap in sorted(gaps.items(), key=lambda kv: (-kv[1], kv[0])):
        report.witnesses.append({"kind": "gap", "gap": gap, "points": [list(a), list(b)]})
    return report


def _curve_order(d: np.ndarray) -> np.ndarray:
    # first coordinate ascending, ties by later coordinates descending: along a
    # 2-D weak front the second coordinate then never increases
    keys = [-d[:, k] for k in range(d.shape[1] - 1, 0, -1)] + [d[:, 0]]
    return np.lexsort(keys)


def _box_triples_by_coordinate(d: np.ndarray, slack: float):
    d = d[_curve_order(d)]
    n = len(d)
    for i in range(n):
        for j in range(i + 2, n):
            lo = np.minimum(d[i], d[j]) - slack
            hi = np.maximum(d[i], d[j]) + slack
            between = d[i + 1 : j]
            bad = np.any((between < lo) | (between > hi), axis=1)
            for k in np.flatnonzero(bad):
                yield d[i], between[k], d[j]


def _box_triples_by_allocation(weak: ParetoFront, slack: float):
    step = weak.grid_step
    units = np.round(weak.allocations / step).astype(np.int64)
    radix = int(units.max()) + 1
    powers = radix ** np.arange(units.shape[1] - 1, -1, -1, dtype=np.int64)
    keys = units @ powers
    order = np.argsort(keys)
    sorted_keys = keys[order]
    d = weak.distortions
    n = len(units)
    ii, jj = np.triu_indices(n, k=1)
    diff = units[jj] - units[ii]
    g = np.gcd.reduce(np.abs(diff), axis=1)
    has_interior = g > 1
    ii, jj, diff, g = ii[has_interior], jj[has_interior], diff[has_interior], g[has_interior]
    if len(ii) == 0:
        return
    reps = g - 1
    pair = np.repeat(np.arange(len(ii)), reps)
    offsets = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps) + 1
    lattice = units[ii[pair]] + (diff // g[:, None])[pair] * offsets[:, None]
    mid_keys = lattice @ powers
    pos = np.searchsorted(sorted_keys, mid_keys)
    pos = np.minimum(pos, len(sorted_keys) - 1)
    found = sorted_keys[pos] == mid_keys
    pair, mid = pair[found], order[pos[found]]
    a, b, c = d[ii[pair]], d[jj[pair]], d[mid]
    lo = np.minimum(a, b) - slack
    hi = np.maximum(a, b) + slack
    bad = np.any((c < lo) | (c > hi), axis=1)
    for k in np.flatnonzero(bad):
        yield a[k], c[k], b[k]


def check_bounding_box(
    front: ParetoFront,
    ordering: str = "auto",
    slack: float = BOX_SLACK,
    max_witnesses: int = 1000,
) -> ConditionReport:
    """Every weak point lying between two weak points stays in their bounding box.

    ``ordering`` decides what "between" means:

    * ``"coordinate"``: position in the curve order (first coordinate
      ascending, ties by the remaining coordinates descending).  This is the
      natural order of a two-objective front.
    * ``"allocation"``: the point's allocation lies on the lattice segment
      joining the two allocations, a one-parameter path through the front
      that works in any dimension.
    * ``"auto"``: coordinate for two objectives or fronts without lattice
      allocations, allocation otherwise.

    Witnesses are ``(a, c, b)`` triples with ``c`` outside the box of ``a``, ``b``.
    """
    weak = _weak_points(front)
    if ordering == "auto":
        lattice_ok = weak.allocations is not None and weak.grid_step is not None
        ordering = "allocation" if weak.dimension > 2 and lattice_ok else "coordinate"
    if ordering == "coordinate":
        triples = _box_triples_by_coordinate(np.unique(weak.distortions, axis=0), slack)
    elif ordering == "allocation":
        if weak.allocations is None or weak.grid_step is None:
            raise ValueError("allocation ordering needs lattice allocations and a grid step")
        triples = _box_triples_by_allocation(weak, slack)
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    report = ConditionReport(
        "bounding_box", tolerances={"slack": slack}, details={"ordering": ordering}
    )
    total = 0
    for a, c, b in triples:
        total += 1
        if len(report.witnesses) < max_witnesses:
            report.witnesses.append({"kind": "outside_box", "triple": [_vec(a), _vec(c), _vec(b)]})
    report.details["violations"] = total
    return report


def _support_lattice(dimension: int, resolution: int) -> np.ndarray:
    while resolution > 1 and lattice_size(dimension, resolution) > MAX_LATTICE_WEIGHTS:
        resolution //= 2
    return weight_lattice(dimension, resolution)


def support_gaps(points: np.ndarray, reference: np.ndarray, tol: float = SUPPORT_TOL,
                 resolution: int = SUPPORT_LATTICE) -> np.ndarray:
    """For each point, ``min_w max_x w.(p - x)`` over normalized ``w >= 0`` and reference ``x``.

    Zero (up to ``tol``) means some weighted sum is minimized at ``p``.  A
    weight-lattice scan settles most points; the remainder are solved
    exactly as small linear programs.
    """
    points = np.asarray(points, dtype=float)
    reference = np.asarray(reference, dtype=float)
    dim = points.shape[1]
    gaps = np.full(len(points), np.inf)
    lattice = _support_lattice(dim, resolution)
    floor = (lattice @ reference.T).min(axis=1)
    chunk = max(1, (1 << 22) // max(1, len(lattice)))
    for start in range(0, len(points), chunk):
        vals = lattice @ points[start : start + chunk].T - floor[:, None]
        gaps[start : start + chunk] = vals.min(axis=0)
    pending = np.flatnonzero(gaps > tol)
    if len(pending):
        c = np.zeros(dim + 1)
        c[-1] = 1.0
        a_eq = np.append(np.ones(dim), 0.0)[None, :]
        bounds = [(0, None)] * dim + [(None, None)]
        for k in pending:
            diff = points[k] - reference
            a_ub = np.hstack([diff, -np.ones((len(reference), 1))])
            res = linprog(c, A_ub=a_ub, b_ub=np.zeros(len(reference)), A_eq=a_eq, b_eq=[1.0],
                          bounds=bounds, method="highs")
            gaps[k] = res.fun if res.status == 0 else gaps[k]
    return gaps


def check_minkowski_convexity(cloud, tol: float = SUPPORT_TOL,
                              resolution: int = SUPPORT_LATTICE) -> ConditionReport:
    """Every weakly Pareto point of the cloud is a supported point.

    That is the finite-set form of convexity of the cloud plus the
    nonnegative orthant; witnesses are the unsupported weak points.
    """
    if isinstance(cloud, ParetoFront):
        front = cloud
    else:
        front = filter_front(Cloud.of(cloud))
    if len(front) == 0:
        raise EmptyInput("empty cloud")
    weak = np.unique(front.distortions[front.weak_mask], axis=0)
    pareto = np.unique(front.distortions[front.pareto_mask], axis=0)
    gaps = support_gaps(weak, pareto, tol, resolution)
    report = ConditionReport("minkowski_convexity", tolerances={"tol": tol, "lattice": resolution})
    for p, gap in zip(weak, gaps):
        if gap > tol:
            report.witnesses.append({"kind": "unsupported", "point": _vec(p), "support_gap": float(gap)})
    report.details["weak_pareto_count"] = int(len(weak))
    return report


def compare_s0_vs_weak_pareto(s0: S0Set, front: ParetoFront, match_tol: float) -> CoverageReport:
    """Match each weak Pareto distortion to its nearest S0 distortion."""
    weak = np.unique(front.distortions[front.weak_mask], axis=0)
    found = np.asarray(s0.distinct_distortions, dtype=float)
    if len(weak) == 0:
        raise EmptyFront("front has no weakly Pareto points")
    if found.ndim != 2 or found.shape[1] != weak.shape[1]:
        raise DimensionMismatch(
            f"S0 has dimension {found.shape[-1]}, front has {weak.shape[1]}"
        )
    dist, _ = cKDTree(found).query(weak)
    covered = dist <= match_tol
    return CoverageReport(
        weak_pareto_count=int(len(weak)),
        covered_count=int(covered.sum()),
        missed=weak[~covered],
        match_tolerance=float(match_tol),
        max_match_distance=float(dist.max()),
    )


def check_upper_set(front: ParetoFront, budget: float | None = None, tol: float = 1e-9) -> ConditionReport:
    """Every cloud point sits above some weak Pareto point, and weak labels are genuine.

    With ``budget`` and lattice allocations, the covering weak point must
    also spend the whole budget (to within one grid step).
    """
    if len(front) == 0:
        raise EmptyInput("empty front")
    d = front.distortions
    weak_mask = front.weak_mask
    weak = d[weak_mask]
    report = ConditionReport("upper_set", tolerances={"tol": tol})
    killed = dominator_mask(d, weak, strict_all=True)
    for k in np.flatnonzero(killed):
        report.witnesses.append({"kind": "mislabeled_weak", "point": _vec(weak[k])})
    if len(weak) == 0:
        report.witnesses.append({"kind": "no_weak_points"})
        return report

    def covered_by(candidates: np.ndarray) -> np.ndarray:
        out = np.zeros(len(d), dtype=bool)
        if len(candidates) == 0:
            return out
        chunk = max(1, (1 << 22) // (len(candidates) * d.shape[1]))
        for start in range(0, len(d), chunk):
            block = d[start : start + chunk]
            out[start : start + chunk] = np.any(
                np.all(candidates[None, :, :] <= block[:, None, :] + tol, axis=2), axis=1
            )
        return out

    covered = covered_by(weak)
    for k in np.flatnonzero(~covered):
        report.witnesses.append({"kind": "uncovered", "point": _vec(d[k])})
    if budget is not None and front.allocations is not None:
        slack = (front.grid_step or 0.0) + tol
        totals = front.allocations[weak_mask].sum(axis=1)
        saturated = weak[totals >= budget - slack]
        report.tolerances["saturation_slack"] = slack
        lacking = covered & ~covered_by(saturated)
        for k in np.flatnonzero(lacking):
            report.witnesses.append({"kind": "no_saturated_cover", "point": _vec(d[k])})
    return report


def check_all(model, dag, front: ParetoFront, budget: float, *,
              envelope_tol: float = 1e-12, continuity_factor: float = CONTINUITY_FACTOR,
              support_tol: float = SUPPORT_TOL) -> list[ConditionReport]:
    """Run every checker on one enumerated front."""
    reports = []
    step = front.grid_step
    for i in range(dag.node_count):
        env = rd_envelope(model, dag, i, budget, sample_step=step)
        samples = env.samples()
        if len(samples) >= 3:
            reports.append(check_envelope(samples, envelope_tol, name=f"envelope_{i}"))
    threshold = continuity_factor * step if step else None
    reports.append(check_front_continuity(front, threshold))
    reports.append(check_bounding_box(front))
    reports.append(check_minkowski_convexity(front, support_tol))
    reports.append(check_upper_set(front, budget))
    return reports

