import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bitpareto.config import load_fixture
from bitpareto.errors import DimensionMismatch, EmptyInput, GridTooLarge
from bitpareto.pareto import (
    Cloud,
    Order,
    compare,
    enumerate_grid,
    filter_front,
    grid_size,
)

from conftest import naive_labels

E = math.exp


@pytest.mark.parametrize("x, y, expected", [
    ((1, 2), (1, 3), Order.LT),
    ((0, 0), (1, 1), Order.LL),
    ((1, 2), (2, 1), Order.INCOMPARABLE),
    ((1, 3), (1, 2), Order.GT),
    ((2, 2), (1, 1), Order.GG),
    ((1, 1), (1, 1), Order.EQUAL),
])
def test_compare(x, y, expected):
    assert compare(x, y) is expected


def test_compare_implications():
    assert Order.LL.implies(Order.LT) and Order.LL.implies(Order.LEQ)
    assert not Order.LT.implies(Order.LL)
    assert Order.EQUAL.implies(Order.LEQ) and Order.EQUAL.implies(Order.GEQ)
    assert not Order.INCOMPARABLE.implies(Order.LEQ)


def test_compare_eps_and_shape():
    assert compare((1.0, 2.0), (1.0 + 1e-12, 2.0), eps=1e-9) is Order.EQUAL
    with pytest.raises(DimensionMismatch):
        compare((1, 2), (1, 2, 3))


def labels_of(points):
    return list(filter_front(points).labels)


def test_all_incomparable():
    assert labels_of([(1, 3), (2, 2), (3, 1)]) == ["pareto"] * 3


def test_direct_dominance():
    # (2, 2) < (2, 3) but nothing is << it, so it stays weakly optimal
    assert labels_of([(1, 3), (2, 2), (2, 3)]) == ["pareto", "pareto", "weak_only"]
    assert compare((2, 2), (2, 3)) is Order.LT
    assert labels_of([(1, 3), (2, 2), (3, 3)]) == ["pareto", "pareto", "dominated"]


def test_weak_only_gap():
    assert labels_of([(1, 3), (1, 4)]) == ["pareto", "weak_only"]


def test_duplicates_share_label():
    assert labels_of([(1, 3), (1, 3), (2, 2), (3, 3), (3, 3)]) == [
        "pareto", "pareto", "pareto", "dominated", "dominated"]


def test_empty_and_ragged():
    with pytest.raises(EmptyInput):
        filter_front([])
    with pytest.raises(DimensionMismatch):
        filter_front([(1, 2), (1, 2, 3)])


def test_pairs_keep_allocations():
    front = filter_front([((0.0, 1.0), (1.0, 2.0)), ((1.0, 0.0), (2.0, 1.0))])
    np.testing.assert_array_equal(front.allocations, [[0, 1], [1, 0]])


cloud_strategy = st.integers(1, 4).flatmap(
    lambda dim: arrays(np.float64, st.tuples(st.integers(1, 60), st.just(dim)),
                       elements=st.integers(0, 5).map(float)))


@settings(max_examples=300, deadline=None)
@given(cloud_strategy)
def test_matches_naive_oracle(d):
    np.testing.assert_array_equal(filter_front(d).labels, naive_labels(d))


@settings(max_examples=100, deadline=None)
@given(cloud_strategy, st.randoms(use_true_random=False))
def test_order_independent(d, rnd):
    perm = list(range(len(d)))
    rnd.shuffle(perm)
    a = filter_front(d).labels
    b = filter_front(d[perm]).labels
    np.testing.assert_array_equal(a[perm], b)


@settings(max_examples=100, deadline=None)
@given(cloud_strategy)
def test_pareto_subset_is_idempotent(d):
    front = filter_front(d)
    again = filter_front(front.distortions[front.pareto_mask])
    assert set(again.labels) == {"pareto"}


@settings(max_examples=100, deadline=None)
@given(cloud_strategy)
def test_cone_form_of_pareto(d):
    # p pareto iff every cloud point in p - R+^N equals p
    front = filter_front(d)
    for p, label in zip(d, front.labels):
        below = d[np.all(d <= p, axis=1)]
        assert (label == "pareto") == bool(np.all(below == p))


@settings(max_examples=100, deadline=None)
@given(cloud_strategy)
def test_pareto_points_pairwise_incomparable(d):
    front = filter_front(d)
    pts = front.distortions[front.pareto_mask]
    for x in pts:
        for y in pts:
            assert compare(x, y) in (Order.EQUAL, Order.INCOMPARABLE)


def test_eps_slack_labels():
    d = np.array([[1.0, 1.0], [1.0 + 1e-12, 1.0 - 1e-12]])
    assert list(filter_front(d).labels) == ["pareto", "pareto"]
    # within slack the pair counts as equal
    assert list(filter_front(d, eps=1e-9).labels) == ["pareto", "pareto"]
    d = np.array([[1.0, 1.0], [1.5, 1.0 + 1e-12]])
    assert list(filter_front(d, eps=1e-9).labels) == ["pareto", "weak_only"]


def test_grid_count_and_order():
    cfg = load_fixture("diamond3")
    cloud = enumerate_grid(cfg.model, cfg.dag, 1.0, 0.5)
    assert len(cloud) == 10 == math.comb(5, 3)
    keys = [tuple(a) for a in cloud.allocations]
    assert keys == sorted(keys)
    assert all(a.sum() <= 1.0 + 1e-12 for a in cloud.allocations)


def test_grid_single_node():
    from bitpareto.distortion import LayeredExponentialModel
    from bitpareto.graph import build_dag
    dag = build_dag(1, [])
    model = LayeredExponentialModel.from_gain_maps(dag)
    cloud = enumerate_grid(model, dag, 1.0, 0.25)
    np.testing.assert_allclose(cloud.allocations.ravel(), [0, 0.25, 0.5, 0.75, 1])


def test_grid_cap():
    cfg = load_fixture("diamond3")
    with pytest.raises(GridTooLarge) as info:
        enumerate_grid(cfg.model, cfg.dag, 1.0, 0.001, cap=1000)
    assert info.value.estimate == grid_size(3, 1.0, 0.001)


def test_diamond_coarse_grid_weak_points():
    cfg = load_fixture("diamond3")
    front = filter_front(enumerate_grid(cfg.model, cfg.dag, 1.0, 0.5))
    weak = {tuple(np.round(p, 5)) for p in front.distortions[front.weak_mask]}
    assert (0.36788, 0.36788, 0.36788) in weak
    assert (1.0, 0.13534, 1.0) in weak


@pytest.mark.parametrize("name", ["diamond3", "qcif-chain", "flat-chain3", "dag5"])
def test_weak_points_spend_the_budget(name):
    cfg = load_fixture(name)
    front = filter_front(enumerate_grid(cfg.model, cfg.dag, cfg.budget, cfg.grid_step))
    totals = front.allocations[front.weak_mask].sum(axis=1)
    assert np.all(totals >= cfg.budget - cfg.grid_step - 1e-9)


def test_lattice_ties_are_exact():
    # equal exponents from different allocations must compare equal
    cfg = load_fixture("flat-chain3")
    cloud = enumerate_grid(cfg.model, cfg.dag, 1.0, 0.05)
    full = cloud.distortions[np.isclose(cloud.allocations[:, 0], 1.0)][0]
    assert np.all(cloud.distortions >= full)


def test_cloud_from_front_round_trip():
    front = filter_front([((0.0,), (1.0,)), ((1.0,), (0.5,))])
    cloud = Cloud.of(front)
    assert len(cloud) == 2 and cloud.dimension == 1


def test_homogeneous_chain_strict_front_is_one_image():
    cfg = load_fixture("flat-chain3")
    front = filter_front(enumerate_grid(cfg.model, cfg.dag, 1.0, 0.25))
    optimum = np.full(3, E(-1))
    pareto = np.unique(front.distortions[front.pareto_mask], axis=0)
    np.testing.assert_allclose(pareto, [optimum], atol=1e-15)
    assert np.all(front.distortions >= pareto[0])


def test_homogeneous_chain_keeps_weak_only_points():
    # optimum ties the last two resolutions, so nothing is << this point
    cfg = load_fixture("flat-chain3")
    front = filter_front(enumerate_grid(cfg.model, cfg.dag, 1.0, 0.25))
    k = np.flatnonzero(np.all(np.isclose(front.allocations, [0.75, 0.25, 0.0]), axis=1))[0]
    np.testing.assert_allclose(front.distortions[k], [E(-0.75), E(-1), E(-1)])
    assert front.labels[k] == "weak_only"
