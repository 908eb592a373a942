import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import EXAMPLE_EDGES, complete, dense_graphs, graph_of
from pbng.baseline import bup_tip, bup_wing
from pbng.coarse import (DegenerateRangeError, PartitionPlan, adaptive_target, cd_tip, cd_wing,
                         default_wing_partitions, find_range)
from pbng.counting import count_butterflies
from pbng.generators import random_bipartite, skewed_bipartite
from pbng.graph import assign_priorities, from_edges
from pbng.oracle import brute_force_counts


def _scan(supports, work, tgt):
    """Smallest candidate bound by trying every support value in turn."""
    for t in sorted(set(supports)):
        if sum(w for s, w in zip(supports, work) if s <= t) >= tgt:
            return t + 1
    return max(supports) + 1


def test_find_range_examples():
    assert find_range([4, 4, 4], 1) == 5
    assert find_range([4, 4, 4], 10**6) == 5
    assert find_range([1, 2, 3], 8, work=[5, 5, 5]) == 3
    assert find_range([3, 1, 2], 5, work=[5, 5, 5]) == 2


@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 20)), min_size=1),
       st.integers(1, 200))
def test_find_range_matches_scan(pairs, tgt):
    s = [a for a, _ in pairs]
    w = [b for _, b in pairs]
    assert find_range(s, tgt, w) == _scan(s, w, tgt)


def test_find_range_errors():
    with pytest.raises(DegenerateRangeError):
        find_range([], 3)
    with pytest.raises(ValueError):
        find_range([1, 2], 0)


def test_adaptive_target():
    assert adaptive_target(100, 4) == 25
    assert adaptive_target(100, 4, 30, 30) == 25
    assert adaptive_target(100, 4, 30, 60) == 12
    assert adaptive_target(0, 3) == 1
    with pytest.raises(ValueError):
        adaptive_target(10, 0)


def test_default_partition_counts():
    assert default_wing_partitions(10**6) == 400
    assert default_wing_partitions(2 * 10**8) == 1000


def test_single_partition_keeps_initial_counts():
    g = assign_priorities(random_bipartite(20, 20, 0.3, 1))
    plan = cd_wing(g, P=1)
    assert (plan.partition_of == 1).all()
    assert (plan.init_support == count_butterflies(g).edge).all()
    plan.validate(g.edge_count)
    with pytest.raises(ValueError):
        cd_wing(g, P=0)


def test_example_graph_two_ranges():
    g = assign_priorities(graph_of(EXAMPLE_EDGES))
    for tgt in (4, 5):
        plan = cd_wing(g, P=2, tgt=tgt)
        assert plan.range_bounds.tolist() == [0, 3, 6]
        assert plan.members(1).tolist() == [0, 1, 2, 3, 4]
        assert plan.init_support[5] == 3


def _check_ranges(plan, theta):
    rb = plan.range_bounds
    lo = rb[plan.partition_of - 1]
    hi = rb[plan.partition_of]
    assert (lo <= theta).all() and (theta < hi).all()


@settings(max_examples=40)
@given(dense_graphs(max_side=12), st.integers(1, 6), st.booleans(), st.booleans())
def test_wing_ranges_contain_numbers(g, P, batch, delete):
    h = assign_priorities(g)
    plan = cd_wing(h, P=P, batch=batch, delete=delete)
    _check_ranges(plan, bup_wing(g).theta)
    assert plan.num_partitions <= P


@settings(max_examples=40)
@given(dense_graphs(max_side=12), st.integers(1, 8), st.booleans(), st.booleans(),
       st.sampled_from(["u", "v"]))
def test_tip_ranges_contain_numbers(g, P, batch, delete, side):
    plan = cd_tip(g, side, P, batch=batch, delete=delete)
    _check_ranges(plan, bup_tip(g, side).theta)


def _live_counts_wing(g, gone):
    keep = np.flatnonzero(~gone)
    h = from_edges(g.edge_u[keep], g.edge_v[keep], g.u_count, g.v_count)
    out = np.zeros(g.edge_count, dtype=np.int64)
    out[keep] = brute_force_counts(h).edge
    return out


def _live_counts_tip(g, gone):
    keep = np.flatnonzero(~gone[g.edge_u])
    h = from_edges(g.edge_u[keep], g.edge_v[keep], g.u_count, g.v_count)
    return brute_force_counts(h).vertex[: g.u_count]


@settings(max_examples=30)
@given(dense_graphs(max_side=10), st.integers(1, 5), st.booleans(), st.booleans())
def test_wing_supports_exact_after_each_iteration(g, P, batch, delete):
    h = assign_priorities(g)
    gone = np.zeros(h.edge_count, dtype=bool)
    seen = []

    def watch(frontier, sup):
        gone[frontier.active] = True
        want = np.maximum(frontier.lower, _live_counts_wing(h, gone))
        left = ~gone
        assert (sup[left] == want[left]).all()
        seen.append(frontier.iteration)

    plan = cd_wing(h, P=P, batch=batch, delete=delete, observer=watch)
    assert len(seen) == plan.metrics.iterations_rho


@settings(max_examples=30)
@given(dense_graphs(max_side=10), st.integers(1, 5), st.booleans(), st.booleans())
def test_tip_supports_exact_after_each_iteration(g, P, batch, delete):
    h = assign_priorities(g)
    gone = np.zeros(h.u_count, dtype=bool)

    def watch(frontier, sup):
        gone[frontier.active] = True
        want = np.maximum(frontier.lower, _live_counts_tip(h, gone))
        assert (sup[~gone] == want[~gone]).all()

    cd_tip(h, "u", P, batch=batch, delete=delete, observer=watch)


@settings(max_examples=40)
@given(dense_graphs(max_side=12), st.integers(2, 6))
def test_init_support_counts_upper_partitions(g, P):
    h = assign_priorities(g)
    plan = cd_wing(h, P=P)
    for i in range(1, plan.num_partitions + 1):
        want = _live_counts_wing(h, plan.partition_of < i)
        ids = plan.members(i)
        assert (plan.init_support[ids] == want[ids]).all()
    tplan = cd_tip(h, "u", P)
    for i in range(1, tplan.num_partitions + 1):
        want = _live_counts_tip(h, tplan.partition_of < i)
        ids = tplan.members(i)
        assert (tplan.init_support[ids] == want[ids]).all()


def test_tip_small_examples():
    plan = cd_tip(complete(2, 3), "v", 1)
    assert plan.init_support.tolist() == [2, 2, 2]
    assert (plan.partition_of == 1).all()
    star = complete(1, 4)
    plan = cd_tip(star, "u", 4)
    assert plan.range_bounds.tolist() == [0, 1]
    plan = cd_tip(star, "v", 4)
    assert plan.range_bounds.tolist() == [0, 1] and (plan.partition_of == 1).all()


def test_tip_recount_path_gives_same_plan():
    # a wide first frontier whose wedges outnumber a full recount
    g = skewed_bipartite(60, 60, 900, 1)
    a = cd_tip(g, "v", 2, batch=True)
    b = cd_tip(g, "v", 2, batch=False)
    assert a.metrics.extra["recounts"] > 0 and a.num_partitions == 2
    assert b.metrics.extra["recounts"] == 0
    assert (a.partition_of == b.partition_of).all()
    assert (a.init_support == b.init_support).all()
    assert (a.range_bounds == b.range_bounds).all()


def test_plan_roundtrip(tmp_path):
    g = random_bipartite(25, 25, 0.3, 2)
    plan = cd_tip(g, "v", 4)
    plan.save(str(tmp_path / "p.json"), str(tmp_path / "p.csv"))
    back = PartitionPlan.load(str(tmp_path / "p.json"), str(tmp_path / "p.csv"))
    assert (back.partition_of == plan.partition_of).all()
    assert (back.init_support == plan.init_support).all()
    assert (back.range_bounds == plan.range_bounds).all()
    assert back.side is plan.side and back.kind == "tip"
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "entity_id,partition,init_support"


def _nonempty(plan):
    return int((np.bincount(plan.partition_of, minlength=plan.num_partitions + 1)[1:] > 0).sum())


@pytest.mark.parametrize("seed", range(3))
def test_adaptive_never_fewer_partitions_than_static(seed):
    for p in (0.05, 0.1):
        g = assign_priorities(random_bipartite(100, 100, p, seed))
        total = int(count_butterflies(g).edge.sum())
        for P in (4, 8):
            adaptive = cd_wing(g, P=P)
            static = cd_wing(g, P=P, tgt=max(1, total // P))
            assert _nonempty(adaptive) >= _nonempty(static)


@pytest.mark.xfail(strict=True, reason="edge supports on dense random graphs collapse onto a "
                   "few wing levels, so far fewer than P ranges can be non-empty")
def test_all_partitions_nonempty_on_random_graph():
    g = assign_priorities(random_bipartite(100, 100, 0.1, 0))
    plan = cd_wing(g, P=8)
    assert _nonempty(plan) == 8
