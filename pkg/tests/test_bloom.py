from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import SUBGRAPH_EDGES, complete, dense_graphs, graph_of
from pbng.bloom import (IndexBudgetError, PlanIntegrityError, build_be_index,
                        partition_be_index)
from pbng.counting import count_butterflies
from pbng.graph import assign_priorities


def _plan(partition_of):
    p = np.asarray(partition_of, dtype=np.int64)
    return SimpleNamespace(partition_of=p, num_partitions=int(p.max()))


def _edge_support(index, m):
    """Per-edge butterflies implied by the index: sum over links of k_B - 1."""
    out = np.zeros(m, dtype=np.int64)
    np.add.at(out, index.edge_ids[index.link_edge], index.bloom_k[index.link_bloom] - 1)
    return out


def test_subgraph_blooms():
    g = assign_priorities(graph_of(SUBGRAPH_EDGES))
    ix = build_be_index(g)
    v0, v1, v2 = g.u_count, g.u_count + 1, g.u_count + 2
    assert ix.bloom_k.tolist() == [2, 3]
    assert ix.bloom_start.tolist() == [v0, v2]
    assert ix.bloom_last.tolist() == [v1, v1]
    assert sorted(ix.bloom_adjacency(0)) == [(0, 1), (1, 0), (2, 3), (3, 2)]
    assert sorted(ix.bloom_adjacency(1)) == [(3, 4), (4, 3), (5, 6), (6, 5), (7, 8), (8, 7)]
    # edge (u1, v1) sits in both blooms: 1 + 2 butterflies
    assert sorted(ix.edge_adjacency(3)) == [(0, 2), (1, 4)]
    assert count_butterflies(g).edge[3] == 3


def test_subgraph_partitioned():
    g = assign_priorities(graph_of(SUBGRAPH_EDGES))
    ix = build_be_index(g)
    low, high = partition_be_index(g, ix, _plan([1] * 5 + [2] * 4))
    assert low.edge_ids.tolist() == [0, 1, 2, 3, 4]
    assert low.dump() == ["0 2 2:3 3:2 0:1 1:0", "1 3 4:3 3:4"]
    assert high.edge_ids.tolist() == [5, 6, 7, 8]
    # the pair (e3, e4) dropped out of the upper partition, so k shrinks to 2
    assert high.dump() == ["1 2 6:5 5:6 8:7 7:8"]
    assert high.bloom_ids.tolist() == [1]


@given(dense_graphs(), st.integers(1, 4))
def test_index_invariants(g, workers):
    h = assign_priorities(g)
    ix = build_be_index(h, workers)
    c = count_butterflies(h)
    assert ix.butterflies() == c.total
    assert (_edge_support(ix, h.edge_count) == c.edge).all()
    assert (ix.link_twin[ix.link_twin] == np.arange(ix.n_links)).all()
    assert (ix.link_bloom[ix.link_twin] == ix.link_bloom).all()
    assert (ix.link_twin_edge == ix.link_edge[ix.link_twin]).all()
    assert (ix.bloom_len == 2 * ix.bloom_k).all()
    assert (ix.bloom_k >= 2).all()
    ref = build_be_index(h, 1)
    assert ix.dump() == ref.dump()


@given(dense_graphs(), st.integers(1, 5), st.data())
def test_partitioned_links_and_counts(g, P, data):
    h = assign_priorities(g)
    ix = build_be_index(h)
    m = h.edge_count
    if m == 0:
        return
    part = np.asarray(data.draw(st.lists(st.integers(1, P), min_size=m, max_size=m)))
    parts = partition_be_index(h, ix, _plan(part))
    le = ix.link_edge
    lt = ix.link_twin_edge
    for i, px in enumerate(parts, start=1):
        assert px.edge_ids.tolist() == np.flatnonzero(part == i).tolist()
        want = {(int(ix.link_bloom[l]), int(le[l]), int(lt[l])) for l in range(ix.n_links)
                if part[le[l]] == i and part[lt[l]] >= i}
        got = {(int(px.bloom_ids[px.link_bloom[l]]), int(px.edge_ids[px.link_edge[l]]),
                int(px.link_twin_edge[l])) for l in range(px.n_links)}
        assert got == want
        for b in range(px.n_blooms):
            gb = px.bloom_ids[b]
            pairs = sum(1 for l in range(ix.n_links)
                        if ix.link_bloom[l] == gb and l < ix.link_twin[l]
                        and min(part[le[l]], part[lt[l]]) >= i)
            assert px.bloom_k[b] == pairs
        inside = px.link_twin >= 0
        assert (px.link_twin[px.link_twin[inside]] == np.flatnonzero(inside)).all()


def test_memory_budget():
    g = assign_priorities(complete(6, 6))
    ix = build_be_index(g)
    with pytest.raises(IndexBudgetError):
        build_be_index(g, mem_budget=100)
    assert build_be_index(g, mem_budget=10**9).dump() == ix.dump()


def test_plan_integrity():
    g = assign_priorities(complete(2, 2))
    ix = build_be_index(g)
    with pytest.raises(PlanIntegrityError):
        partition_be_index(g, ix, _plan([1, 1, 1]))
    with pytest.raises(PlanIntegrityError):
        partition_be_index(g, ix, SimpleNamespace(partition_of=np.array([0, 1, 1, 1]),
                                                  num_partitions=1))


def test_copy_is_independent():
    ix = build_be_index(assign_priorities(complete(2, 3)))
    cp = ix.copy()
    cp.link_alive[:] = False
    assert ix.link_alive.all()
    assert all(":" not in line for line in cp.dump())
    assert all(":" in line for line in ix.dump())


def test_no_butterflies_no_blooms():
    ix = build_be_index(assign_priorities(graph_of([(0, 0), (0, 1), (1, 0)])))
    assert ix.n_blooms == 0 and ix.n_links == 0 and ix.dump() == []
