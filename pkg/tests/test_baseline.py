import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import EXAMPLE_EDGES, EXAMPLE_WING, complete, dense_graphs, graph_of
from pbng.baseline import bup_tip, bup_wing, extract_k_level
from pbng.counting import count_butterflies
from pbng.graph import VertexSide
from pbng.oracle import oracle_entity_numbers, verify_hierarchy


@pytest.mark.parametrize("a,b,wing,tip_u,tip_v", [
    (2, 2, 1, 1, 1),
    (2, 3, 2, 3, 2),
    (3, 3, 4, 6, 6),
    (1, 6, 0, 0, 0),
])
def test_complete_graphs(a, b, wing, tip_u, tip_v):
    g = complete(a, b)
    assert (bup_wing(g).theta == wing).all()
    assert (bup_wing(g, use_index=False).theta == wing).all()
    assert (bup_tip(g, VertexSide.U).theta == tip_u).all()
    assert (bup_tip(g, "v").theta == tip_v).all()


def test_example_graph_wing_numbers():
    g = graph_of(EXAMPLE_EDGES)
    assert bup_wing(g).theta.tolist() == EXAMPLE_WING
    assert bup_wing(g, use_index=False).theta.tolist() == EXAMPLE_WING


@given(dense_graphs())
def test_matches_oracle(g):
    th, rounds = oracle_entity_numbers(g, "wing", return_rounds=True)
    r = bup_wing(g)
    assert (r.theta == th).all()
    assert r.metrics.iterations_rho == rounds
    assert (bup_wing(g, use_index=False).theta == th).all()
    for side in ("u", "v"):
        th, rounds = oracle_entity_numbers(g, f"tip-{side}", return_rounds=True)
        r = bup_tip(g, side)
        assert (r.theta == th).all()
        assert r.metrics.iterations_rho == rounds


@given(dense_graphs())
def test_numbers_bounded_by_initial_support(g):
    c = count_butterflies(g)
    assert (bup_wing(g).theta <= c.edge).all()
    assert (bup_tip(g, "u").theta <= c.vertex[: g.u_count]).all()


@given(dense_graphs(), st.randoms(use_true_random=False))
def test_tie_order_does_not_matter(g, rnd):
    ek = list(range(g.edge_count))
    rnd.shuffle(ek)
    uk = list(range(g.u_count))
    rnd.shuffle(uk)
    assert (bup_wing(g, tie_key=np.array(ek)).theta == bup_wing(g).theta).all()
    assert (bup_wing(g, compact=False).theta == bup_wing(g).theta).all()
    assert (bup_tip(g, "u", tie_key=np.array(uk)).theta == bup_tip(g, "u").theta).all()


def test_tie_key_shape_checked():
    with pytest.raises(ValueError):
        bup_wing(complete(2, 2), tie_key=np.arange(3))


def test_metrics_populated():
    r = bup_wing(complete(3, 3))
    m = r.metrics
    assert m.support_updates > 0 and m.links_traversed > 0 and m.wall_time >= 0
    assert set(m.phase_times) == {"count", "index", "peel"}


def _two_squares_and_tail():
    # two disjoint K22s (edges 0-3, 4-7) and a pendant edge 8
    return graph_of([(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3), (4, 4)])


def test_extract_levels_wing():
    g = _two_squares_and_tail()
    r = bup_wing(g)
    assert [c.tolist() for c in extract_k_level(g, r, 0)] == [[0, 1, 2, 3], [4, 5, 6, 7], [8]]
    assert [c.tolist() for c in extract_k_level(g, r, 1)] == [[0, 1, 2, 3], [4, 5, 6, 7]]
    assert extract_k_level(g, r, 2) == []


def test_extract_levels_tip():
    g = _two_squares_and_tail()
    r = bup_tip(g, "u")
    assert [c.tolist() for c in extract_k_level(g, r, 1)] == [[0, 1], [2, 3]]
    assert [c.tolist() for c in extract_k_level(g, r, 0)] == [[0, 1], [2, 3], [4]]
    r = bup_tip(g, "v")
    assert [c.tolist() for c in extract_k_level(g, r, 1)] == [[0, 1], [2, 3]]


def test_extract_complete_graph_single_component():
    g = complete(2, 3)
    comps = extract_k_level(g, bup_wing(g), 2)
    assert [c.tolist() for c in comps] == [list(range(6))]
    assert extract_k_level(g, bup_wing(g), 3) == []


@given(dense_graphs(max_side=7))
def test_levels_are_valid_hierarchies(g):
    assert verify_hierarchy(g, bup_wing(g)).passed
    assert verify_hierarchy(g, bup_tip(g, "u")).passed
    assert verify_hierarchy(g, bup_tip(g, "v")).passed
