import numpy as np
import pytest
from hypothesis import given

from helpers import complete, dense_graphs, graph_of
from pbng.baseline import bup_tip, bup_wing
from pbng.fine import tip_decomposition, wing_decomposition
from pbng.graph import from_edges
from pbng.oracle import (OracleSizeError, brute_force_counts, counts_from_butterflies,
                         enumerate_butterflies, oracle_entity_numbers, verify_hierarchy)


def test_enumerate_k23():
    bl = enumerate_butterflies(complete(2, 3))
    assert sorted(bl) == [(0, 0, 1, 1), (0, 0, 1, 2), (0, 1, 1, 2)]


def test_enumerate_none():
    assert len(enumerate_butterflies(graph_of([(0, 0), (0, 1), (1, 0)]))) == 0


@given(dense_graphs())
def test_enumeration_agrees_with_matrix_counts(g):
    bl = enumerate_butterflies(g)
    a = counts_from_butterflies(g, bl)
    b = brute_force_counts(g)
    assert a.total == b.total
    assert (a.vertex == b.vertex).all() and (a.edge == b.edge).all()
    assert len(set(bl)) == len(bl)
    for u, v, u2, v2 in bl:
        assert u < u2 and v < v2


def test_size_guard():
    g = from_edges([0], [0], 5000, 1)
    with pytest.raises(OracleSizeError):
        brute_force_counts(g)
    with pytest.raises(OracleSizeError):
        oracle_entity_numbers(g, "wing")


def test_oracle_numbers_on_complete_graph():
    g = complete(3, 4)
    # each edge: 2 other rows x 3 other columns
    assert (oracle_entity_numbers(g, "wing") == 6).all()
    assert (oracle_entity_numbers(g, "tip-u") == 12).all()
    assert (oracle_entity_numbers(g, "tip-v") == 9).all()
    with pytest.raises(ValueError):
        oracle_entity_numbers(g, "edge")


def test_oracle_rounds_on_chain():
    # two squares sharing edge (u1, v1): that edge has 2 butterflies, the
    # others 1; it is left alone after the first round and goes in a second
    g = graph_of([(0, 0), (0, 1), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2)])
    th, rounds = oracle_entity_numbers(g, "wing", return_rounds=True)
    assert th.tolist() == [1] * 7
    assert rounds == 2


def test_verify_hierarchy_flags_mutation():
    g = complete(3, 3)
    good = bup_wing(g)
    assert verify_hierarchy(g, good).passed
    bad = bup_wing(g)
    bad.entity_numbers[0] = 5
    rep = verify_hierarchy(g, bad)
    assert not rep.passed
    assert {c.check for c in rep.failures()} >= {"min-butterflies", "maximality"}
    assert any(line.startswith("FAIL") for line in rep.lines())


def test_verify_hierarchy_flags_too_low():
    g = complete(3, 3)
    r = bup_tip(g, "u")
    r.entity_numbers[:] = 1
    assert verify_hierarchy(g, r).passed          # self-consistent at level 1
    rep = verify_hierarchy(g, r, levels=[1, 6])
    assert [(c.check, c.k) for c in rep.failures()] == [("maximality", 6)]


@given(dense_graphs(max_side=8))
def test_partitioned_results_pass(g):
    assert verify_hierarchy(g, wing_decomposition(g, 4)).passed
    assert verify_hierarchy(g, tip_decomposition(g, "u", 4)).passed


def test_selected_levels_only():
    g = complete(2, 3)
    rep = verify_hierarchy(g, bup_wing(g), levels=[1, 2])
    assert {c.k for c in rep.checks} == {1, 2}
    assert rep.passed
    assert isinstance(rep.checks[0].passed, (bool, np.bool_))
