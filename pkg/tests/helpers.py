"""Shared graph builders, strategies and the acceptance corpus."""
from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from pbng.generators import random_bipartite
from pbng.graph import BipartiteGraph, from_edges

DENSITIES = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5]

# Running-example graph: wing numbers 1..4, splits into E1 = {e0..e4} and the
# rest under two ranges. Edge i is EXAMPLE_EDGES[i] as (u, v).
EXAMPLE_EDGES = [(0, 0), (0, 1), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2), (2, 3), (2, 4),
                 (3, 1), (3, 2), (3, 3), (3, 4), (4, 2), (4, 3), (4, 4)]
EXAMPLE_WING = [1, 1, 1, 2, 2, 3, 4, 4, 4, 3, 4, 4, 4, 4, 4, 4]
# Subgraph on the edges kept by the lower partition: e0..e6, e9, e10.
SUBGRAPH_EDGES = EXAMPLE_EDGES[:7] + EXAMPLE_EDGES[9:11]

# Partition work estimates whose in-order dynamic schedule on three workers
# takes 28 time units, against 20 when sorted longest first.
SCHEDULE_EXAMPLE = [4, 4, 12, 8, 16, 16]


def graph_of(edges) -> BipartiteGraph:
    return from_edges([a for a, _ in edges], [b for _, b in edges])


def complete(a: int, b: int) -> BipartiteGraph:
    return from_edges([u for u in range(a) for _ in range(b)],
                      [v for _ in range(a) for v in range(b)], a, b)


def corpus(n: int = 200, max_side: int = 100, seed: int = 20240601):
    """Seeded random graphs, <= max_side vertices per side, densities 0.05..0.5."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        nu, nv = (int(x) for x in rng.integers(2, max_side + 1, size=2))
        p = DENSITIES[i % len(DENSITIES)]
        out.append(random_bipartite(nu, nv, p, int(rng.integers(2**31))))
    return out


@st.composite
def graphs(draw, max_side: int = 9, min_edges: int = 0):
    nu = draw(st.integers(1, max_side))
    nv = draw(st.integers(1, max_side))
    cells = draw(st.lists(st.tuples(st.integers(0, nu - 1), st.integers(0, nv - 1)),
                          min_size=min_edges, max_size=nu * nv))
    return from_edges([a for a, _ in cells], [b for _, b in cells], nu, nv)


def dense_graphs(max_side: int = 9):
    """Graphs drawn as random 0/1 matrices (more butterflies than edge lists)."""
    @st.composite
    def build(draw):
        nu = draw(st.integers(2, max_side))
        nv = draw(st.integers(2, max_side))
        p = draw(st.sampled_from([0.3, 0.5, 0.7]))
        seed = draw(st.integers(0, 2**31 - 1))
        return random_bipartite(nu, nv, p, seed)
    return build()
