"""Seeded synthetic bipartite graphs."""
from __future__ import annotations

import numpy as np

from .graph import BipartiteGraph, from_edges


def random_bipartite(u_count: int, v_count: int, p: float, seed: int) -> BipartiteGraph:
    """Erdos-Renyi G(u_count, v_count, p); edge ids follow a seeded shuffle."""
    rng = np.random.default_rng(seed)
    a = rng.random((u_count, v_count)) < p
    eu, ev = np.nonzero(a)
    perm = rng.permutation(eu.shape[0])
    return from_edges(eu[perm], ev[perm], u_count, v_count)


def skewed_bipartite(u_count: int, v_count: int, edges: int, seed: int,
                     exponent: float = 2.1) -> BipartiteGraph:
    """Chung-Lu style graph with power-law expected degrees on both sides.

    ``edges`` endpoint pairs are drawn with probability proportional to
    ``rank ** (-1 / (exponent - 1))``; duplicates collapse, so the result
    has at most ``edges`` edges.
    """
    rng = np.random.default_rng(seed)
    a = -1.0 / (exponent - 1.0)
    wu = np.arange(1, u_count + 1, dtype=np.float64) ** a
    wv = np.arange(1, v_count + 1, dtype=np.float64) ** a
    eu = rng.choice(u_count, size=edges, p=wu / wu.sum())
    ev = rng.choice(v_count, size=edges, p=wv / wv.sum())
    return from_edges(eu, ev, u_count, v_count)
