"""Sequential bottom-up peeling (BUP) for wing and tip decomposition.

These are the reference implementations PBNG is checked against. The
extract-min queue is a lazy binary heap keyed by
``(support, round, tie_key, id)``: ``round`` reproduces the synchronous
rounds of a peel-all-minimum scheme (an entity lowered to the current
minimum during a round waits for the next one), which is what
``iterations_rho`` reports. Within a round entities leave by ascending
tie key, the entity id unless the caller supplies another order.
"""
from __future__ import annotations

import heapq
import time
from typing import Optional, Union

import numba as nb
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .bloom import build_be_index
from .counting import count_butterflies
from .graph import (BipartiteGraph, VertexSide, assign_priorities, from_edges,
                    induced_subgraph)
from .results import DecompositionResult, RunMetrics


@nb.njit(cache=True)
def _heap_init(sup, tiekey):
    heap = [(sup[0], np.int64(0), tiekey[0], np.int64(0))]
    for e in range(1, sup.shape[0]):
        heap.append((sup[e], np.int64(0), tiekey[e], np.int64(e)))
    heapq.heapify(heap)
    return heap


@nb.njit(cache=True, nogil=True)
def peel_with_index(sup, tiekey, bloom_k, bloom_off, bloom_links, bloom_len, link_edge,
                    link_twin, link_bloom, link_alive, edge_off, edge_links, compact):
    """Peel every local edge of an index to exhaustion; mutates all inputs.

    Returns (theta, support_updates, links_traversed, rounds).
    """
    n = sup.shape[0]
    theta = np.zeros(n, dtype=np.int64)
    if n == 0:
        return theta, 0, 0, 0
    peeled = np.zeros(n, dtype=np.bool_)
    rid = np.zeros(n, dtype=np.int64)
    heap = _heap_init(sup, tiekey)
    cur_r = -1
    cur_v = -1
    rounds = 0
    updates = 0
    traversed = 0
    while len(heap) > 0:
        s, r, _, e = heapq.heappop(heap)
        if peeled[e] or s != sup[e] or r != rid[e]:
            continue
        if s != cur_v or r > cur_r:
            cur_r += 1
            cur_v = s
            rounds += 1
        nxt = cur_r + 1
        theta[e] = s
        peeled[e] = True
        for idx in range(edge_off[e], edge_off[e + 1]):
            lnk = edge_links[idx]
            traversed += 1
            if not link_alive[lnk]:
                continue
            b = link_bloom[lnk]
            k = bloom_k[b]
            t = link_twin[lnk]
            link_alive[lnk] = False
            if t >= 0:
                link_alive[t] = False
                et = link_edge[t]
                updates += 1
                v = max(s, sup[et] - (k - 1))
                if v != sup[et]:
                    sup[et] = v
                    rid[et] = nxt
                    heapq.heappush(heap, (v, nxt, tiekey[et], et))
            bloom_k[b] = k - 1
            lo = bloom_off[b]
            w = lo
            for j in range(lo, lo + bloom_len[b]):
                l2 = bloom_links[j]
                traversed += 1
                if not link_alive[l2]:
                    continue
                if compact:
                    bloom_links[w] = l2
                    w += 1
                e2 = link_edge[l2]
                updates += 1
                v = max(s, sup[e2] - 1)
                if v != sup[e2]:
                    sup[e2] = v
                    rid[e2] = nxt
                    heapq.heappush(heap, (v, nxt, tiekey[e2], e2))
            if compact:
                bloom_len[b] = w - lo
    return theta, updates, traversed, rounds


@nb.njit(cache=True, nogil=True)
def _peel_wing_wedges(sup, tiekey, u_count, edge_u, edge_v, offsets, adj, adj_edge,
                      seg_len, alive_edge):
    m = sup.shape[0]
    theta = np.zeros(m, dtype=np.int64)
    if m == 0:
        return theta, 0, 0, 0
    rid = np.zeros(m, dtype=np.int64)
    mark = np.full(u_count, -1, dtype=np.int64)
    heap = _heap_init(sup, tiekey)
    cur_r = -1
    cur_v = -1
    rounds = 0
    updates = 0
    wedges = 0
    while len(heap) > 0:
        s, r, _, e = heapq.heappop(heap)
        if not alive_edge[e] or s != sup[e] or r != rid[e]:
            continue
        if s != cur_v or r > cur_r:
            cur_r += 1
            cur_v = s
            rounds += 1
        nxt = cur_r + 1
        theta[e] = s
        alive_edge[e] = False
        u = edge_u[e]
        v = edge_v[e] + u_count
        v0 = offsets[v]
        for j in range(v0, v0 + seg_len[v]):
            if alive_edge[adj_edge[j]]:
                mark[adj[j]] = adj_edge[j]
        u0 = offsets[u]
        for i in range(u0, u0 + seg_len[u]):
            e1 = adj_edge[i]
            if not alive_edge[e1]:
                continue
            vp = adj[i]
            p0 = offsets[vp]
            for j in range(p0, p0 + seg_len[vp]):
                e3 = adj_edge[j]
                up = adj[j]
                if up == u or not alive_edge[e3]:
                    continue
                wedges += 1
                e2 = mark[up]
                if e2 < 0:
                    continue
                for x in (e1, e2, e3):
                    updates += 1
                    nv = max(s, sup[x] - 1)
                    if nv != sup[x]:
                        sup[x] = nv
                        rid[x] = nxt
                        heapq.heappush(heap, (nv, nxt, tiekey[x], x))
        for j in range(v0, v0 + seg_len[v]):
            mark[adj[j]] = -1
    return theta, updates, wedges, rounds


@nb.njit(cache=True, nogil=True)
def peel_tip(sup, tiekey, offsets, adj, adj_edge, seg_len, alive_edge):
    """Bottom-up peeling of U-vertices ``0..len(sup)-1``; mutates ``sup``.

    Returns (theta, support_updates, wedges_traversed, rounds).
    """
    nu = sup.shape[0]
    theta = np.zeros(nu, dtype=np.int64)
    if nu == 0:
        return theta, 0, 0, 0
    peeled = np.zeros(nu, dtype=np.bool_)
    rid = np.zeros(nu, dtype=np.int64)
    wc = np.zeros(nu, dtype=np.int64)
    touched = np.empty(nu, dtype=np.int64)
    heap = _heap_init(sup, tiekey)
    cur_r = -1
    cur_v = -1
    rounds = 0
    updates = 0
    wedges = 0
    while len(heap) > 0:
        s, r, _, u = heapq.heappop(heap)
        if peeled[u] or s != sup[u] or r != rid[u]:
            continue
        if s != cur_v or r > cur_r:
            cur_r += 1
            cur_v = s
            rounds += 1
        nxt = cur_r + 1
        theta[u] = s
        peeled[u] = True
        nt = 0
        u0 = offsets[u]
        for i in range(u0, u0 + seg_len[u]):
            if not alive_edge[adj_edge[i]]:
                continue
            v = adj[i]
            v0 = offsets[v]
            for j in range(v0, v0 + seg_len[v]):
                up = adj[j]
                if up == u or not alive_edge[adj_edge[j]]:
                    continue
                wedges += 1
                if peeled[up]:
                    continue
                if wc[up] == 0:
                    touched[nt] = up
                    nt += 1
                wc[up] += 1
        for t in range(nt):
            up = touched[t]
            w = wc[up]
            wc[up] = 0
            b = w * (w - 1) // 2
            if b == 0:
                continue
            updates += 1
            nv = max(s, sup[up] - b)
            if nv != sup[up]:
                sup[up] = nv
                rid[up] = nxt
                heapq.heappush(heap, (nv, nxt, tiekey[up], up))
    return theta, updates, wedges, rounds


def _tiekey(n: int, tie_key: Optional[np.ndarray]) -> np.ndarray:
    if tie_key is None:
        return np.arange(n, dtype=np.int64)
    tie_key = np.asarray(tie_key, dtype=np.int64)
    if tie_key.shape != (n,):
        raise ValueError("tie_key must have one entry per entity")
    return tie_key


def bup_wing(g: BipartiteGraph, use_index: bool = True, workers: int = 1,
             tie_key: Optional[np.ndarray] = None, compact: bool = True) -> DecompositionResult:
    """Wing numbers by repeatedly peeling a minimum-support edge."""
    t0 = time.perf_counter()
    g = assign_priorities(g)
    counts = count_butterflies(g, workers)
    t1 = time.perf_counter()
    sup = counts.edge.copy()
    key = _tiekey(g.edge_count, tie_key)
    metrics = RunMetrics(wedges_traversed=counts.wedges)
    phases = {"count": t1 - t0}
    if use_index:
        index = build_be_index(g, workers)
        t2 = time.perf_counter()
        phases["index"] = t2 - t1
        theta, upd, trav, rounds = peel_with_index(
            sup, key, index.bloom_k, index.bloom_off, index.bloom_links, index.bloom_len,
            index.link_edge, index.link_twin, index.link_bloom, index.link_alive,
            index.edge_off, index.edge_links, compact)
        metrics.links_traversed = int(trav)
    else:
        t2 = t1
        h = g.copy()
        theta, upd, trav, rounds = _peel_wing_wedges(
            sup, key, h.u_count, h.edge_u, h.edge_v, h.offsets, h.adj, h.adj_edge,
            h.seg_len, h.alive_edge)
        metrics.wedges_traversed += int(trav)
    t3 = time.perf_counter()
    phases["peel"] = t3 - t2
    metrics.support_updates = int(upd)
    metrics.iterations_rho = int(rounds)
    metrics.phase_times = phases
    metrics.wall_time = t3 - t0
    return DecompositionResult("wing", theta, metrics)


def bup_tip(g: BipartiteGraph, side: Union[VertexSide, str] = VertexSide.U, workers: int = 1,
            tie_key: Optional[np.ndarray] = None) -> DecompositionResult:
    """Tip numbers of one vertex side by bottom-up vertex peeling."""
    side = VertexSide.parse(side)
    t0 = time.perf_counter()
    h = g if side is VertexSide.U else g.transposed()
    h = assign_priorities(h)
    counts = count_butterflies(h, workers, edges=False)
    t1 = time.perf_counter()
    sup = counts.vertex[: h.u_count].copy()
    theta, upd, wedges, rounds = peel_tip(sup, _tiekey(h.u_count, tie_key), h.offsets,
                                          h.adj, h.adj_edge, h.seg_len, h.alive_edge)
    t2 = time.perf_counter()
    metrics = RunMetrics(support_updates=int(upd), wedges_traversed=int(wedges),
                         iterations_rho=int(rounds), wall_time=t2 - t0,
                         phase_times={"count": t1 - t0, "peel": t2 - t1},
                         extra={"counting_wedges": counts.wedges})
    return DecompositionResult("tip", theta, metrics, side=side)


# ---------------------------------------------------------------------------
# hierarchy retrieval


def _components(n_entities: int, links_a: np.ndarray, links_b: np.ndarray,
                entity_ids: np.ndarray) -> list[np.ndarray]:
    """Connected components of entities joined through auxiliary nodes."""
    total = n_entities + (int(links_b.max()) + 1 if links_b.size else 0)
    mat = coo_matrix((np.ones(links_a.shape[0]), (links_a, n_entities + links_b)),
                     shape=(total, total))
    _, labels = connected_components(mat, directed=False)
    labels = labels[:n_entities]
    order = np.argsort(labels, kind="stable")
    cuts = np.flatnonzero(np.diff(labels[order])) + 1
    comps = [np.sort(entity_ids[grp]) for grp in np.split(order, cuts)] if n_entities else []
    comps.sort(key=lambda c: int(c[0]))
    return comps


def level_subgraph(g: BipartiteGraph, result: DecompositionResult, k: int) -> BipartiteGraph:
    """Subgraph of entities with entity number >= k (orig ids preserved)."""
    theta = result.entity_numbers
    if result.kind == "wing":
        ids = np.flatnonzero(theta >= k)
        h = from_edges(g.edge_u[ids], g.edge_v[ids], g.u_count, g.v_count)
        h.orig_edge = g.orig_edge[ids]
        return h
    base = g if result.side in (None, VertexSide.U) else g.transposed()
    return induced_subgraph(base, np.flatnonzero(theta >= k))


def extract_k_level(g: BipartiteGraph, result: DecompositionResult, k: int) -> list[np.ndarray]:
    """Components of the k-level under butterfly connectivity.

    Returns sorted arrays of entity ids (edge ids for wing, peel-side vertex
    ids for tip), one per component. Two entities are connected when they
    share a butterfly; all entities of a bloom share butterflies pairwise,
    so blooms act as connectors. Entities in no butterfly are singletons.
    """
    h = level_subgraph(g, result, k)
    if result.kind == "wing":
        if h.edge_count == 0:
            return []
        index = build_be_index(h)
        return _components(h.edge_count, index.edge_ids[index.link_edge], index.link_bloom,
                           h.orig_edge)
    if h.u_count == 0:
        return []
    index = build_be_index(h)
    # every wedge of a bloom runs start - mid - last; keep the U endpoints
    le = index.link_edge
    eu = h.edge_u[le]
    bl = index.link_bloom
    return _components(h.u_count, eu, bl, h.orig_u)
