"""Bloom-Edge-Index: maximal priority blooms linked to their member edges.

Links are stored flat. A link belongs to one bloom and one edge and carries
its twin edge; ``link_twin`` points at the twin's link, or is -1 when that
link lives in another partition's index. Blooms keep a compactable list of
link ids (``bloom_links``/``bloom_len``), so peeled links can be dropped from
later traversals without invalidating ids held elsewhere.

Edges are indexed locally: ``edge_ids[local]`` is the graph edge id. For the
full-graph index the mapping is the identity.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numba as nb
import numpy as np

from .graph import BipartiteGraph, assign_priorities

LINK_BYTES = 57   # five int64 link fields, one bool, one slot in each CSR list


class IndexBudgetError(MemoryError):
    pass


class PlanIntegrityError(ValueError):
    pass


@dataclass(eq=False)
class BloomEdgeIndex:
    edge_ids: np.ndarray        # local edge -> graph edge id (sorted)
    bloom_ids: np.ndarray       # local bloom -> bloom id in the full index
    bloom_start: np.ndarray     # dominant pair, global vertex ids
    bloom_last: np.ndarray      # highest-priority vertex of the bloom
    bloom_k: np.ndarray
    bloom_off: np.ndarray
    bloom_links: np.ndarray
    bloom_len: np.ndarray
    link_edge: np.ndarray       # local edge id
    link_twin_edge: np.ndarray  # graph edge id of the twin
    link_twin: np.ndarray       # twin's link id, -1 if not stored here
    link_bloom: np.ndarray      # local bloom id
    link_alive: np.ndarray
    edge_off: np.ndarray
    edge_links: np.ndarray

    @property
    def n_blooms(self) -> int:
        return int(self.bloom_k.shape[0])

    @property
    def n_links(self) -> int:
        return int(self.link_edge.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edge_ids.shape[0])

    def local_edge(self, e: int) -> int:
        i = int(np.searchsorted(self.edge_ids, e))
        if i >= self.edge_ids.shape[0] or self.edge_ids[i] != e:
            raise KeyError(e)
        return i

    def _live_links(self, b: int) -> np.ndarray:
        lo = self.bloom_off[b]
        ids = self.bloom_links[lo:lo + self.bloom_len[b]]
        return ids[self.link_alive[ids]]

    def bloom_adjacency(self, b: int) -> list[tuple[int, int]]:
        """Live (edge id, twin edge id) pairs of local bloom ``b``."""
        ids = self._live_links(b)
        return list(zip(self.edge_ids[self.link_edge[ids]].tolist(),
                        self.link_twin_edge[ids].tolist()))

    def edge_adjacency(self, e: int) -> list[tuple[int, int]]:
        """Live (bloom id, twin edge id) pairs of graph edge ``e``."""
        try:
            le = self.local_edge(e)
        except KeyError:
            return []
        ids = self.edge_links[self.edge_off[le]:self.edge_off[le + 1]]
        ids = ids[self.link_alive[ids]]
        return list(zip(self.bloom_ids[self.link_bloom[ids]].tolist(),
                        self.link_twin_edge[ids].tolist()))

    def live_size(self, b: int) -> int:
        return int(self._live_links(b).shape[0])

    def butterflies(self) -> int:
        k = self.bloom_k
        return int((k * (k - 1) // 2).sum())

    def dump(self) -> list[str]:
        """One line per bloom: ``bloom_id k_B edge:twin ...``."""
        out = []
        for b in range(self.n_blooms):
            pairs = " ".join(f"{e}:{t}" for e, t in self.bloom_adjacency(b))
            out.append(f"{self.bloom_ids[b]} {self.bloom_k[b]} {pairs}".rstrip())
        return out

    def copy(self) -> "BloomEdgeIndex":
        return BloomEdgeIndex(**{k: v.copy() for k, v in self.__dict__.items()})


def _assemble(edge_ids, link_edge, link_twin_edge, link_twin, link_bloom,
              bloom_ids, bloom_start, bloom_last, bloom_k) -> BloomEdgeIndex:
    n_links = link_edge.shape[0]
    nb_ = bloom_k.shape[0]
    border = np.argsort(link_bloom, kind="stable")
    bcount = np.bincount(link_bloom, minlength=nb_).astype(np.int64)
    boff = np.zeros(nb_ + 1, dtype=np.int64)
    np.cumsum(bcount, out=boff[1:])
    eorder = np.argsort(link_edge, kind="stable")
    ecount = np.bincount(link_edge, minlength=edge_ids.shape[0]).astype(np.int64)
    eoff = np.zeros(edge_ids.shape[0] + 1, dtype=np.int64)
    np.cumsum(ecount, out=eoff[1:])
    return BloomEdgeIndex(
        edge_ids=edge_ids.astype(np.int64), bloom_ids=bloom_ids.astype(np.int64),
        bloom_start=bloom_start.astype(np.int64), bloom_last=bloom_last.astype(np.int64),
        bloom_k=bloom_k.astype(np.int64), bloom_off=boff,
        bloom_links=border.astype(np.int64), bloom_len=bcount.copy(),
        link_edge=link_edge.astype(np.int64), link_twin_edge=link_twin_edge.astype(np.int64),
        link_twin=link_twin.astype(np.int64), link_bloom=link_bloom.astype(np.int64),
        link_alive=np.ones(n_links, dtype=np.bool_),
        edge_off=eoff, edge_links=eorder.astype(np.int64),
    )


# ---------------------------------------------------------------------------
# construction


@nb.njit(cache=True, nogil=True)
def _scan_start(start, offsets, adj, adj_edge, seg_len, alive_edge, rank, wc, touched):
    rs = rank[start]
    nt = 0
    s0 = offsets[start]
    for i in range(s0, s0 + seg_len[start]):
        if not alive_edge[adj_edge[i]]:
            continue
        mid = adj[i]
        rm = rank[mid]
        m0 = offsets[mid]
        for j in range(m0, m0 + seg_len[mid]):
            last = adj[j]
            rl = rank[last]
            if rl >= rm or rl >= rs:
                break
            if not alive_edge[adj_edge[j]]:
                continue
            if wc[last] == 0:
                touched[nt] = last
                nt += 1
            wc[last] += 1
    return nt


@nb.njit(cache=True, nogil=True)
def _size_range(lo, hi, offsets, adj, adj_edge, seg_len, alive_edge, rank, n):
    wc = np.zeros(n, dtype=np.int64)
    touched = np.empty(n, dtype=np.int64)
    nblooms = 0
    npairs = 0
    for start in range(lo, hi):
        nt = _scan_start(start, offsets, adj, adj_edge, seg_len, alive_edge, rank, wc, touched)
        for t in range(nt):
            w = wc[touched[t]]
            if w > 1:
                nblooms += 1
                npairs += w
            wc[touched[t]] = 0
    return nblooms, npairs


@nb.njit(cache=True, nogil=True)
def _fill_range(lo, hi, b0, p0, offsets, adj, adj_edge, seg_len, alive_edge, rank, n,
                bloom_start, bloom_last, bloom_k, bloom_poff, pair_e0, pair_e1):
    wc = np.zeros(n, dtype=np.int64)
    touched = np.empty(n, dtype=np.int64)
    bid = np.full(n, -1, dtype=np.int64)
    cursor = np.zeros(n, dtype=np.int64)
    b = b0
    p = p0
    for start in range(lo, hi):
        nt = _scan_start(start, offsets, adj, adj_edge, seg_len, alive_edge, rank, wc, touched)
        lasts = touched[:nt].copy()
        keys = np.empty(nt, dtype=np.int64)
        for t in range(nt):
            keys[t] = rank[lasts[t]]
        lasts = lasts[np.argsort(keys)]
        for t in range(nt):
            last = lasts[t]
            w = wc[last]
            if w > 1:
                bloom_start[b] = start
                bloom_last[b] = last
                bloom_k[b] = w
                bloom_poff[b] = p
                bid[last] = b
                cursor[last] = p
                b += 1
                p += w
        rs = rank[start]
        s0 = offsets[start]
        for i in range(s0, s0 + seg_len[start]):
            e1 = adj_edge[i]
            if not alive_edge[e1]:
                continue
            mid = adj[i]
            rm = rank[mid]
            m0 = offsets[mid]
            for j in range(m0, m0 + seg_len[mid]):
                last = adj[j]
                rl = rank[last]
                if rl >= rm or rl >= rs:
                    break
                e2 = adj_edge[j]
                if not alive_edge[e2] or bid[last] < 0:
                    continue
                slot = cursor[last]
                pair_e0[slot] = e1
                pair_e1[slot] = e2
                cursor[last] = slot + 1
        for t in range(nt):
            wc[lasts[t]] = 0
            bid[lasts[t]] = -1
    return b, p


def build_be_index(g: BipartiteGraph, workers: int = 1,
                   mem_budget: Optional[int] = None) -> BloomEdgeIndex:
    """Build the BE-Index with the same wedge traversal as counting.

    Each wedge endpoint pair {start, last} seen at least twice becomes a
    bloom with ``last`` as its highest-priority vertex; for every midpoint,
    edges (start, mid) and (mid, last) are inserted as mutual twins. Blooms
    with a single midpoint hold no butterfly and are not stored.
    """
    if g.priority is None:
        g = assign_priorities(g)
    args = (g.offsets, g.adj, g.adj_edge, g.seg_len, g.alive_edge, g.priority, g.n)
    workers = max(1, workers)
    bounds = np.linspace(0, g.n, workers + 1).astype(int)
    spans = [(int(bounds[i]), int(bounds[i + 1])) for i in range(workers)]

    def run(fn, items):
        if len(items) == 1:
            return [fn(items[0])]
        with ThreadPoolExecutor(len(items)) as pool:
            return list(pool.map(fn, items))

    sizes = run(lambda s: _size_range(s[0], s[1], *args), spans)
    nblooms = sum(s[0] for s in sizes)
    npairs = sum(s[1] for s in sizes)
    predicted = 2 * npairs * LINK_BYTES + nblooms * 48
    if mem_budget is not None and predicted > mem_budget:
        raise IndexBudgetError(
            f"BE-Index needs ~{predicted} bytes ({2 * npairs} links, {nblooms} blooms), "
            f"budget is {mem_budget}")

    bloom_start = np.empty(nblooms, dtype=np.int64)
    bloom_last = np.empty(nblooms, dtype=np.int64)
    bloom_k = np.empty(nblooms, dtype=np.int64)
    bloom_poff = np.empty(nblooms, dtype=np.int64)
    pair_e0 = np.empty(npairs, dtype=np.int64)
    pair_e1 = np.empty(npairs, dtype=np.int64)
    b0 = np.cumsum([0] + [s[0] for s in sizes])
    p0 = np.cumsum([0] + [s[1] for s in sizes])
    jobs = [(spans[i], int(b0[i]), int(p0[i])) for i in range(len(spans))]
    run(lambda j: _fill_range(j[0][0], j[0][1], j[1], j[2], *args, bloom_start, bloom_last,
                              bloom_k, bloom_poff, pair_e0, pair_e1), jobs)

    n_links = 2 * npairs
    link_edge = np.empty(n_links, dtype=np.int64)
    link_edge[0::2] = pair_e0
    link_edge[1::2] = pair_e1
    link_twin_edge = np.empty(n_links, dtype=np.int64)
    link_twin_edge[0::2] = pair_e1
    link_twin_edge[1::2] = pair_e0
    link_twin = np.arange(n_links, dtype=np.int64) ^ 1
    link_bloom = np.repeat(np.arange(nblooms, dtype=np.int64), 2 * bloom_k)
    return _assemble(np.arange(g.edge_count, dtype=np.int64), link_edge, link_twin_edge,
                     link_twin, link_bloom, np.arange(nblooms), bloom_start, bloom_last,
                     bloom_k)


# ---------------------------------------------------------------------------
# partitioning


def partition_be_index(g: BipartiteGraph, index: BloomEdgeIndex, plan) -> list[BloomEdgeIndex]:
    """Split a full-graph index into one index per edge partition.

    Partition ``i`` keeps link (e, B) iff e is in E_i and twin(e, B) lies in
    a partition >= i. Its bloom number counts the twin pairs of B whose two
    edges both lie in partitions >= i, including pairs with no stored link.
    """
    part = np.asarray(plan.partition_of, dtype=np.int64)
    if part.shape[0] != index.n_edges or (part < 1).any():
        raise PlanIntegrityError("every edge needs a partition in 1..P")
    P = int(plan.num_partitions)
    if part.size and part.max() > P:
        raise PlanIntegrityError("partition id above P")

    alive = index.link_alive
    le = index.edge_ids[index.link_edge]
    lt = index.link_twin_edge
    pe = part[le]
    pt = part[lt]
    kept = alive & (pt >= pe)

    # one tally per live twin pair at its lower partition
    has_twin = index.link_twin >= 0
    first = alive & has_twin & (np.arange(index.n_links) < index.link_twin)
    stride = P + 2
    keys = index.link_bloom[first] * stride + np.minimum(pe[first], pt[first])
    ukeys, counts = np.unique(keys, return_counts=True)
    csum = np.cumsum(counts)

    def suffix(blooms: np.ndarray, i: int) -> np.ndarray:
        q = blooms * stride + i
        pos = np.searchsorted(ukeys, q, side="left")
        end = np.searchsorted(ukeys, (blooms + 1) * stride, side="left")
        hi = csum[end - 1]
        lo = np.where(pos > 0, csum[np.maximum(pos - 1, 0)], 0)
        return hi - lo

    kept_ids = np.flatnonzero(kept)
    kept_part = pe[kept_ids]
    order = np.argsort(kept_part, kind="stable")
    kept_ids = kept_ids[order]
    kept_part = kept_part[order]
    cut = np.searchsorted(kept_part, np.arange(1, P + 2))

    link_local = np.full(index.n_links, -1, dtype=np.int64)
    out = []
    for i in range(1, P + 1):
        edges_i = np.flatnonzero(part == i).astype(np.int64)
        ids = kept_ids[cut[i - 1]:cut[i]]
        link_local[ids] = np.arange(ids.shape[0])
        src_bloom = index.link_bloom[ids]
        ublooms, local_b = np.unique(src_bloom, return_inverse=True)
        loc_edge = np.searchsorted(edges_i, le[ids])
        twin_in = pt[ids] == i
        tw = index.link_twin[ids]
        twin_link = np.where(twin_in & (tw >= 0), link_local[np.maximum(tw, 0)], -1)
        k = suffix(ublooms, i) if ublooms.size else np.zeros(0, dtype=np.int64)
        out.append(_assemble(
            edges_i, loc_edge, lt[ids], twin_link, local_b.astype(np.int64),
            index.bloom_ids[ublooms], index.bloom_start[ublooms], index.bloom_last[ublooms], k))
        link_local[ids] = -1
    return out
