"""Coarse-grained decomposition: split entities into P support ranges.

Each partition ``i`` starts by snapshotting the supports of all remaining
entities (the init vector), picks an upper bound ``hi`` so that the range
``[lo, hi)`` holds roughly the target workload, then peels every entity
whose support drops below ``hi`` in synchronous iterations. Decrements are
floored at ``lo``; above the floor each iteration leaves supports exactly
equal to butterfly counts in the surviving graph, so the final plan does
not depend on the order entities are processed within an iteration.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numba as nb
import numpy as np

from .bloom import BloomEdgeIndex, PlanIntegrityError, build_be_index
from .counting import count_butterflies, counting_bound, wedge_work
from .graph import BipartiteGraph, VertexSide, assign_priorities, delete_vertex_edges
from .results import RunMetrics

DEFAULT_TIP_PARTITIONS = 150


def default_wing_partitions(edge_count: int) -> int:
    return 400 if edge_count < 100_000_000 else 1000


class DegenerateRangeError(ValueError):
    pass


@dataclass
class PeelFrontier:
    partition: int
    iteration: int
    active: np.ndarray          # entity ids peeled in this iteration
    lower: int                  # support floor of the current range
    upper: int                  # exclusive upper bound of the current range


@dataclass(eq=False)
class PartitionPlan:
    range_bounds: np.ndarray    # length P+1, range_bounds[0] == 0
    partition_of: np.ndarray    # per entity, 1..P
    init_support: np.ndarray
    per_partition_work: np.ndarray
    kind: str = "wing"
    side: Optional[VertexSide] = None
    metrics: RunMetrics = field(default_factory=RunMetrics)

    @property
    def num_partitions(self) -> int:
        return int(self.range_bounds.shape[0] - 1)

    def members(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.partition_of == i)

    def validate(self, n_entities: Optional[int] = None) -> None:
        rb = self.range_bounds
        if rb.shape[0] < 2 or rb[0] != 0 or (np.diff(rb) < 0).any():
            raise PlanIntegrityError("range bounds must start at 0 and be non-decreasing")
        if n_entities is not None and self.partition_of.shape[0] != n_entities:
            raise PlanIntegrityError("partition vector has the wrong length")
        if self.init_support.shape != self.partition_of.shape:
            raise PlanIntegrityError("init support missing for some entities")
        p = self.partition_of
        if p.size and (p.min() < 1 or p.max() > self.num_partitions):
            raise PlanIntegrityError("entity without a valid partition")

    # -- serialisation ---------------------------------------------------------
    def header_json(self) -> str:
        return json.dumps({
            "kind": self.kind,
            "side": None if self.side is None else self.side.value,
            "P": self.num_partitions,
            "range_bounds": self.range_bounds.tolist(),
            "per_partition_work": self.per_partition_work.tolist(),
        }, sort_keys=True)

    def body_csv(self) -> str:
        rows = ["entity_id,partition,init_support"]
        rows += [f"{i},{p},{s}" for i, (p, s) in
                 enumerate(zip(self.partition_of.tolist(), self.init_support.tolist()))]
        return "\n".join(rows) + "\n"

    def save(self, json_path: str, csv_path: str) -> None:
        with open(json_path, "w") as fh:
            fh.write(self.header_json() + "\n")
        with open(csv_path, "w") as fh:
            fh.write(self.body_csv())

    @classmethod
    def load(cls, json_path: str, csv_path: str) -> "PartitionPlan":
        with open(json_path) as fh:
            head = json.load(fh)
        body = np.loadtxt(csv_path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
        plan = cls(
            range_bounds=np.asarray(head["range_bounds"], dtype=np.int64),
            partition_of=body[:, 1].copy(), init_support=body[:, 2].copy(),
            per_partition_work=np.asarray(head["per_partition_work"], dtype=np.int64),
            kind=head["kind"], side=None if head["side"] is None else VertexSide(head["side"]),
        )
        plan.validate()
        return plan


# ---------------------------------------------------------------------------
# range determination


def _range(supports: np.ndarray, work: np.ndarray, tgt: int) -> tuple[int, int]:
    if supports.size == 0:
        raise DegenerateRangeError("no live entities to split into a range")
    if tgt <= 0:
        raise ValueError("tgt must be positive")
    vals, inv = np.unique(supports, return_inverse=True)
    binwork = np.zeros(vals.shape[0], dtype=np.int64)
    np.add.at(binwork, inv.ravel(), work)
    cum = np.cumsum(binwork)
    j = int(np.searchsorted(cum, tgt, side="left"))
    if j >= vals.shape[0]:
        return int(vals[-1]) + 1, int(cum[-1])
    return int(vals[j]) + 1, int(cum[j])


def find_range(supports, tgt: int, work=None) -> int:
    """Exclusive upper support bound of the next range.

    Entities are binned by support; the bound is one past the smallest
    support value at which the cumulative workload reaches ``tgt``. Workload
    defaults to the supports themselves.
    """
    s = np.asarray(supports, dtype=np.int64)
    w = s if work is None else np.asarray(work, dtype=np.int64)
    return _range(s, w, tgt)[0]


def adaptive_target(remaining_work: int, partitions_left: int,
                    last_initial_estimate: Optional[int] = None,
                    last_final_estimate: Optional[int] = None) -> int:
    """Per-partition work target, shrunk when the last partition overshot."""
    if partitions_left < 1:
        raise ValueError("partitions_left must be >= 1")
    base = remaining_work / partitions_left
    scale = 1.0
    if last_initial_estimate is not None and last_final_estimate:
        scale = last_initial_estimate / last_final_estimate
    return max(1, int(base * scale))


# ---------------------------------------------------------------------------
# iteration kernels


@nb.njit(cache=True, nogil=True)
def _lower(x, delta, sup, lo, hi, queued, nbuf, nn):
    old = sup[x]
    nv = max(lo, old - delta)
    if nv != old:
        sup[x] = nv
        if old >= hi and nv < hi and not queued[x]:
            queued[x] = True
            nbuf[nn] = x
            nn += 1
    return nn


@nb.njit(cache=True, nogil=True)
def _cd_wing_iter(active, in_active, sup, lo, hi, batch, compact, bloom_k, bloom_off,
                  bloom_links, bloom_len, link_edge, link_twin, link_bloom, link_alive,
                  edge_off, edge_links, bcount, btouched, queued, nbuf):
    nbt = 0
    nn = 0
    updates = 0
    traversed = 0
    for a in range(active.shape[0]):
        e = active[a]
        for idx in range(edge_off[e], edge_off[e + 1]):
            lnk = edge_links[idx]
            traversed += 1
            if not link_alive[lnk]:
                continue
            t = link_twin[lnk]
            b = link_bloom[lnk]
            if t >= 0:
                te = link_edge[t]
                if in_active[te]:
                    # both ends peel now: the higher edge id owns the pair
                    if te > e:
                        continue
                else:
                    updates += 1
                    nn = _lower(te, bloom_k[b] - 1, sup, lo, hi, queued, nbuf, nn)
                link_alive[t] = False
            link_alive[lnk] = False
            if bcount[b] == 0:
                btouched[nbt] = b
                nbt += 1
            bcount[b] += 1
            if batch:
                continue
            lo_b = bloom_off[b]
            w = lo_b
            for j in range(lo_b, lo_b + bloom_len[b]):
                l2 = bloom_links[j]
                traversed += 1
                if not link_alive[l2]:
                    continue
                if compact:
                    bloom_links[w] = l2
                    w += 1
                e2 = link_edge[l2]
                t2 = link_twin[l2]
                if in_active[e2] or (t2 >= 0 and in_active[link_edge[t2]]):
                    continue
                updates += 1
                nn = _lower(e2, 1, sup, lo, hi, queued, nbuf, nn)
            if compact:
                bloom_len[b] = w - lo_b
    for q in range(nbt):
        b = btouched[q]
        c = bcount[b]
        if batch:
            lo_b = bloom_off[b]
            w = lo_b
            for j in range(lo_b, lo_b + bloom_len[b]):
                l2 = bloom_links[j]
                traversed += 1
                if not link_alive[l2]:
                    continue
                if compact:
                    bloom_links[w] = l2
                    w += 1
                e2 = link_edge[l2]
                t2 = link_twin[l2]
                if in_active[e2] or (t2 >= 0 and in_active[link_edge[t2]]):
                    continue
                updates += 1
                nn = _lower(e2, c, sup, lo, hi, queued, nbuf, nn)
            if compact:
                bloom_len[b] = w - lo_b
        bloom_k[b] -= c
        bcount[b] = 0
    return nn, updates, traversed


@nb.njit(cache=True, nogil=True)
def _cd_tip_iter(active, in_active, assigned, sup, lo, hi, offsets, adj, adj_edge, seg_len,
                 alive_edge, wc, touched, queued, nbuf):
    nn = 0
    updates = 0
    wedges = 0
    for a in range(active.shape[0]):
        u = active[a]
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
                if in_active[up] or assigned[up]:
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
            if b > 0:
                updates += 1
                nn = _lower(up, b, sup, lo, hi, queued, nbuf, nn)
    return nn, updates, wedges


@nb.njit(cache=True, nogil=True)
def _tip_work(vertices, offsets, adj, adj_edge, seg_len, alive_edge, rem_deg):
    out = np.zeros(vertices.shape[0], dtype=np.int64)
    for k in range(vertices.shape[0]):
        u = vertices[k]
        s = 0
        for i in range(offsets[u], offsets[u] + seg_len[u]):
            if alive_edge[adj_edge[i]]:
                s += rem_deg[adj[i]]
        out[k] = s
    return out


@nb.njit(cache=True, nogil=True)
def _retire(vertices, offsets, adj, adj_edge, seg_len, alive_edge, rem_deg):
    for k in range(vertices.shape[0]):
        u = vertices[k]
        for i in range(offsets[u], offsets[u] + seg_len[u]):
            if alive_edge[adj_edge[i]]:
                rem_deg[adj[i]] -= 1


# ---------------------------------------------------------------------------
# driver


Observer = Callable[[PeelFrontier, np.ndarray], None]


class _Planner:
    """Bookkeeping shared by the wing and tip loops."""

    def __init__(self, n: int, P: int, tgt: Optional[int]):
        if P < 1:
            raise ValueError("P must be >= 1")
        self.n = n
        self.P = P
        self.fixed_tgt = tgt
        self.part = np.zeros(n, dtype=np.int64)
        self.init = np.zeros(n, dtype=np.int64)
        self.bounds = [0]
        self.work: list[int] = []
        self.last_est: Optional[int] = None
        self.last_final: Optional[int] = None

    def next_range(self, i: int, rem: np.ndarray, sup: np.ndarray, work: np.ndarray) -> int:
        if i == self.P:
            hi = int(sup[rem].max()) + 1
            est = int(work.sum())
        else:
            tgt = self.fixed_tgt or adaptive_target(int(work.sum()), self.P - i + 1,
                                                    self.last_est, self.last_final)
            hi, est = _range(sup[rem], work, tgt)
        self.last_est = est
        return hi

    def close(self, i: int, hi: int, final_work: int) -> None:
        self.bounds.append(hi)
        self.work.append(final_work)
        self.last_final = final_work

    def plan(self, kind: str, side, metrics: RunMetrics) -> PartitionPlan:
        if len(self.bounds) == 1:       # nothing to peel: one empty range [0, 1)
            self.close(1, 1, 0)
        return PartitionPlan(np.asarray(self.bounds, dtype=np.int64), self.part, self.init,
                             np.asarray(self.work, dtype=np.int64), kind, side, metrics)


def cd_wing(g: BipartiteGraph, index: Optional[BloomEdgeIndex] = None,
            P: int = 1, supports: Optional[np.ndarray] = None, batch: bool = True,
            delete: bool = True, tgt: Optional[int] = None,
            observer: Optional[Observer] = None) -> PartitionPlan:
    """Partition edges into at most ``P`` wing-number ranges.

    ``g`` must carry priorities consistent with ``index``; both are left
    untouched. ``batch`` aggregates bloom updates per iteration; ``delete``
    drops dead links from bloom lists as they are met. ``tgt`` pins the
    per-partition work target instead of the adaptive rule.
    """
    t0 = time.perf_counter()
    planner = _Planner(g.edge_count, P, tgt)
    if g.priority is None:
        g = assign_priorities(g)
    if index is None:
        index = build_be_index(g)
    if supports is None:
        supports = count_butterflies(g).edge
    sup = np.asarray(supports, dtype=np.int64).copy()
    idx = index.copy()
    m = g.edge_count
    in_active = np.zeros(m, dtype=np.bool_)
    queued = np.zeros(m, dtype=np.bool_)
    nbuf = np.empty(m, dtype=np.int64)
    bcount = np.zeros(idx.n_blooms, dtype=np.int64)
    btouched = np.empty(idx.n_blooms, dtype=np.int64)
    remaining = g.alive_edge.copy()
    metrics = RunMetrics()
    i = 0
    while remaining.any() and i < P:
        i += 1
        rem = np.flatnonzero(remaining)
        planner.init[rem] = sup[rem]
        lo = planner.bounds[-1]
        hi = planner.next_range(i, rem, sup, sup[rem])
        active = rem[sup[rem] < hi]
        final_work = 0
        it = 0
        while active.size:
            it += 1
            metrics.iterations_rho += 1
            planner.part[active] = i
            remaining[active] = False
            final_work += int(planner.init[active].sum())
            in_active[active] = True
            nn, upd, trav = _cd_wing_iter(
                active, in_active, sup, lo, hi, batch, delete, idx.bloom_k, idx.bloom_off,
                idx.bloom_links, idx.bloom_len, idx.link_edge, idx.link_twin, idx.link_bloom,
                idx.link_alive, idx.edge_off, idx.edge_links, bcount, btouched, queued, nbuf)
            metrics.support_updates += int(upd)
            metrics.links_traversed += int(trav)
            if observer is not None:
                observer(PeelFrontier(i, it, active, lo, hi), sup)
            in_active[active] = False
            active = np.sort(nbuf[:nn])
            queued[active] = False
        planner.close(i, hi, final_work)
    metrics.wall_time = time.perf_counter() - t0
    return planner.plan("wing", None, metrics)


def cd_tip(g: BipartiteGraph, side: Union[VertexSide, str] = VertexSide.U, P: int = 1,
           batch: bool = True, delete: bool = True, tgt: Optional[int] = None,
           supports: Optional[np.ndarray] = None,
           observer: Optional[Observer] = None) -> PartitionPlan:
    """Partition the vertices of one side into at most ``P`` tip-number ranges.

    With ``batch``, an iteration whose active set would traverse more
    wedges than a full recount re-counts all remaining vertices instead.
    With ``delete``, edges of peeled vertices are removed from the graph.
    """
    side = VertexSide.parse(side)
    t0 = time.perf_counter()
    h = g if side is VertexSide.U else g.transposed()
    h = assign_priorities(h)
    nu = h.u_count
    planner = _Planner(nu, P, tgt)
    metrics = RunMetrics()
    if supports is None:
        c = count_butterflies(h, edges=False)
        supports = c.vertex[:nu]
        metrics.extra["counting_wedges"] = c.wedges
    sup = np.asarray(supports, dtype=np.int64).copy()
    bound = counting_bound(h)
    in_active = np.zeros(nu, dtype=np.bool_)
    assigned = np.zeros(nu, dtype=np.bool_)
    queued = np.zeros(nu, dtype=np.bool_)
    nbuf = np.empty(nu, dtype=np.int64)
    wc = np.zeros(nu, dtype=np.int64)
    touched = np.empty(nu, dtype=np.int64)
    rem_deg = h.degree.copy()       # per V: neighbours not yet assigned
    recounts = 0
    i = 0
    while not assigned.all() and i < P:
        i += 1
        rem = np.flatnonzero(~assigned)
        planner.init[rem] = sup[rem]
        lo = planner.bounds[-1]
        work = _tip_work(rem, h.offsets, h.adj, h.adj_edge, h.seg_len, h.alive_edge, rem_deg)
        hi = planner.next_range(i, rem, sup, work)
        work_of = np.zeros(nu, dtype=np.int64)
        work_of[rem] = work
        active = rem[sup[rem] < hi]
        final_work = 0
        it = 0
        while active.size:
            it += 1
            metrics.iterations_rho += 1
            planner.part[active] = i
            final_work += int(work_of[active].sum())
            in_active[active] = True
            if batch and wedge_work(h, active) > bound:
                recounts += 1
                alive = h.alive_vertex.copy()
                alive[:nu] = ~(assigned | in_active)
                c = count_butterflies(h, vertex_alive=alive, edges=False)
                metrics.wedges_traversed += c.wedges
                left = np.flatnonzero(alive[:nu])
                old = sup[left]
                new = np.maximum(lo, c.vertex[left])
                metrics.support_updates += int(left.size)
                sup[left] = new
                nxt = left[(old >= hi) & (new < hi)]
            else:
                nn, upd, wedges = _cd_tip_iter(
                    active, in_active, assigned, sup, lo, hi, h.offsets, h.adj, h.adj_edge,
                    h.seg_len, h.alive_edge, wc, touched, queued, nbuf)
                metrics.support_updates += int(upd)
                metrics.wedges_traversed += int(wedges)
                nxt = np.sort(nbuf[:nn])
                queued[nxt] = False
            if observer is not None:
                observer(PeelFrontier(i, it, active, lo, hi), sup)
            in_active[active] = False
            assigned[active] = True
            _retire(active, h.offsets, h.adj, h.adj_edge, h.seg_len, h.alive_edge, rem_deg)
            if delete:
                delete_vertex_edges(h, active)
            active = nxt
        planner.close(i, hi, final_work)
    metrics.extra["recounts"] = recounts
    metrics.wall_time = time.perf_counter() - t0
    return planner.plan("tip", side, metrics)
