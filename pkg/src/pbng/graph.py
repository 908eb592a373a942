"""Bipartite graph storage: CSR adjacency, priority relabeling, induced
subgraphs and in-place edge deletion.

Vertices use a single global id space: U-vertices are ``0..u_count-1`` and
V-vertices are ``u_count..u_count+v_count-1``. Edge ids are positions in the
deduplicated input order and never change, which gives every edge a stable
total order.
"""
from __future__ import annotations

import enum
import io
import threading
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Union

import numba as nb
import numpy as np


class VertexSide(enum.Enum):
    U = "u"
    V = "v"

    @classmethod
    def parse(cls, value: Union[str, "VertexSide"]) -> "VertexSide":
        if isinstance(value, VertexSide):
            return value
        return cls(str(value).lower())


class GraphFormatError(ValueError):
    """Malformed edge-list input."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class EmptyGraphError(ValueError):
    pass


@dataclass(eq=False)
class BipartiteGraph:
    u_count: int
    v_count: int
    edge_u: np.ndarray          # per edge: U-local id
    edge_v: np.ndarray          # per edge: V-local id
    offsets: np.ndarray         # CSR row pointers, length n + 1
    adj: np.ndarray             # neighbour global ids
    adj_edge: np.ndarray        # edge id of each adjacency entry
    seg_len: np.ndarray         # stored entries per vertex (shrinks on compaction)
    degree: np.ndarray          # live degree
    alive_edge: np.ndarray
    alive_vertex: np.ndarray
    priority: Optional[np.ndarray] = None   # rank, 0 = highest priority
    orig_edge: Optional[np.ndarray] = None  # edge id in the parent graph
    orig_u: Optional[np.ndarray] = None     # U id in the parent graph
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.orig_edge is None:
            self.orig_edge = np.arange(self.edge_count, dtype=np.int64)
        if self.orig_u is None:
            self.orig_u = np.arange(self.u_count, dtype=np.int64)

    # -- sizes ---------------------------------------------------------------
    @property
    def n(self) -> int:
        return self.u_count + self.v_count

    @property
    def edge_count(self) -> int:
        return int(self.edge_u.shape[0])

    m = edge_count

    @property
    def live_edge_count(self) -> int:
        return int(self.alive_edge.sum())

    @property
    def edge_endpoints(self) -> np.ndarray:
        """(m, 2) array of (u, v) side-local endpoint ids."""
        return np.stack([self.edge_u, self.edge_v], axis=1)

    def u_of(self, w: int) -> bool:
        return w < self.u_count

    def v_global(self, v: int) -> int:
        return self.u_count + v

    # -- traversal -----------------------------------------------------------
    def neighbors(self, w: int) -> tuple[np.ndarray, np.ndarray]:
        """Live neighbours (global ids) and the connecting edge ids of ``w``."""
        lo = self.offsets[w]
        hi = lo + self.seg_len[w]
        nbr = self.adj[lo:hi]
        eids = self.adj_edge[lo:hi]
        keep = self.alive_edge[eids]
        return nbr[keep], eids[keep]

    def live_edges(self) -> np.ndarray:
        return np.flatnonzero(self.alive_edge)

    def live_edge_set(self) -> set[tuple[int, int]]:
        ids = self.live_edges()
        return set(zip(self.edge_u[ids].tolist(), self.edge_v[ids].tolist()))

    def u_degrees(self) -> np.ndarray:
        return self.degree[: self.u_count]

    def v_degrees(self) -> np.ndarray:
        return self.degree[self.u_count:]

    def summary(self) -> dict:
        du, dv = self.u_degrees(), self.v_degrees()
        return {
            "u_count": self.u_count,
            "v_count": self.v_count,
            "m": self.live_edge_count,
            "max_degree_u": int(du.max()) if du.size else 0,
            "max_degree_v": int(dv.max()) if dv.size else 0,
        }

    def copy(self) -> "BipartiteGraph":
        return BipartiteGraph(
            self.u_count, self.v_count, self.edge_u.copy(), self.edge_v.copy(),
            self.offsets.copy(), self.adj.copy(), self.adj_edge.copy(),
            self.seg_len.copy(), self.degree.copy(), self.alive_edge.copy(),
            self.alive_vertex.copy(),
            None if self.priority is None else self.priority.copy(),
            self.orig_edge.copy(), self.orig_u.copy(),
        )

    def transposed(self) -> "BipartiteGraph":
        """Same graph with the roles of U and V swapped; edge ids are kept."""
        g = from_edges(self.edge_v, self.edge_u, self.v_count, self.u_count)
        g.alive_edge[:] = self.alive_edge
        _recount_degrees(g)
        g.seg_len[:] = np.diff(g.offsets)
        g.orig_edge = self.orig_edge.copy()
        if self.priority is not None:
            return assign_priorities(g)
        return g

    def rebuild_live(self) -> "BipartiteGraph":
        """Fresh graph holding only the surviving edges (ids renumbered)."""
        ids = self.live_edges()
        g = from_edges(self.edge_u[ids], self.edge_v[ids], self.u_count, self.v_count)
        g.orig_edge = self.orig_edge[ids]
        return g


# ---------------------------------------------------------------------------
# construction


def _build_csr(u_count, v_count, edge_u, edge_v):
    n = u_count + v_count
    m = edge_u.shape[0]
    owner = np.concatenate([edge_u, edge_v + u_count])
    nbr = np.concatenate([edge_v + u_count, edge_u])
    eid = np.concatenate([np.arange(m), np.arange(m)]).astype(np.int64)
    order = np.lexsort((nbr, owner))
    counts = np.bincount(owner, minlength=n).astype(np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return offsets, nbr[order].astype(np.int64), eid[order], counts


def from_edges(edge_u: Iterable[int], edge_v: Iterable[int],
               u_count: Optional[int] = None, v_count: Optional[int] = None) -> BipartiteGraph:
    """Build a graph from side-local 0-based endpoint arrays.

    Duplicate edges are dropped, keeping the first occurrence, so edge ids
    follow the deduplicated input order.
    """
    eu = np.asarray(list(edge_u) if not isinstance(edge_u, np.ndarray) else edge_u, dtype=np.int64)
    ev = np.asarray(list(edge_v) if not isinstance(edge_v, np.ndarray) else edge_v, dtype=np.int64)
    if eu.shape != ev.shape:
        raise ValueError("endpoint arrays differ in length")
    if eu.size and (eu.min() < 0 or ev.min() < 0):
        raise ValueError("negative vertex id")
    if u_count is None:
        u_count = int(eu.max()) + 1 if eu.size else 0
    if v_count is None:
        v_count = int(ev.max()) + 1 if ev.size else 0
    if eu.size and (eu.max() >= u_count or ev.max() >= v_count):
        raise ValueError("vertex id out of range")
    if eu.size:
        key = eu * max(v_count, 1) + ev
        _, first = np.unique(key, return_index=True)
        first.sort()
        eu, ev = eu[first], ev[first]
    offsets, adj, adj_edge, deg = _build_csr(u_count, v_count, eu, ev)
    n = u_count + v_count
    return BipartiteGraph(
        u_count=u_count, v_count=v_count, edge_u=eu, edge_v=ev,
        offsets=offsets, adj=adj, adj_edge=adj_edge,
        seg_len=deg.copy(), degree=deg,
        alive_edge=np.ones(eu.shape[0], dtype=np.bool_),
        alive_vertex=np.ones(n, dtype=np.bool_),
    )


def load_edge_list(source: Union[str, bytes, IO], fmt: str = "whitespace-pairs",
                   allow_extra_columns: bool = False) -> BipartiteGraph:
    """Parse a KONECT-style edge list.

    ``%`` and ``#`` lines are comments. Each data line is ``u v`` with
    1-based ids. Ids are compacted per side to dense 0-based ranges (sorted
    by original id), so sparse numbering is tolerated.
    """
    if fmt != "whitespace-pairs":
        raise ValueError(f"unsupported format {fmt!r}")
    if isinstance(source, (str, bytes)) and not _looks_like_stream(source):
        with open(source, "rb") as fh:
            return load_edge_list(fh, fmt, allow_extra_columns)
    if isinstance(source, (bytes, str)):
        source = io.BytesIO(source.encode() if isinstance(source, str) else source)

    us: list[int] = []
    vs: list[int] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.decode() if isinstance(raw, bytes) else raw
        line = line.strip()
        if not line or line[0] in "%#":
            continue
        tokens = line.split()
        if len(tokens) != 2 and not (allow_extra_columns and len(tokens) > 2):
            raise GraphFormatError(lineno, f"expected 2 tokens, got {len(tokens)}")
        try:
            a, b = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise GraphFormatError(lineno, f"non-integer token in {line!r}") from None
        if a < 1 or b < 1:
            raise GraphFormatError(lineno, "ids must be positive")
        us.append(a)
        vs.append(b)
    if not us:
        raise EmptyGraphError("edge list contains no edges")
    ua, uinv = np.unique(np.asarray(us, dtype=np.int64), return_inverse=True)
    va, vinv = np.unique(np.asarray(vs, dtype=np.int64), return_inverse=True)
    return from_edges(uinv.astype(np.int64), vinv.astype(np.int64), ua.size, va.size)


def _looks_like_stream(source) -> bool:
    # a raw literal with newlines is content, anything else is a path
    return ("\n" in source) if isinstance(source, str) else (b"\n" in source)


def read_edge_lines(lines: Iterable[str]) -> BipartiteGraph:
    return load_edge_list(io.StringIO("\n".join(lines) + "\n"))


# ---------------------------------------------------------------------------
# priority


def priority_order(degree: np.ndarray) -> np.ndarray:
    """Vertices by non-increasing degree, ties by ascending global id."""
    ids = np.arange(degree.shape[0])
    return np.lexsort((ids, -degree))


def assign_priorities(g: BipartiteGraph) -> BipartiteGraph:
    """Return a compacted copy with ranks assigned and every adjacency list
    sorted by ascending neighbour rank."""
    live = g.live_edges()
    eu, ev = g.edge_u[live], g.edge_v[live]
    deg = g.degree.copy()
    rank = np.empty(g.n, dtype=np.int64)
    rank[priority_order(deg)] = np.arange(g.n)

    m = g.edge_count
    owner = np.concatenate([eu, ev + g.u_count])
    nbr = np.concatenate([ev + g.u_count, eu])
    eid = np.concatenate([live, live]).astype(np.int64)
    order = np.lexsort((rank[nbr], owner))
    counts = np.bincount(owner, minlength=g.n).astype(np.int64)
    offsets = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    alive = np.zeros(m, dtype=np.bool_)
    alive[live] = True
    return BipartiteGraph(
        u_count=g.u_count, v_count=g.v_count,
        edge_u=g.edge_u.copy(), edge_v=g.edge_v.copy(),
        offsets=offsets, adj=nbr[order].astype(np.int64), adj_edge=eid[order],
        seg_len=counts.copy(), degree=counts, alive_edge=alive,
        alive_vertex=g.alive_vertex.copy(), priority=rank,
        orig_edge=g.orig_edge.copy(), orig_u=g.orig_u.copy(),
    )


# ---------------------------------------------------------------------------
# subgraphs and deletion


def induced_subgraph(g: BipartiteGraph, subset: Iterable[int]) -> BipartiteGraph:
    """Subgraph on (subset, V(g)) holding every live edge whose U-endpoint is
    in ``subset``. U-vertices are renumbered in ascending order; ``orig_u``
    and ``orig_edge`` map back to ``g``."""
    sub = np.unique(np.fromiter(subset, dtype=np.int64) if not isinstance(subset, np.ndarray)
                    else subset.astype(np.int64))
    if sub.size and (sub[0] < 0 or sub[-1] >= g.u_count):
        raise ValueError("subset holds an id outside U(g)")
    local = np.full(g.u_count, -1, dtype=np.int64)
    local[sub] = np.arange(sub.size)
    ids = g.live_edges()
    ids = ids[local[g.edge_u[ids]] >= 0]
    h = from_edges(local[g.edge_u[ids]], g.edge_v[ids], int(sub.size), g.v_count)
    h.orig_edge = g.orig_edge[ids]
    h.orig_u = g.orig_u[sub]
    return h


@nb.njit(cache=True, nogil=True)
def _delete_kernel(edges, edge_u, edge_v, u_count, offsets, adj, adj_edge,
                   seg_len, degree, alive_edge):
    touched = np.empty(2 * edges.shape[0], dtype=np.int64)
    nt = 0
    for i in range(edges.shape[0]):
        e = edges[i]
        if not alive_edge[e]:
            continue
        alive_edge[e] = False
        a = edge_u[e]
        b = edge_v[e] + u_count
        degree[a] -= 1
        degree[b] -= 1
        touched[nt] = a
        touched[nt + 1] = b
        nt += 2
    for i in range(nt):
        w = touched[i]
        # compact once more than half of the stored list is dead
        if 2 * (seg_len[w] - degree[w]) > seg_len[w]:
            lo = offsets[w]
            k = lo
            for j in range(lo, lo + seg_len[w]):
                if alive_edge[adj_edge[j]]:
                    adj[k] = adj[j]
                    adj_edge[k] = adj_edge[j]
                    k += 1
            seg_len[w] = k - lo


def delete_edges(g: BipartiteGraph, edges: Iterable[int]) -> None:
    """Remove edges in place. Already-deleted ids are ignored.

    Callers must not run two deletions on the same graph concurrently; the
    graph lock is taken non-blocking and a clash raises RuntimeError.
    """
    arr = np.asarray(edges if isinstance(edges, np.ndarray) else list(edges), dtype=np.int64)
    if arr.size == 0:
        return
    if arr.min() < 0 or arr.max() >= g.edge_count:
        raise ValueError("edge id out of range")
    if not g._lock.acquire(blocking=False):
        raise RuntimeError("concurrent delete_edges on a shared graph")
    try:
        _delete_kernel(arr, g.edge_u, g.edge_v, g.u_count, g.offsets, g.adj,
                       g.adj_edge, g.seg_len, g.degree, g.alive_edge)
    finally:
        g._lock.release()


def delete_vertex_edges(g: BipartiteGraph, vertices: np.ndarray) -> None:
    """Delete every live edge incident on the given global vertex ids."""
    if len(vertices) == 0:
        return
    parts = []
    for w in vertices:
        lo = g.offsets[w]
        parts.append(g.adj_edge[lo:lo + g.seg_len[w]])
    delete_edges(g, np.concatenate(parts))


def _recount_degrees(g: BipartiteGraph) -> None:
    live = g.live_edges()
    deg = np.bincount(np.concatenate([g.edge_u[live], g.edge_v[live] + g.u_count]),
                      minlength=g.n).astype(np.int64)
    g.degree[:] = deg
