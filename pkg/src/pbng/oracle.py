"""Brute-force references built on dense numpy matrices.

Nothing here shares code with the counting or peeling kernels, so the two
can be checked against each other. Everything is sized for small graphs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .baseline import extract_k_level, level_subgraph
from .counting import count_butterflies
from .graph import BipartiteGraph, VertexSide
from .results import DecompositionResult

PAIR_SCAN_LIMIT = 10_000_000
MAXIMALITY_LIMIT = 60


class OracleSizeError(ValueError):
    pass


def _guard(g: BipartiteGraph, limit: int = PAIR_SCAN_LIMIT) -> None:
    if max(g.u_count, g.v_count) ** 2 > limit:
        raise OracleSizeError(f"graph too large for brute force ({g.u_count}x{g.v_count})")


def dense(g: BipartiteGraph) -> np.ndarray:
    """0/1 biadjacency matrix of the live edges."""
    a = np.zeros((g.u_count, g.v_count), dtype=np.int64)
    live = g.live_edges()
    a[g.edge_u[live], g.edge_v[live]] = 1
    return a


def edge_id_matrix(g: BipartiteGraph) -> np.ndarray:
    ids = np.full((g.u_count, g.v_count), -1, dtype=np.int64)
    live = g.live_edges()
    ids[g.edge_u[live], g.edge_v[live]] = live
    return ids


@dataclass
class ButterflyList:
    """Butterflies as rows (u, v, u2, v2) with u < u2 and v < v2."""
    quads: np.ndarray = field(default_factory=lambda: np.zeros((0, 4), dtype=np.int64))

    def __len__(self) -> int:
        return int(self.quads.shape[0])

    def __iter__(self) -> Iterator[tuple[int, int, int, int]]:
        return (tuple(r) for r in self.quads.tolist())


def enumerate_butterflies(g: BipartiteGraph) -> ButterflyList:
    """List every butterfly once by scanning all U-vertex pairs."""
    _guard(g)
    a = dense(g).astype(bool)
    out = []
    tri = {}
    for u in range(g.u_count - 1):
        common = a[u] & a[u + 1:]
        sizes = common.sum(axis=1)
        for off in np.flatnonzero(sizes >= 2):
            vs = np.flatnonzero(common[off])
            c = vs.shape[0]
            if c not in tri:
                tri[c] = np.triu_indices(c, 1)
            i, j = tri[c]
            block = np.empty((i.shape[0], 4), dtype=np.int64)
            block[:, 0] = u
            block[:, 1] = vs[i]
            block[:, 2] = u + 1 + off
            block[:, 3] = vs[j]
            out.append(block)
    if not out:
        return ButterflyList()
    return ButterflyList(np.concatenate(out))


@dataclass
class BruteCounts:
    vertex: np.ndarray      # per global vertex id
    edge: np.ndarray        # per edge id
    total: int


def counts_from_butterflies(g: BipartiteGraph, bl: ButterflyList) -> BruteCounts:
    """Per-vertex and per-edge tallies of an explicit butterfly list."""
    q = bl.quads
    vertex = np.zeros(g.n, dtype=np.int64)
    edge = np.zeros(g.edge_count, dtype=np.int64)
    if len(bl):
        ids = np.concatenate([q[:, 0], q[:, 2], q[:, 1] + g.u_count, q[:, 3] + g.u_count])
        vertex += np.bincount(ids, minlength=g.n)
        em = edge_id_matrix(g)
        eids = np.concatenate([em[q[:, 0], q[:, 1]], em[q[:, 0], q[:, 3]],
                               em[q[:, 2], q[:, 1]], em[q[:, 2], q[:, 3]]])
        edge += np.bincount(eids, minlength=g.edge_count)
    return BruteCounts(vertex, edge, len(bl))


def _edge_counts(a: np.ndarray) -> np.ndarray:
    # butterflies through (u, v): sum over u' != u adjacent to v of (|N(u) & N(u')| - 1)
    af = a.astype(np.float64)
    common = af @ af.T
    np.fill_diagonal(common, 0.0)
    x = np.where(common > 0, common - 1, 0.0) @ af
    return np.rint(x * af).astype(np.int64)


def _u_counts(a: np.ndarray) -> np.ndarray:
    af = a.astype(np.float64)
    common = af @ af.T
    np.fill_diagonal(common, 0.0)
    return np.rint((common * (common - 1) / 2).sum(axis=1)).astype(np.int64)


def brute_force_counts(g: BipartiteGraph) -> BruteCounts:
    """Dense-matrix butterfly counts (no enumeration)."""
    _guard(g)
    a = dense(g)
    cu = _u_counts(a)
    cv = _u_counts(a.T)
    e = _edge_counts(a)
    edge = np.zeros(g.edge_count, dtype=np.int64)
    live = g.live_edges()
    edge[live] = e[g.edge_u[live], g.edge_v[live]]
    total = int(cu.sum()) // 2
    return BruteCounts(np.concatenate([cu, cv]), edge, total)


def oracle_entity_numbers(g: BipartiteGraph, kind: str, return_rounds: bool = False):
    """Entity numbers by full recount and peel-everything-at-minimum rounds.

    ``kind`` is ``"wing"``, ``"tip-u"`` or ``"tip-v"``. With
    ``return_rounds`` the number of peeling rounds is returned as well.
    """
    _guard(g)
    kind = kind.lower()
    a = dense(g)
    if kind == "wing":
        live = g.live_edges()
        theta = np.zeros(g.edge_count, dtype=np.int64)
        alive = np.ones(live.shape[0], dtype=bool)
        eu, ev = g.edge_u[live], g.edge_v[live]
        k = 0
        rounds = 0
        while alive.any():
            rounds += 1
            cnt = _edge_counts(a)[eu, ev]
            k = max(k, int(cnt[alive].min()))
            out = alive & (cnt <= k)
            theta[live[out]] = k
            alive &= ~out
            a[eu[out], ev[out]] = 0
        return (theta, rounds) if return_rounds else theta
    if kind in ("tip-u", "tip-v"):
        if kind == "tip-v":
            a = a.T.copy()
        theta = np.zeros(a.shape[0], dtype=np.int64)
        alive = np.ones(a.shape[0], dtype=bool)
        k = 0
        rounds = 0
        while alive.any():
            rounds += 1
            cnt = _u_counts(a)
            k = max(k, int(cnt[alive].min()))
            out = alive & (cnt <= k)
            theta[out] = k
            alive &= ~out
            a[out] = 0
        return (theta, rounds) if return_rounds else theta
    raise ValueError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# hierarchy checks


@dataclass
class CheckResult:
    check: str
    k: int
    passed: bool
    detail: str = ""


@dataclass
class HierarchyReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'} {c.check} k={c.k} {c.detail}".rstrip()
                for c in self.checks]


def _level_counts(g: BipartiteGraph, result: DecompositionResult, k: int):
    """(entity ids of the level, their butterfly counts within the level)."""
    h = level_subgraph(g, result, k)
    if result.kind == "wing":
        c = count_butterflies(h, edges=True)
        return h.orig_edge, c.edge
    c = count_butterflies(h, edges=False)
    return h.orig_u, c.vertex[: h.u_count]


def _greatest_fixpoint(g: BipartiteGraph, result: DecompositionResult, k: int) -> np.ndarray:
    """Largest entity set in which every member has >= k butterflies."""
    if result.kind == "wing":
        a = dense(g)
        live = g.live_edges()
        eu, ev = g.edge_u[live], g.edge_v[live]
        keep = np.ones(live.shape[0], dtype=bool)
        while True:
            cnt = _edge_counts(a)[eu, ev]
            drop = keep & (cnt < k)
            if not drop.any():
                return np.sort(live[keep])
            keep &= ~drop
            a[eu[drop], ev[drop]] = 0
    a = dense(g)
    if result.side is VertexSide.V:
        a = a.T.copy()
    keep = np.ones(a.shape[0], dtype=bool)
    while True:
        cnt = _u_counts(a)
        drop = keep & (cnt < k)
        if not drop.any():
            return np.flatnonzero(keep)
        keep &= ~drop
        a[drop] = 0


def verify_hierarchy(g: BipartiteGraph, result: DecompositionResult,
                     levels: Optional[list[int]] = None,
                     maximality_limit: int = MAXIMALITY_LIMIT) -> HierarchyReport:
    """Check the >=k condition, nesting and (small graphs) maximality.

    ``levels`` defaults to every distinct entity number.
    """
    report = HierarchyReport()
    theta = result.entity_numbers
    ks = sorted(set(theta.tolist())) if levels is None else sorted(set(levels))
    small = g.n <= maximality_limit
    prev_label: Optional[dict[int, int]] = None
    for k in ks:
        ids, cnt = _level_counts(g, result, k)
        bad = ids[cnt < k]
        report.checks.append(CheckResult(
            "min-butterflies", k, bad.size == 0,
            "" if bad.size == 0 else f"entities {bad[:10].tolist()} below {k}"))
        comps = extract_k_level(g, result, k)
        label = {int(x): ci for ci, comp in enumerate(comps) for x in comp.tolist()}
        if prev_label is not None:
            ok = True
            for comp in comps:
                parents = {prev_label.get(int(x), -1) for x in comp.tolist()}
                if len(parents) != 1 or -1 in parents:
                    ok = False
            report.checks.append(CheckResult(
                "nesting", k, ok, "" if ok else "component straddles lower-level components"))
        prev_label = label
        if small:
            expect = _greatest_fixpoint(g, result, k)
            got = np.sort(np.flatnonzero(theta >= k))
            ok = expect.shape == got.shape and bool((expect == got).all())
            report.checks.append(CheckResult(
                "maximality", k, ok, "" if ok else
                f"level has {got.size} entities, largest valid set has {expect.size}"))
    return report
