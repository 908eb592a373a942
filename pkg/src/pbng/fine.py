"""Fine-grained decomposition: exact entity numbers, one partition at a time.

Partitions are independent once the coarse plan and init vector exist, so
they are handed to worker threads through a shared queue sorted by
estimated work (longest first). Each partition writes a disjoint slice of
the output, which makes the result independent of the worker count.
"""
from __future__ import annotations

import heapq
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .baseline import peel_tip, peel_with_index
from .bloom import BloomEdgeIndex, PlanIntegrityError, build_be_index, partition_be_index
from .coarse import (DEFAULT_TIP_PARTITIONS, PartitionPlan, cd_tip, cd_wing,
                     default_wing_partitions)
from .counting import count_butterflies
from .graph import BipartiteGraph, VertexSide, assign_priorities, induced_subgraph
from .results import DecompositionResult, RunMetrics


# ---------------------------------------------------------------------------
# scheduling


class TaskQueue:
    """Partition ids sorted by work, largest first; each id is popped once."""

    def __init__(self, work: Sequence[int], lpt: bool = True):
        work = np.asarray(work, dtype=np.int64)
        ids = np.arange(work.shape[0])
        self.order = ids[np.argsort(-work, kind="stable")] if lpt else ids
        self._cursor = 0
        self._lock = threading.Lock()

    def pop(self) -> Optional[int]:
        with self._lock:
            if self._cursor >= self.order.shape[0]:
                return None
            i = int(self.order[self._cursor])
            self._cursor += 1
            return i

    def __len__(self) -> int:
        return int(self.order.shape[0]) - self._cursor


@dataclass
class ScheduleTrace:
    order: list[int]            # task ids in pop order
    worker_of: list[int]        # per task id
    finish: list[int]           # per task id
    worker_load: list[int]
    makespan: int


def schedule(work: Sequence[int], workers: int, lpt: bool = True) -> ScheduleTrace:
    """Simulate dynamic allocation: each task goes to the first idle worker.

    Ties between idle workers go to the lowest worker id.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    w = [int(x) for x in work]
    if any(x < 0 for x in w):
        raise ValueError("work estimates must be non-negative")
    queue = TaskQueue(w, lpt)
    free = [(0, k) for k in range(workers)]
    load = [0] * workers
    worker_of = [0] * len(w)
    finish = [0] * len(w)
    order = []
    while (t := queue.pop()) is not None:
        at, k = heapq.heappop(free)
        order.append(t)
        worker_of[t] = k
        finish[t] = at + w[t]
        load[k] += w[t]
        heapq.heappush(free, (finish[t], k))
    return ScheduleTrace(order, worker_of, finish, load, max([0] + finish))


def _run_queue(queue: TaskQueue, workers: int, job: Callable[[int], dict]) -> tuple[list, list]:
    results: list = [None] * len(queue)
    tasks_per_worker = [0] * workers

    def worker(k: int) -> None:
        while (i := queue.pop()) is not None:
            results[i] = job(i)
            tasks_per_worker[k] += 1

    if workers == 1:
        worker(0)
    else:
        with ThreadPoolExecutor(workers) as pool:
            for f in [pool.submit(worker, k) for k in range(workers)]:
                f.result()
    return results, tasks_per_worker


# ---------------------------------------------------------------------------
# fine decomposition


def _check_plan(plan: PartitionPlan, n: int) -> None:
    plan.validate(n)
    if (plan.init_support < 0).any():
        raise PlanIntegrityError("negative init support")


def fd_wing(g: BipartiteGraph, parts: list[BloomEdgeIndex], plan: PartitionPlan,
            workers: int = 1) -> DecompositionResult:
    """Exact wing numbers by peeling each partition against its own index.

    Supports start at ``max(init, lower bound of the range)``, so no entity
    of partition ``i`` can come out below the range it was assigned to.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    t0 = time.perf_counter()
    _check_plan(plan, g.edge_count)
    if len(parts) != plan.num_partitions:
        raise PlanIntegrityError("one index per partition is required")
    theta = np.zeros(g.edge_count, dtype=np.int64)
    work = [int(plan.init_support[p.edge_ids].sum()) for p in parts]

    def job(i: int) -> dict:
        idx = parts[i].copy()
        sup = np.maximum(plan.init_support[idx.edge_ids], plan.range_bounds[i])
        th, upd, trav, rounds = peel_with_index(
            sup, idx.edge_ids, idx.bloom_k, idx.bloom_off, idx.bloom_links, idx.bloom_len,
            idx.link_edge, idx.link_twin, idx.link_bloom, idx.link_alive, idx.edge_off,
            idx.edge_links, True)
        theta[idx.edge_ids] = th
        return {"updates": int(upd), "links": int(trav), "rounds": int(rounds)}

    stats, per_worker = _run_queue(TaskQueue(work), workers, job)
    metrics = RunMetrics(
        support_updates=sum(s["updates"] for s in stats),
        links_traversed=sum(s["links"] for s in stats),
        wall_time=time.perf_counter() - t0,
        extra={"per_partition_work": work, "tasks_per_worker": per_worker,
               "fd_rounds": sum(s["rounds"] for s in stats)})
    return DecompositionResult("wing", theta, metrics, plan=plan)


def fd_tip(g: BipartiteGraph, plan: PartitionPlan, side: Union[VertexSide, str] = VertexSide.U,
           workers: int = 1) -> DecompositionResult:
    """Exact tip numbers by peeling each partition inside its induced subgraph."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    side = VertexSide.parse(side)
    t0 = time.perf_counter()
    h = g if side is VertexSide.U else g.transposed()
    _check_plan(plan, h.u_count)
    theta = np.zeros(h.u_count, dtype=np.int64)
    members = [plan.members(i) for i in range(1, plan.num_partitions + 1)]
    subs = [induced_subgraph(h, u) for u in members]
    # wedges of G_i whose two endpoints both lie in U_i
    work = [int((s.degree[s.u_count:] * (s.degree[s.u_count:] - 1)).sum() // 2) for s in subs]

    def job(i: int) -> dict:
        s = subs[i]
        sup = np.maximum(plan.init_support[members[i]], plan.range_bounds[i])
        th, upd, wedges, rounds = peel_tip(sup, members[i].astype(np.int64), s.offsets, s.adj,
                                           s.adj_edge, s.seg_len, s.alive_edge)
        theta[members[i]] = th
        return {"updates": int(upd), "wedges": int(wedges), "rounds": int(rounds)}

    stats, per_worker = _run_queue(TaskQueue(work), workers, job)
    metrics = RunMetrics(
        support_updates=sum(s["updates"] for s in stats),
        wedges_traversed=sum(s["wedges"] for s in stats),
        wall_time=time.perf_counter() - t0,
        extra={"per_partition_work": work, "tasks_per_worker": per_worker,
               "fd_rounds": sum(s["rounds"] for s in stats)})
    return DecompositionResult("tip", theta, metrics, side=side, plan=plan)


# ---------------------------------------------------------------------------
# two-phase pipelines


def _merge(cd: RunMetrics, fd: RunMetrics, counting_wedges: int, phases: dict,
           total: float) -> RunMetrics:
    extra = dict(fd.extra)
    extra.update({k: v for k, v in cd.extra.items() if k != "counting_wedges"})
    extra["cd_support_updates"] = cd.support_updates
    extra["fd_support_updates"] = fd.support_updates
    return RunMetrics(
        support_updates=cd.support_updates + fd.support_updates,
        wedges_traversed=counting_wedges + cd.wedges_traversed + fd.wedges_traversed,
        links_traversed=cd.links_traversed + fd.links_traversed,
        iterations_rho=cd.iterations_rho, wall_time=total, phase_times=phases, extra=extra)


def wing_decomposition(g: BipartiteGraph, P: Optional[int] = None, workers: int = 1,
                       batch: bool = True, delete: bool = True,
                       mem_budget: Optional[int] = None,
                       tgt: Optional[int] = None) -> DecompositionResult:
    """Wing numbers of every edge via coarse ranges plus per-range peeling."""
    if P is None:
        P = default_wing_partitions(g.edge_count)
    if P < 1 or workers < 1:
        raise ValueError("P and workers must be >= 1")
    marks = [time.perf_counter()]
    h = assign_priorities(g)
    counts = count_butterflies(h, workers)
    marks.append(time.perf_counter())
    index = build_be_index(h, workers, mem_budget)
    marks.append(time.perf_counter())
    plan = cd_wing(h, index, P, supports=counts.edge, batch=batch, delete=delete, tgt=tgt)
    marks.append(time.perf_counter())
    parts = partition_be_index(h, index, plan)
    marks.append(time.perf_counter())
    fd = fd_wing(h, parts, plan, workers)
    marks.append(time.perf_counter())
    names = ["count", "index", "coarse", "partition", "fine"]
    phases = {k: marks[j + 1] - marks[j] for j, k in enumerate(names)}
    metrics = _merge(plan.metrics, fd.metrics, counts.wedges, phases, marks[-1] - marks[0])
    metrics.extra["partitions"] = plan.num_partitions
    return DecompositionResult("wing", fd.entity_numbers, metrics, plan=plan)


def tip_decomposition(g: BipartiteGraph, side: Union[VertexSide, str] = VertexSide.U,
                      P: Optional[int] = None, workers: int = 1, batch: bool = True,
                      delete: bool = True, tgt: Optional[int] = None) -> DecompositionResult:
    """Tip numbers of one side via coarse ranges plus per-range peeling."""
    side = VertexSide.parse(side)
    if P is None:
        P = DEFAULT_TIP_PARTITIONS
    if P < 1 or workers < 1:
        raise ValueError("P and workers must be >= 1")
    marks = [time.perf_counter()]
    h = assign_priorities(g if side is VertexSide.U else g.transposed())
    counts = count_butterflies(h, workers, edges=False)
    marks.append(time.perf_counter())
    plan = cd_tip(h, VertexSide.U, P, batch=batch, delete=delete, tgt=tgt,
                  supports=counts.vertex[: h.u_count])
    plan.side = side
    marks.append(time.perf_counter())
    fd = fd_tip(h, plan, VertexSide.U, workers)
    marks.append(time.perf_counter())
    names = ["count", "coarse", "fine"]
    phases = {k: marks[j + 1] - marks[j] for j, k in enumerate(names)}
    metrics = _merge(plan.metrics, fd.metrics, counts.wedges, phases, marks[-1] - marks[0])
    metrics.extra["partitions"] = plan.num_partitions
    return DecompositionResult("tip", fd.entity_numbers, metrics, side=side, plan=plan)
