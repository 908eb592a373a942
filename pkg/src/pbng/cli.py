"""Command-line front end: ``pbng {count,wing,tip,verify,bench,info}``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baseline import bup_tip, bup_wing
from .bloom import IndexBudgetError, PlanIntegrityError
from .counting import count_butterflies
from .fine import tip_decomposition, wing_decomposition
from .generators import random_bipartite, skewed_bipartite
from .graph import (BipartiteGraph, EmptyGraphError, GraphFormatError, VertexSide,
                    load_edge_list)
from .oracle import (OracleSizeError, brute_force_counts, oracle_entity_numbers,
                     verify_hierarchy)
from .results import DecompositionResult


@dataclass
class RunConfig:
    command: str
    input: Optional[str] = None
    side: Optional[VertexSide] = None
    partitions: Optional[int] = None
    workers: int = 1
    seed: int = 0
    out: Optional[str] = None
    metrics: Optional[str] = None
    mem_budget: Optional[int] = None
    batch: bool = True
    delete: bool = True
    baseline: bool = False
    no_index: bool = False
    per: str = "edge"
    random: int = 0
    size: tuple = (30, 30)
    density: float = 0.2
    skewed: bool = False
    bench_partitions: list = field(default_factory=lambda: [1, 4, 16])
    bench_workers: list = field(default_factory=lambda: [1, 2, 4])
    kind: str = "wing"
    extra_columns: bool = False

    def validate(self) -> None:
        if self.partitions is not None and self.partitions < 1:
            raise ValueError("--partitions must be >= 1")
        if self.workers < 1:
            raise ValueError("--workers must be >= 1")
        if self.command == "tip" and self.side is None:
            raise ValueError("tip needs --side")
        if self.command in ("count", "wing", "tip", "info") and not self.input:
            raise ValueError(f"{self.command} needs --input")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pbng", description="Butterfly counting and "
                                 "wing/tip decomposition of bipartite graphs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        p.add_argument("--input", required=needs_input, help="edge list (KONECT whitespace pairs)")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--metrics", help="metrics JSON path (default: stderr)")
        p.add_argument("--extra-columns", action="store_true",
                       help="ignore columns after the first two (weights, timestamps)")

    def peel_opts(p):
        p.add_argument("--partitions", "--P", dest="partitions", type=int, default=None)
        p.add_argument("--baseline", action="store_true", help="sequential bottom-up peeling")
        p.add_argument("--no-batch", dest="batch", action="store_false")
        p.add_argument("--no-delete", dest="delete", action="store_false")
        p.add_argument("--mem-budget", type=int, default=None, help="BE-Index byte budget")

    p = sub.add_parser("count", help="butterfly counts")
    common(p)
    p.add_argument("--per", choices=["edge", "u", "v"], default="edge")

    p = sub.add_parser("wing", help="wing decomposition")
    common(p)
    peel_opts(p)
    p.add_argument("--no-index", action="store_true", help="baseline without BE-Index")

    p = sub.add_parser("tip", help="tip decomposition")
    common(p)
    peel_opts(p)
    p.add_argument("--side", choices=["u", "v"], required=True)

    for name, helptext in (("verify", "compare against brute-force oracles"),
                           ("bench", "timing matrix over P and workers")):
        p = sub.add_parser(name, help=helptext)
        common(p, needs_input=False)
        p.add_argument("--random", type=int, default=0, help="number of random graphs")
        p.add_argument("--size", type=int, nargs=2, default=(30, 30), metavar=("NU", "NV"))
        p.add_argument("--density", type=float, default=0.2)
        p.add_argument("--skewed", action="store_true", help="power-law generator")
        p.add_argument("--partitions", "--P", dest="bench_partitions", type=int, nargs="+",
                       default=[1, 4, 16])
        p.add_argument("--mem-budget", type=int, default=None)
        if name == "bench":
            p.add_argument("--kind", choices=["wing", "tip"], default="wing")
            p.add_argument("--side", choices=["u", "v"], default="u")
            p.add_argument("--workers-list", dest="bench_workers", type=int, nargs="+",
                           default=[1, 2, 4])

    p = sub.add_parser("info", help="graph summary")
    p.add_argument("--input", required=True)
    p.add_argument("--extra-columns", action="store_true")
    return ap


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    ns = vars(_parser().parse_args(argv))
    if ns.get("side") is not None:
        ns["side"] = VertexSide.parse(ns["side"])
    if "size" in ns:
        ns["size"] = tuple(ns["size"])
    cfg = RunConfig(**{k: v for k, v in ns.items() if k in RunConfig.__dataclass_fields__})
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------


def _emit(text: str, path: Optional[str], stream) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        stream.write(text)


def _metrics_dict(res: DecompositionResult, extra: dict) -> dict:
    m = res.metrics
    d = {
        "kind": res.kind,
        "support_updates": m.support_updates,
        "wedges_traversed": m.wedges_traversed,
        "links_traversed": m.links_traversed,
        "rho": m.iterations_rho,
        "wall_time": m.wall_time,
        "phase_times": m.phase_times,
    }
    if res.side is not None:
        d["side"] = res.side.value
    d.update({k: v for k, v in m.extra.items()})
    d.update(extra)
    return d


def _json(d: dict) -> str:
    def conv(x):
        if isinstance(x, (np.integer,)):
            return int(x)
        if isinstance(x, np.ndarray):
            return x.tolist()
        raise TypeError(type(x))
    return json.dumps(d, indent=2, sort_keys=True, default=conv) + "\n"


def _generated(cfg: RunConfig) -> list[tuple[str, BipartiteGraph]]:
    if cfg.input:
        return [(cfg.input, load_edge_list(cfg.input, allow_extra_columns=cfg.extra_columns))]
    rng = np.random.default_rng(cfg.seed)
    out = []
    for i in range(max(cfg.random, 1)):
        s = int(rng.integers(2**31))
        nu, nv = cfg.size
        if cfg.skewed:
            g = skewed_bipartite(nu, nv, int(cfg.density * nu * nv), s)
        else:
            g = random_bipartite(nu, nv, cfg.density, s)
        out.append((f"random[{i}] seed={s}", g))
    return out


def _cmd_count(cfg: RunConfig, g: BipartiteGraph) -> int:
    c = count_butterflies(g, cfg.workers)
    print(f"total={c.total}")
    if cfg.out:
        vals = {"edge": c.edge, "u": c.vertex[: g.u_count], "v": c.vertex[g.u_count:]}[cfg.per]
        lines = ["entity_id,butterflies"] + [f"{i},{x}" for i, x in enumerate(vals.tolist())]
        _emit("\n".join(lines) + "\n", cfg.out, sys.stdout)
    return 0


def _cmd_decompose(cfg: RunConfig, g: BipartiteGraph, load_time: float) -> int:
    if cfg.command == "wing":
        if cfg.baseline:
            res = bup_wing(g, use_index=not cfg.no_index, workers=cfg.workers)
        else:
            res = wing_decomposition(g, cfg.partitions, cfg.workers, cfg.batch, cfg.delete,
                                     cfg.mem_budget)
    else:
        if cfg.baseline:
            res = bup_tip(g, cfg.side, workers=cfg.workers)
        else:
            res = tip_decomposition(g, cfg.side, cfg.partitions, cfg.workers, cfg.batch,
                                    cfg.delete)
    extra = {"load_time": load_time, "algorithm": "baseline" if cfg.baseline else "pbng"}
    if not cfg.baseline and res.plan is not None:
        extra["range_bounds"] = res.plan.range_bounds.tolist()
    _emit(res.to_csv(), cfg.out, sys.stdout)
    _emit(_json(_metrics_dict(res, extra)), cfg.metrics, sys.stderr)
    return 0


def _cmd_verify(cfg: RunConfig) -> int:
    failures = 0
    lines = []

    def check(label: str, ok: bool) -> None:
        nonlocal failures
        failures += not ok
        lines.append(f"{'PASS' if ok else 'FAIL'} {label}")

    for name, g in _generated(cfg):
        bc = brute_force_counts(g)
        c = count_butterflies(g, cfg.workers)
        check(f"{name} counts", bool((bc.edge == c.edge).all() and (bc.vertex == c.vertex).all()))
        ref = bup_wing(g)
        check(f"{name} wing baseline vs oracle",
              bool((oracle_entity_numbers(g, "wing") == ref.theta).all()))
        for P in cfg.bench_partitions:
            r = wing_decomposition(g, P, cfg.workers)
            check(f"{name} wing P={P}", bool((r.theta == ref.theta).all()))
        check(f"{name} wing hierarchy", verify_hierarchy(g, ref).passed)
        for side in (VertexSide.U, VertexSide.V):
            tref = bup_tip(g, side)
            check(f"{name} tip-{side.value} baseline vs oracle",
                  bool((oracle_entity_numbers(g, f"tip-{side.value}") == tref.theta).all()))
            for P in cfg.bench_partitions:
                r = tip_decomposition(g, side, P, cfg.workers)
                check(f"{name} tip-{side.value} P={P}", bool((r.theta == tref.theta).all()))
            check(f"{name} tip-{side.value} hierarchy", verify_hierarchy(g, tref).passed)
    _emit("\n".join(lines) + "\n", cfg.out, sys.stdout)
    return 1 if failures else 0


def _cmd_bench(cfg: RunConfig) -> int:
    side = cfg.side or VertexSide.U
    rows = [["graph", "kind", "side", "algorithm", "P", "workers", "seconds", "rho",
             "support_updates", "wedges_traversed"]]
    for name, g in _generated(cfg):
        sv = side.value if cfg.kind == "tip" else ""
        base = bup_wing(g) if cfg.kind == "wing" else bup_tip(g, side)
        rows.append([name, cfg.kind, sv, "baseline", 0, 1, f"{base.metrics.wall_time:.6f}",
                     base.metrics.iterations_rho, base.metrics.support_updates,
                     base.metrics.wedges_traversed])
        for P in cfg.bench_partitions:
            for w in cfg.bench_workers:
                if cfg.kind == "wing":
                    r = wing_decomposition(g, P, w, mem_budget=cfg.mem_budget)
                else:
                    r = tip_decomposition(g, side, P, w)
                m = r.metrics
                rows.append([name, cfg.kind, sv, "pbng", P, w, f"{m.wall_time:.6f}",
                             m.iterations_rho, m.support_updates, m.wedges_traversed])
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    else:
        csv.writer(sys.stdout, lineterminator="\n").writerows(rows)
    return 0


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    try:
        if cfg.command == "verify":
            return _cmd_verify(cfg)
        if cfg.command == "bench":
            return _cmd_bench(cfg)
        t0 = time.perf_counter()
        g = load_edge_list(cfg.input, allow_extra_columns=cfg.extra_columns)
        load_time = time.perf_counter() - t0
        if cfg.command == "info":
            print(_json(g.summary()), end="")
            return 0
        if cfg.command == "count":
            return _cmd_count(cfg, g)
        return _cmd_decompose(cfg, g, load_time)
    except (GraphFormatError, EmptyGraphError, IndexBudgetError, PlanIntegrityError,
            OracleSizeError, OSError, ValueError) as exc:
        print(f"pbng: error: {exc}", file=sys.stderr)
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_config(argv)
    except ValueError as exc:
        print(f"pbng: error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
