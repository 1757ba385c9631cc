"""Command-line surface: generate, partition, memory, run, verify, sweep, cost."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import cost_model, engine, oracle, rmat, storage
from .partition import ClusterShape, partition_graph
from .rmat import EdgeList, RmatParams

THETA_MIN, THETA_MAX = 16, 512


def suggested_theta(scale: int) -> int:
    """Threshold curve: 64 at scale 30, growing by sqrt(2) per scale,
    clamped to [16, 512]."""
    theta = 64.0 * math.sqrt(2.0) ** (scale - 30)
    return int(min(max(round(theta), THETA_MIN), THETA_MAX))


def resolve_theta(theta: str | int, n: int) -> int:
    if isinstance(theta, str) and theta == "auto":
        scale = max(0, (n - 1).bit_length())
        return suggested_theta(scale)
    return int(theta)


@dataclass
class RunConfig:
    """File- or flag-based run configuration."""

    scale: int | None = None
    edge_factor: int = 16
    graph: str | None = None
    shape: str = "1x1x1"
    theta: str = "auto"
    mode: str = "dobfs"
    factors: list = field(default_factory=lambda: [0.5, 0.05, 1e-7])
    factors1: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    local_all2all: bool = False
    uniquify: bool = False
    sources: int = 1
    source: int | None = None
    seed: int = 0
    out: str | None = None

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as f:
            data = json.load(f)
        cfg = cls()
        for key, value in data.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config field {key!r}")
            setattr(cfg, key, value)
        return cfg


def _load_graph(args) -> EdgeList:
    if getattr(args, "graph", None):
        g = rmat.load_edge_list(args.graph)
        if not g.symmetric:
            g = rmat.symmetrize(g)
        return g
    if getattr(args, "scale", None) is None:
        raise SystemExit("error: provide --scale or --graph")
    params = RmatParams(scale=args.scale, edge_factor=args.edge_factor,
                        seed=args.seed)
    return rmat.build_rmat_graph(params)


def _bfs_options(args, source: int) -> engine.BfsOptions:
    f0 = dict(zip(("dd", "dn", "nd"), args.factors))
    f1 = dict(zip(("dd", "dn", "nd"), args.factors1))
    return engine.BfsOptions(mode=args.mode, source=source, factor0=f0,
                             factor1=f1, local_all2all=args.local_all2all,
                             uniquify=args.uniquify, seed=args.seed)


def _write_json(data: dict, out: str | None) -> None:
    text = json.dumps(data, indent=2)
    if out:
        with open(out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def cmd_generate(args) -> int:
    params = RmatParams(scale=args.scale, edge_factor=args.edge_factor,
                        seed=args.seed)
    g = rmat.build_rmat_graph(params, randomize=not args.no_randomize,
                              do_symmetrize=not args.no_symmetrize)
    rmat.save_edge_list(g, args.out, fmt=args.format)
    print(f"wrote {g.m} edges over {g.n} vertices to {args.out}")
    return 0


def cmd_partition(args) -> int:
    g = _load_graph(args)
    shape = ClusterShape.parse(args.shape)
    theta = resolve_theta(args.theta, g.n)
    pg = partition_graph(g, theta, shape, verify=True)
    if args.out:
        from .partition import save_partitioned_graph

        save_partitioned_graph(pg, args.out)
    summary = {
        "n": pg.n, "m": pg.m, "theta": theta,
        "p_rank": shape.p_rank, "p_gpu": shape.p_gpu,
        "delegates": pg.classification.d,
        "kind_totals": pg.kind_totals,
    }
    print(json.dumps(summary, indent=2))
    return 0


def cmd_memory(args) -> int:
    g = _load_graph(args)
    shape = ClusterShape.parse(args.shape)
    theta = resolve_theta(args.theta, g.n)
    pg = partition_graph(g, theta, shape)
    report = storage.memory_footprint(pg)
    _write_json(report.to_dict(), args.out)
    return 0


def cmd_run(args) -> int:
    g = _load_graph(args)
    shape = ClusterShape.parse(args.shape)
    theta = resolve_theta(args.theta, g.n)
    pg = partition_graph(g, theta, shape)
    params = {
        "scale": args.scale, "graph": args.graph, "shape": args.shape,
        "theta": theta, "mode": args.mode, "factors": args.factors,
        "local_all2all": args.local_all2all, "uniquify": args.uniquify,
        "seed": args.seed,
    }
    if args.source is not None:
        run = engine.run_bfs(pg, _bfs_options(args, args.source))
        report = {"params": params, **run.to_dict()}
    else:
        rng = np.random.default_rng(args.seed)
        sources = rng.integers(0, g.n, size=args.sources)
        report = {"params": params,
                  **engine.benchmark(pg, sources, _bfs_options(args, 0))}
    _write_json(report, args.out)
    return 0


def cmd_verify(args) -> int:
    g = _load_graph(args)
    shape = ClusterShape.parse(args.shape)
    theta = resolve_theta(args.theta, g.n)
    pg = partition_graph(g, theta, shape, verify=True)
    rng = np.random.default_rng(args.seed)
    sources = np.unique(rng.integers(0, g.n, size=args.sources))
    failures = 0
    for s in sources:
        run = engine.run_bfs(pg, _bfs_options(args, int(s)))
        expected = oracle.bfs_levels(g, int(s))
        if not np.array_equal(run.levels, expected):
            failures += 1
            print(f"MISMATCH source={s}", file=sys.stderr)
    print(f"verified {len(sources)} sources, {failures} mismatches")
    return 1 if failures else 0


def cmd_sweep_theta(args) -> int:
    g = _load_graph(args)
    shape = ClusterShape.parse(args.shape)
    rng = np.random.default_rng(args.seed)
    sources = rng.integers(0, g.n, size=args.sources)
    rows = []
    for theta in args.thetas:
        pg = partition_graph(g, theta, shape)
        report = storage.memory_footprint(pg)
        d = pg.classification.d
        try:
            bench = engine.benchmark(pg, sources, _bfs_options(args, 0))
            teps = bench["geomean_teps"]
        except engine.EmptyReportError:
            teps = 0.0
        rows.append({
            "theta": theta,
            "d": d,
            "d_pct": 100.0 * d / pg.n if pg.n else 0.0,
            "e_nn": pg.kind_totals["nn"],
            "e_nn_pct": 100.0 * pg.kind_totals["nn"] / pg.m if pg.m else 0.0,
            "footprint_bytes": report.total_bytes,
            "teps": teps,
        })
    _write_csv(rows, args.out)
    return 0


def cmd_cost(args) -> int:
    base = cost_model.CostModelParams(
        n=args.n, m=args.m, p=args.p, p_rank=args.p // args.p_gpu,
        p_gpu=args.p_gpu, g=args.g, S=args.S, S_b=args.S_b,
        n_t=args.n_t, d=args.d, E_nn=args.e_nn,
    )
    rows = cost_model.sweep_p(base, args.p_sweep, p_gpu=args.p_gpu,
                              weak_scaling=not args.strong_scaling)
    _write_csv(rows, args.out)
    return 0


def _write_csv(rows: list[dict], out: str | None) -> None:
    fields = sorted({k for row in rows for k in row},
                    key=lambda k: list(rows[0]).index(k) if k in rows[0] else 99)
    target = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.DictWriter(target, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out:
            target.close()


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",")]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",")]


def _add_graph_args(sub, with_theta=True):
    sub.add_argument("--scale", type=int, default=None)
    sub.add_argument("--edge-factor", type=int, default=16)
    sub.add_argument("--graph", default=None, help="edge-list file instead of RMAT")
    sub.add_argument("--seed", type=int, default=0)
    if with_theta:
        sub.add_argument("--theta", default="auto")


def _add_run_args(sub):
    sub.add_argument("--shape", default="1x1x1", help="nodes x ranks x gpus")
    sub.add_argument("--mode", choices=engine.MODES, default="dobfs")
    sub.add_argument("--factors", type=_float_list,
                     default=[0.5, 0.05, 1e-7],
                     help="switch-to-backward factors for dd,dn,nd")
    sub.add_argument("--factors1", type=_float_list, default=[0.0, 0.0, 0.0],
                     help="switch-to-forward factors for dd,dn,nd")
    sub.add_argument("--local-all2all", action="store_true")
    sub.add_argument("--uniquify", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delegate-bfs",
        description="Desk-scale delegate-partitioned BFS/DOBFS simulator")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("generate", help="write an RMAT edge list")
    _add_graph_args(sub, with_theta=False)
    sub.add_argument("--format", choices=("binary", "text"), default="binary")
    sub.add_argument("--no-randomize", action="store_true")
    sub.add_argument("--no-symmetrize", action="store_true")
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_generate)

    sub = subs.add_parser("partition", help="partition and optionally save")
    _add_graph_args(sub)
    sub.add_argument("--shape", default="1x1x1")
    sub.add_argument("--out", default=None, help="directory for DPG1 files")
    sub.set_defaults(func=cmd_partition)

    sub = subs.add_parser("memory", help="memory accounting report (JSON)")
    _add_graph_args(sub)
    sub.add_argument("--shape", default="1x1x1")
    sub.add_argument("--out", default=None)
    sub.set_defaults(func=cmd_memory)

    sub = subs.add_parser("run", help="run BFS/DOBFS, write a JSON report")
    _add_graph_args(sub)
    _add_run_args(sub)
    sub.add_argument("--source", type=int, default=None)
    sub.add_argument("--sources", type=int, default=20)
    sub.add_argument("--config", default=None, help="JSON RunConfig file")
    sub.add_argument("--out", default=None)
    sub.set_defaults(func=cmd_run)

    sub = subs.add_parser("verify", help="check levels against the oracle")
    _add_graph_args(sub)
    _add_run_args(sub)
    sub.add_argument("--sources", type=int, default=20)
    sub.set_defaults(func=cmd_verify)

    sub = subs.add_parser("sweep-theta", help="theta sweep, CSV output")
    _add_graph_args(sub, with_theta=False)
    _add_run_args(sub)
    sub.add_argument("--thetas", type=_int_list, default=[16, 32, 64, 128, 256])
    sub.add_argument("--sources", type=int, default=5)
    sub.add_argument("--out", default=None)
    sub.set_defaults(func=cmd_sweep_theta)

    sub = subs.add_parser("cost", help="cost-model curves over a p sweep")
    sub.add_argument("--n", type=int, required=True)
    sub.add_argument("--m", type=int, required=True)
    sub.add_argument("--p", type=int, default=1, help="reference worker count")
    sub.add_argument("--p-gpu", type=int, default=1)
    sub.add_argument("--g", type=float, default=1e-9)
    sub.add_argument("--S", type=int, default=6)
    sub.add_argument("--S-b", type=int, default=3)
    sub.add_argument("--n-t", type=int, default=None)
    sub.add_argument("--d", type=int, default=0)
    sub.add_argument("--e-nn", type=int, default=0)
    sub.add_argument("--p-sweep", type=_int_list, default=[16, 64, 256, 1024, 4096])
    sub.add_argument("--strong-scaling", action="store_true")
    sub.add_argument("--out", default=None)
    sub.set_defaults(func=cmd_cost)

    return parser


def _apply_config(args) -> None:
    if getattr(args, "config", None):
        cfg = RunConfig.from_file(args.config)
        for key, value in vars(cfg).items():
            if hasattr(args, key):
                setattr(args, key, value)


def main(argv=None) -> int:
    threads = os.environ.get("DELEGATE_BFS_THREADS")
    if threads is not None and (not threads.isdigit() or int(threads) < 1):
        print("error: DELEGATE_BFS_THREADS must be a positive integer",
              file=sys.stderr)
        return 2
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
