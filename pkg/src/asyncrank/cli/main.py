"""``rank`` command line tool."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from ..engine import Schedule, run_async
from ..errors import ConfigError, RankError
from ..kernels import (
    BACKEND,
    ORACLE_MAX_N,
    GoogleParams,
    apply_google,
    dense_oracle,
    format_rank_vector,
    parse_rank_vector,
    residual_l1,
    run_sync,
)
from ..webgraph import generate_synthetic, partition_rows, read_edge_list, write_edge_list
from .config import RunConfig, load_config, parse_synthetic_spec
from .report import RunReport, compare_rankings, top_k

log = logging.getLogger("asyncrank")

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_ERROR = 0, 1, 2


def load_graph(source: str, base_index: int = 0):
    if source.startswith("synthetic:"):
        return generate_synthetic(**parse_synthetic_spec(source))
    try:
        return read_edge_list(source, base_index=base_index)
    except OSError as exc:
        raise ConfigError(f"cannot read graph {source}: {exc}", key="graph") from exc


def make_params(config: RunConfig, n: int) -> GoogleParams:
    if config.v == "uniform":
        return GoogleParams(n, config.alpha)
    try:
        v = parse_rank_vector(Path(config.v).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load teleportation vector: {exc}", key="v") from exc
    return GoogleParams(n, config.alpha, v)


def run(config: RunConfig):
    """Execute one configured run; returns ``(report, exit_code)``."""
    config.validate()
    graph = load_graph(config.graph, config.base_index)
    params = make_params(config, graph.n)
    log.info("graph: %r", graph)

    fields = dict(config=config.as_dict(), mode=config.mode, kernel=config.kernel,
                  n=graph.n, backend=BACKEND)
    if config.mode == "sync":
        res = run_sync(graph, params, config.tolerance, config.max_iters, kernel=config.kernel)
        x = res.x
        report = RunReport(
            **fields, p=1, converged=res.converged, wall_time=res.wall_time,
            global_residual=residual_l1(x, apply_google(graph, x, params)),
            x=x.tolist(), top_k=top_k(x, min(config.top_k, graph.n)),
            iterations=res.iterations)
    else:
        partition = partition_rows(graph.n, config.p)
        common = dict(kernel=config.kernel, tolerance=config.tolerance,
                      pc_max=config.pcmax_ue, pc_max_monitor=config.pcmax_monitor,
                      max_iters=config.max_iters)
        start = time.perf_counter()
        if config.mode == "async-sim":
            if config.schedule == "lockstep":
                schedule = Schedule.lockstep()
            else:
                schedule = Schedule.seeded(config.seed, config.delay_bound, config.drop_rate)
            res = run_async(graph, params, partition, schedule=schedule, execution="sim",
                            record_trace=False, **common)
        else:
            execution = "threads" if config.mode == "async-threads" else "tcp"
            res = run_async(graph, params, partition, execution=execution,
                            base_port=config.base_port, send_timeout=config.send_timeout,
                            step_pause=config.step_pause, **common)
        wall = time.perf_counter() - start
        x = res.x
        t_min, t_max = float(np.min(res.per_ue_time)), float(np.max(res.per_ue_time))
        report = RunReport(
            **fields, p=config.p, converged=res.converged, wall_time=wall,
            global_residual=res.global_residual, x=x.tolist(),
            top_k=top_k(x, min(config.top_k, graph.n)),
            per_ue_iters=list(res.per_ue_iters), per_ue_time=list(res.per_ue_time),
            iters_min=int(min(res.per_ue_iters)), iters_max=int(max(res.per_ue_iters)),
            t_min=t_min, t_max=t_max,
            import_matrix=res.import_matrix.tolist(),
            completed_imports_pct=res.completed_imports_pct())
        if config.paired_sync:
            sync = run_sync(graph, params, config.tolerance, config.max_iters,
                            kernel=config.kernel)
            report.sync_iterations = sync.iterations
            report.sync_time = sync.wall_time
            report.speedup = speedup(sync.wall_time, t_min, t_max)

    if graph.n <= ORACLE_MAX_N:
        report.oracle_error = residual_l1(x, dense_oracle(graph, params))
    return report, EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def speedup(sync_time: float, t_min: float, t_max: float) -> float:
    """Synchronous time over the mean of the asynchronous extremes."""
    mean = 0.5 * (t_min + t_max)
    return sync_time / mean if mean > 0 else float("inf")


def _cmd_run(args):
    config = load_config(args.config)
    report, code = run(config)
    print(report.summary())
    out = args.report or config.report_path
    if out:
        Path(out).write_text(report.to_json())
        print(f"report written to {out}")
    return code


def _cmd_gen(args):
    graph = generate_synthetic(**parse_synthetic_spec(args.spec))
    write_edge_list(graph, args.out)
    print(f"wrote {graph!r} to {args.out}")
    return EXIT_OK


def _cmd_compare(args):
    a = RunReport.from_json(Path(args.report1).read_text())
    b = RunReport.from_json(Path(args.report2).read_text())
    stats = compare_rankings(a.x, b.x, min(args.top_k, len(a.x)))
    stats["l1_distance"] = residual_l1(a.x, b.x)
    for key, value in stats.items():
        print(f"{key}: {value}")
    return EXIT_OK


def _cmd_oracle(args):
    graph = load_graph(args.graph, args.base_index)
    params = GoogleParams(graph.n, args.alpha)
    x = dense_oracle(graph, params)
    text = format_rank_vector(x)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {graph.n} values to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rank", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a configured computation and report")
    p.add_argument("config")
    p.add_argument("--report", help="JSON report path (overrides report_path)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("gen", help="write a synthetic graph as an edge list")
    p.add_argument("spec", help="e.g. n=1000,avg=8,dangling=0.1,seed=42")
    p.add_argument("out")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("compare", help="compare the rankings in two reports")
    p.add_argument("report1")
    p.add_argument("report2")
    p.add_argument("--top-k", type=int, default=10)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("oracle", help="dense direct solve for a small graph")
    p.add_argument("graph", help="edge-list path or synthetic:<spec>")
    p.add_argument("--alpha", type=float, default=0.85)
    p.add_argument("--base-index", type=int, default=0, choices=(0, 1))
    p.add_argument("--out")
    p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (RankError, OSError) as exc:
        print(f"rank: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
