"""Command-line front end.

Subcommands: `run` (one simulation, timing + efficiency reports), `sweep`
(strategy x workers matrix with repeats and speedup tables), `verify`
(bit-identity check between two strategies), and `model` (the analytic
chunk-count load-balance table).  Exit codes: 0 success, 2 configuration
error, 3 verification failure, 4 capacity exceeded.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .config import (
    RunConfig,
    build_config,
    format_config,
    load_config,
    parse_strategy_literal,
)
from .errors import CapacityError, ConfigError, VerificationFailure
from .harness import (
    SPREAD_WARN,
    efficiency_rows,
    ensure_out_dir,
    run_id_for,
    sweep,
    verify_equivalence,
    write_efficiency_csv,
    write_speedup_tsv,
    write_timings_csv,
)
from .metrics import chunk_lb_model, chunk_speedup_model
from .simulate import run_simulation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_CAPACITY = 4


def _parse_sets(pairs: list[str]) -> dict:
    entries: dict[str, str] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


def _load(args) -> RunConfig:
    overrides = _parse_sets(args.set)
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        cfg = build_config(overrides)
    if getattr(args, "out", None):
        cfg = replace(cfg, out=args.out)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load(args)
    result = run_simulation(cfg)
    out = ensure_out_dir(cfg.out)
    run_id = run_id_for(cfg.strategy, cfg.workers)
    write_timings_csv(os.path.join(out, "timings.csv"), result, run_id)
    write_efficiency_csv(os.path.join(out, "efficiency.csv"),
                         efficiency_rows(result, run_id))
    with open(os.path.join(out, "config.resolved.txt"), "w", encoding="utf-8") as fh:
        fh.write(format_config(cfg))
    print(f"run_id    {run_id}")
    print(f"steps     {cfg.steps}")
    print(f"cells     {result.final_cell_count}")
    print(f"checksum  {result.checksum}")
    print(f"wall_s    {result.wall_seconds:.3f}")
    print(f"outputs   {out}/timings.csv {out}/efficiency.csv")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    repeats = args.repeats or None
    workers = [int(w) for w in args.workers.split(",")] if args.workers else None
    strategies = ([s.strip() for s in args.strategies.split(";") if s.strip()]
                  if args.strategies else None)
    result = sweep(cfg, strategies=strategies, workers_list=workers,
                   repeats=repeats, baseline=args.baseline)
    out = ensure_out_dir(cfg.out)
    write_efficiency_csv(os.path.join(out, "efficiency.csv"), result.efficiency_rows)
    write_speedup_tsv(os.path.join(out, "speedup.tsv"), result)
    print(f"baseline  {result.baseline}")
    print("strategy\tworkers\tmedian_s\tspread\tspeedup\tvs_base\tstatus")
    for cell in result.cells:
        if not cell.ok:
            print(f"{cell.strategy}\t{cell.workers}\t-\t-\t-\t-\tFAIL: {cell.error}")
            continue
        up = result.speedup_vs_one_worker(cell.strategy, cell.workers)
        vs = result.speedup_vs_baseline(cell.strategy, cell.workers)
        flag = " (spread>5%)" if cell.spread > SPREAD_WARN else ""
        print(
            f"{cell.strategy}\t{cell.workers}\t{cell.median:.3f}\t"
            f"{cell.spread:.3f}{flag}\t"
            f"{'-' if up is None else f'{up:.3f}'}\t"
            f"{'-' if vs is None else f'{vs:.3f}'}\tok"
        )
    print(f"outputs   {out}/efficiency.csv {out}/speedup.tsv")
    return EXIT_OK


def _cmd_verify(args) -> int:
    cfg = _load(args)
    cfg_a = replace(cfg, strategy=parse_strategy_literal(args.strategy_a),
                    workers=args.workers_a or cfg.workers)
    cfg_b = replace(cfg, strategy=parse_strategy_literal(args.strategy_b),
                    workers=args.workers_b or cfg.workers)
    report = verify_equivalence(cfg_a, cfg_b)
    print(f"A {args.strategy_a} (workers={cfg_a.workers})  checksum {report.checksum_a}")
    print(f"B {args.strategy_b} (workers={cfg_b.workers})  checksum {report.checksum_b}")
    print(("PASS: " if report.passed else "FAIL: ") + report.detail)
    if not report.passed:
        return EXIT_VERIFY
    return EXIT_OK


def _cmd_model(args) -> int:
    n = args.chunks
    print("workers\tchunks_per_worker\tmodel_lb\tmodel_speedup")
    for t in range(1, args.max_workers + 1):
        lb = chunk_lb_model(n, t)
        print(f"{t}\t{-(-n // t)}\t{lb:.6f}\t{chunk_speedup_model(n, t):.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellbench",
        description="Strategy-swappable cell simulation kernel and benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config entry (repeatable)")
        p.add_argument("--out", help="output directory (overrides config)")

    p_run = sub.add_parser("run", help="run one simulation and write reports")
    common(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a strategy x workers matrix")
    common(p_sweep)
    p_sweep.add_argument("--repeats", type=int, default=0,
                         help="runs per cell (default from config)")
    p_sweep.add_argument("--workers", help="comma list, e.g. 1,2,4,8")
    p_sweep.add_argument("--strategies", help="semicolon-separated strategy literals")
    p_sweep.add_argument("--baseline", help="baseline strategy literal")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="check two strategies for bit-identity")
    common(p_verify)
    p_verify.add_argument("-A", "--strategy-a", required=True,
                          help="strategy literal, e.g. temp/outer/cell_static/append")
    p_verify.add_argument("-B", "--strategy-b", required=True)
    p_verify.add_argument("--workers-a", type=int)
    p_verify.add_argument("--workers-b", type=int)
    p_verify.set_defaults(fn=_cmd_verify)

    p_model = sub.add_parser("model", help="print the chunk-count load-balance table")
    p_model.add_argument("--chunks", type=int, default=75)
    p_model.add_argument("--max-workers", type=int, default=48)
    p_model.set_defaults(fn=_cmd_model)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationFailure as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":
    sys.exit(main())
