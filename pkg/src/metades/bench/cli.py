"""Command line entry point: ``bench run|sweep|report|significance``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import RunConfig
from .protocol import read_records, run_protocol
from .report import write_report
from .stats import significance
from .sweep import sweep, write_sweep


def _config(args) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
    over = {k: v for k, v in (("output_dir", getattr(args, "out", None)),
                              ("workers", getattr(args, "workers", None)),
                              ("replications", getattr(args, "replications", None))) if v is not None}
    if over:
        cfg = RunConfig.from_dict({**cfg.to_dict(), **over})
    return cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    records = run_protocol(cfg)
    print(write_report(records, cfg.output_dir), end="")
    print(f"records: {Path(cfg.output_dir) / 'records.csv'}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
    points = sweep(cfg, args.param)
    path = Path(cfg.output_dir) / f"sweep_{args.param}.csv"
    print(write_sweep(points, path), end="")
    print(f"written: {path}")
    return 0


def cmd_report(args) -> int:
    records = read_records(args.input)
    out = args.out or Path(args.input).parent
    print(write_report(records, out), end="")
    return 0


def cmd_significance(args) -> int:
    records = read_records(args.input)
    datasets = [args.dataset] if args.dataset else list(dict.fromkeys(r.dataset for r in records))
    if not datasets:
        print(f"no records in {args.input}", file=sys.stderr)
        return 1
    status = 0
    for d in datasets:
        try:
            s = significance(records, args.a, args.b, d)
        except ValueError as err:
            print(f"{d}: {err}", file=sys.stderr)
            status = 1
            continue
        print(f"{d}: {args.a} vs {args.b}  H={s.statistic:.4f}  p={s.p_value:.4g}  "
              f"({s.n_a} vs {s.n_b} replications) -> {s.verdict()} at 95%")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bench", description="META-DES benchmark harness")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the replicated protocol and write records.csv")
    run.add_argument("--config", help="JSON file with RunConfig fields")
    run.add_argument("--out", help="output directory (overrides the config)")
    run.add_argument("--workers", type=int)
    run.add_argument("--replications", type=int)
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="D_SEL accuracy across a parameter grid")
    sw.add_argument("--param", choices=("h_c", "kp"), required=True)
    sw.add_argument("--config")
    sw.add_argument("--out")
    sw.add_argument("--replications", type=int)
    sw.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="summary tables from a records file")
    rep.add_argument("--in", dest="input", required=True)
    rep.add_argument("--out", help="directory for summary.csv/summary.txt (default: next to input)")
    rep.set_defaults(func=cmd_report)

    sig = sub.add_parser("significance", help="Kruskal-Wallis test between two techniques")
    sig.add_argument("--a", required=True)
    sig.add_argument("--b", required=True)
    sig.add_argument("--in", dest="input", default="results/records.csv")
    sig.add_argument("--dataset")
    sig.set_defaults(func=cmd_significance)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
