"""Command line entry point: ``jointsparse {run,sweep,summarize,plot,ranges}``."""
import argparse
import logging
import sys
from pathlib import Path

from . import harness


def _config(args):
    cfg = harness.load_config(args.config, seed=args.seed, out=args.out)
    if args.full:
        cfg = harness.full_config(cfg)
    return cfg


def cmd_run(args):
    cfg = _config(args)
    values = cfg.sweep_values
    point = values.index(args.point) if args.point is not None else 0
    if args.point is not None and args.point not in values:
        raise SystemExit(f"{args.point} is not in the sweep {values}")
    path = Path(cfg.out) / f"{cfg.name}-{cfg.sweep_var}{values[point]}.csv"
    rows, path = harness.run_sweep(cfg, path=path, workers=args.workers, points=[point])
    harness.write_summary(harness.summarize(rows), sys.stdout)
    print(f"wrote {path}", file=sys.stderr)


def cmd_sweep(args):
    cfg = _config(args)
    rows, path = harness.run_sweep(cfg, workers=args.workers)
    harness.write_summary(harness.summarize(rows), sys.stdout)
    print(f"wrote {path}", file=sys.stderr)


def cmd_summarize(args):
    rows = [r for p in args.csv for r in harness.read_csv(p)]
    harness.write_summary(harness.summarize(rows, keys=tuple(args.by)), sys.stdout)


def cmd_plot(args):
    rows = [r for p in args.csv for r in harness.read_csv(p)]
    series = tuple(args.series) if args.series else tuple(
        dict.fromkeys(f"{r.algorithm}@{r.topology}" for r in rows))
    spec = harness.PlotSpec(y=args.y, x=args.x, series=series, log_y=args.log, title=args.title)
    out = Path(args.out) if args.out else Path(args.csv[0]).with_suffix(f".{args.y}.svg")
    if out.is_dir():
        out = out / f"{args.y}-vs-{args.x}.svg"
    print(harness.emit_plot(rows, spec, out))


def cmd_ranges(args):
    table = harness.ranges_table(args.n, args.k, args.V, args.d, q=args.q, p=args.p)
    print("algorithm,min_bits,max_bits")
    for name, (lo, hi) in table.items():
        print(f"{name},{lo},{hi}")


def build_parser():
    parser = argparse.ArgumentParser(prog="jointsparse", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="flat TOML experiment config")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--full", action="store_true", help="250 runs per point instead of 50")
        p.add_argument("--workers", type=int, default=1, help="worker processes")
        p.set_defaults(func=func)
        return p

    experiment("run", cmd_run, "run a single sweep point").add_argument(
        "--point", type=int, help="sweep value to run (default: the first)")
    experiment("sweep", cmd_sweep, "run the whole sweep")

    p = sub.add_parser("summarize", help="aggregate sweep CSVs")
    p.add_argument("csv", nargs="+")
    p.add_argument("--by", nargs="+", default=["algorithm", "topology", "m", "V"])
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("plot", help="plot sweep CSVs as SVG")
    p.add_argument("csv", nargs="+")
    p.add_argument("--y", default="ase", choices=harness.SUMMARY_METRICS + ("t1",))
    p.add_argument("--x", default="m", choices=("m", "V"))
    p.add_argument("--series", nargs="+", help="algorithm or algorithm@topology")
    p.add_argument("--log", action="store_true", help="logarithmic y axis")
    p.add_argument("--title")
    p.add_argument("--out", help="output file or directory")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("ranges", help="analytic bit ranges on a d-regular graph")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--V", type=int, default=10)
    p.add_argument("--d", type=int, default=5, help="degree counting the node itself")
    p.add_argument("--q", type=int, default=16)
    p.add_argument("--p", type=int, default=20)
    p.set_defaults(func=cmd_ranges)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (harness.ConfigError, harness.MissingSeriesError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
