"""Command-line entry point: ``oraclebandit simulate | analyze | sweep``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from contextlib import contextmanager

from . import analysis
from .config import load_config
from .errors import ConfigError, DomainError, TraceError
from .harness import (run_simulation, sweep, write_log, write_metrics_csv,
                      write_sweep_csv)
from .stream import load_trace

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.raw.setdefault("run", {})["seed"] = args.seed
    if args.policy is not None:
        cfg.policy = args.policy
        cfg.raw.setdefault("run", {})["policy"] = args.policy
    if args.repetitions is not None:
        cfg.repetitions = args.repetitions
        cfg.raw.setdefault("run", {})["repetitions"] = args.repetitions
    result = run_simulation(cfg)
    with _output(args.out) as fh:
        write_metrics_csv(fh, result.repetitions + [result.metrics])
    if args.log:
        write_log(args.log, result.logs)
    if args.plot:
        from .plotting import plot_run
        plot_run(result.logs[0], args.plot, cfg.oracle.cost_ms)
    return EXIT_OK


def _read_regimes(path):
    regimes = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                p = row.get("p", "").strip()
                regimes.append(analysis.RegimeSpec(
                    int(row["N"]), float(row["a"]), int(row["n"]),
                    None if p in ("", "N/A", "NA") else float(p),
                    int(row["w"]), int(row["c"])))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"{path}: line {lineno}: bad regime row ({exc})") from None
    return regimes


def cmd_window_support(args) -> int:
    regimes = _read_regimes(args.regimes) if args.regimes else analysis.REFERENCE_REGIMES
    rows = analysis.window_support_table(regimes)
    fmt = analysis.format_probability
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "N", "a", "n", "p", "w", "c", "p_in", "p_out"])
        for r in rows:
            g = r.regime
            w.writerow([r.index, g.num_classes, f"{g.oracle_accuracy:g}", g.n_dominant,
                        "N/A" if g.skew is None or g.n_dominant == 0 else f"{g.skew:g}",
                        g.window, g.support, fmt(r.p_in), fmt(r.p_out)])
    return EXIT_OK


def cmd_skew(args) -> int:
    stream = load_trace(args.trace)
    skews = [float(s) for s in args.skews.split(",") if s.strip()]
    curves = analysis.skew_cdf(stream.labels, args.segment_items, skews)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n"] + [f"s{s:g}" for s in skews])
        for i, n in enumerate(curves.n_values):
            w.writerow([int(n)] + [f"{curves.fractions[s][i]:.6g}" for s in skews])
    if args.plot:
        from .plotting import plot_skew_cdf
        plot_skew_cdf(curves, args.plot)
    return EXIT_OK


def cmd_sweep(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        try:
            base = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from None
    load_config(args.config)  # fail fast on a bad base config
    values = [_parse_value(v) for v in args.values.split(",") if v.strip()]
    points = sweep(base, args.param, values)
    with _output(args.out) as fh:
        write_sweep_csv(fh, args.param, points)
    if args.plot:
        from .plotting import plot_sweep
        plot_sweep(args.param, points, args.plot)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oraclebandit",
        description="Simulate online model specialization on class-skewed streams.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one configuration")
    sim.add_argument("--config", required=True)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--policy",
                     help="weg | oracle | fixed-window=<w> | variable-skew | simple-exit")
    sim.add_argument("--repetitions", type=int)
    sim.add_argument("--out", help="metrics CSV (default: stdout)")
    sim.add_argument("--log", help="per-step JSONL log")
    sim.add_argument("--plot", help="PNG of the first repetition's cost timeline")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="closed-form and trace analyses")
    ana_sub = ana.add_subparsers(dest="analysis", required=True)
    ws = ana_sub.add_parser("window-support", help="dominant-class detection table")
    ws.add_argument("--regimes", help="CSV with columns N,a,n,p,w,c")
    ws.add_argument("--out")
    ws.set_defaults(func=cmd_window_support)
    sk = ana_sub.add_parser("skew", help="skew CDF of a label trace")
    sk.add_argument("--trace", required=True)
    sk.add_argument("--segment-items", type=int, required=True)
    sk.add_argument("--skews", default="60,70,80,90")
    sk.add_argument("--out")
    sk.add_argument("--plot")
    sk.set_defaults(func=cmd_skew)

    sw = sub.add_parser("sweep", help="run a configuration across parameter values")
    sw.add_argument("--config", required=True)
    sw.add_argument("--param", required=True, help="dotted path, e.g. weg.epsilon")
    sw.add_argument("--values", required=True, help="comma separated")
    sw.add_argument("--out")
    sw.add_argument("--plot")
    sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TraceError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
