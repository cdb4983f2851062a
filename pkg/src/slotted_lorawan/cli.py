"""Command-line front end.

Exit codes: 0 success, 2 invalid configuration or usage, 3 runtime fault.
Data goes to stdout (or ``--out``); diagnostics go to stderr only.
"""

from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path
from typing import Any, Sequence

from . import analytic
from .airtime import FrameSpec, RadioConfig, airtime_report
from .clock import read_sync_csv, sync_error_stats, write_sync_csv
from .errors import ConfigInvalid, LoRaSimError
from .presets import PRESET_NAMES, run_preset
from .scenario import Scenario
from .simulator import CSV_HEADER, NORMALIZATIONS, compute_metrics, rows_to_csv, rows_to_json, simulate, sweep, trace_to_csv

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

SYNC_STATS_HEADER = ("count", "min_us", "max_us", "mean_us", "p25_us", "median_us", "p75_us")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors share the config exit code
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(None), help="master RNG seed")
    p.add_argument("--out", type=Path, default=d(None), help="write data here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=d("csv"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slotted-lorawan", description="Slotted vs pure LoRaWAN channel simulator.")
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("airtime", parents=[common], help="time on air of one frame")
    a.add_argument("--sf", type=int, required=True)
    a.add_argument("--bw", type=int, default=125_000, help="bandwidth in Hz")
    a.add_argument("--cr", type=int, default=1, help="coding rate index 1..4 (4/5..4/8)")
    a.add_argument("--preamble", type=int, default=8)
    a.add_argument("--payload", type=int, required=True, help="PHY payload bytes")
    a.add_argument("--crc", action=argparse.BooleanOptionalAction, default=True)
    a.add_argument("--low-dr-optimize", choices=("auto", "on", "off"), default="auto")

    c = sub.add_parser("curves", parents=[common], help="closed-form S(G) curves")
    c.add_argument("--g-min", type=float, default=0.0)
    c.add_argument("--g-max", type=float, default=3.0)
    c.add_argument("--g-steps", type=int, default=301)
    c.add_argument("--overhead-k", type=float, default=None, help="k = (T + RX1 + T_ack) / T")
    c.add_argument("--t-payload", type=float, default=1.253, help="seconds, used when --overhead-k is absent")
    c.add_argument("--t-ack", type=float, default=0.530)
    c.add_argument("--rx1-delay", type=float, default=1.0)

    r = sub.add_parser("run", parents=[common], help="simulate one scenario file")
    r.add_argument("--config", type=Path, required=True)
    r.add_argument("--normalization", choices=NORMALIZATIONS, default="payload")
    r.add_argument("--trace", type=Path, default=None, help="write the MAC transition trace (CSV)")
    r.add_argument("--sync-samples", type=Path, default=None, help="write sync error samples (CSV)")

    s = sub.add_parser("sweep", parents=[common], help="grid sweep over scenario fields")
    s.add_argument("--config", type=Path, default=None, help="base scenario (defaults if omitted)")
    s.add_argument(
        "--grid",
        action="append",
        required=True,
        metavar="KEY=V1,V2,...",
        help="dotted field and values, e.g. slot.t_b_us=50000,100000; repeatable",
    )
    s.add_argument("--seeds", type=int, default=1, help="seeds per point, counted up from --seed")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--normalization", choices=NORMALIZATIONS, default="payload")

    pr = sub.add_parser("preset", parents=[common], help="named reproduction preset")
    pr.add_argument("name", choices=PRESET_NAMES)

    ss = sub.add_parser("sync-stats", parents=[common], help="sync error order statistics")
    src = ss.add_mutually_exclusive_group(required=True)
    src.add_argument("--samples", type=Path, help="CSV written by run --sync-samples")
    src.add_argument("--config", type=Path, help="simulate this scenario and use its samples")
    return parser


# -- helpers ------------------------------------------------------------------------


def _parse_value(text: str) -> Any:
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    return text


def parse_grid(items: Sequence[str]) -> dict[str, list[Any]]:
    grid: dict[str, list[Any]] = {}
    for item in items:
        key, sep, values = item.partition("=")
        if not sep or not key or not values:
            raise ConfigInvalid("grid-syntax", repr(item))
        grid[key.strip()] = [_parse_value(v.strip()) for v in values.split(",") if v.strip()]
    return grid


def _render(header: Sequence[str], rows: Sequence[dict[str, Any]], fmt: str) -> str:
    return rows_to_json(rows, header) if fmt == "json" else rows_to_csv(rows, header)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _stats_row(stats) -> dict[str, Any]:
    d = stats.as_dict()
    return {"count": d.pop("count"), **{f"{k}_us": v for k, v in d.items()}}


# -- subcommands ------------------------------------------------------------------


def _cmd_airtime(args) -> tuple[Sequence[str], list[dict]]:
    de = {"auto": None, "on": True, "off": False}[args.low_dr_optimize]
    cfg = RadioConfig(
        sf=args.sf, bw_hz=args.bw, cr=args.cr, n_preamble=args.preamble, crc_on=args.crc, low_dr_optimize=de
    )
    rep = airtime_report(FrameSpec(cfg, args.payload))
    return tuple(rep), [rep]


def _cmd_curves(args):
    k = args.overhead_k
    if k is None:
        k = analytic.overhead_factor(analytic.OverheadModel(args.t_payload, args.t_ack, args.rx1_delay))
    rows = analytic.curves(args.g_min, args.g_max, args.g_steps, k)
    return analytic.CURVE_HEADER, [dict(zip(analytic.CURVE_HEADER, r)) for r in rows]


def _cmd_run(args):
    scn = Scenario.load(args.config)
    log = simulate(scn, args.seed, trace=args.trace is not None)
    if args.trace is not None:
        args.trace.write_text(trace_to_csv(log.trace), encoding="utf-8")
    if args.sync_samples is not None:
        buf = io.StringIO()
        write_sync_csv(buf, log.sync_samples)
        args.sync_samples.write_text(buf.getvalue(), encoding="utf-8")
    report = compute_metrics(log, args.normalization)
    return CSV_HEADER, [report.csv_row()]


def _cmd_sweep(args):
    base = Scenario.load(args.config) if args.config else Scenario()
    first = base.scenario.seed if args.seed is None else args.seed
    if args.seeds < 1:
        raise ConfigInvalid("seeds", repr(args.seeds))
    grid = parse_grid(args.grid)
    rows = sweep(base, grid, range(first, first + args.seeds), args.normalization, args.workers)
    for row in rows:
        if row["error"]:
            print(f"sweep point {row}: {row['error']}", file=sys.stderr)
    header = tuple(grid) + tuple(h for h in CSV_HEADER if h not in grid) + ("error",)
    return header, rows


def _cmd_preset(args):
    res = run_preset(args.name, 0 if args.seed is None else args.seed)
    return res.header, res.rows


def _cmd_sync_stats(args):
    if args.samples is not None:
        try:
            with args.samples.open(encoding="utf-8") as fh:
                samples = read_sync_csv(fh)
        except OSError as exc:
            raise ConfigInvalid("samples-file", f"{args.samples}: {exc.strerror or exc}") from exc
    else:
        samples = simulate(Scenario.load(args.config), args.seed).sync_samples
    return SYNC_STATS_HEADER, [_stats_row(sync_error_stats(samples))]


COMMANDS = {
    "airtime": _cmd_airtime,
    "curves": _cmd_curves,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "preset": _cmd_preset,
    "sync-stats": _cmd_sync_stats,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        header, rows = COMMANDS[args.command](args)
        _emit(_render(header, rows, args.format), args.out)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LoRaSimError, OSError, ArithmeticError) as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
