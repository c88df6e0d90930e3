"""Command-line driver: optimize, sweep, tradeoff, simulate.

Exit codes: 0 success, 1 usage error, 2 infeasible budget or invalid design.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .cnn import CnnSpecError, load_cnn
from .cost import GIB, DesignError, ResourceBudget, design_metrics
from .optimizer import InfeasibleError, OptimizerConfig, run_optimizer, tradeoff_frontier
from .report import (PRESETS, SWEEP_COLUMNS, design_report, design_rows, dump_design, load_design, sweep, to_csv,
                     tradeoff_rows)

EXIT_USAGE = 1
EXIT_INFEASIBLE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _budget_flags(p):
    p.add_argument("--cnn", default="alexnet", help="builtin name (alexnet, vgg-e) or JSON file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="default budgets for a device")
    p.add_argument("--dsp", type=int)
    p.add_argument("--bram", type=int)
    p.add_argument("--bw-gib", type=float)
    p.add_argument("--freq-mhz", type=float, default=100.0)
    p.add_argument("--mode", choices=["single", "multi"], default="multi")
    p.add_argument("--step", type=float, default=0.01)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="multiclp", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="find the fastest design within the budgets")
    _budget_flags(p)
    p.add_argument("--json-out", help="write the design as JSON")
    p.add_argument("--csv-out", help="write per-layer rows as CSV")

    p = sub.add_parser("sweep", help="optimize over a range of DSP budgets")
    p.add_argument("--cnn", default="alexnet")
    p.add_argument("--dsp-min", type=int, default=100)
    p.add_argument("--dsp-max", type=int, default=10000)
    p.add_argument("--dsp-step", type=int, default=100)
    p.add_argument("--bram-ratio", type=float, default=1.3, help="DSP slices per BRAM")
    p.add_argument("--bw-gib", type=float, default=4.5)
    p.add_argument("--freq-mhz", type=float, default=100.0)
    p.add_argument("--modes", default="single,multi")
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--csv-out", help="CSV file (default: stdout)")

    p = sub.add_parser("tradeoff", help="BRAM/bandwidth Pareto points at the best throughput")
    _budget_flags(p)
    p.add_argument("--csv-out", help="CSV file (default: stdout)")

    p = sub.add_parser("simulate", help="run a design over an image stream")
    p.add_argument("--cnn", default="alexnet")
    p.add_argument("--design", required=True, help="design JSON written by optimize")
    p.add_argument("--images", type=int, default=100)
    p.add_argument("--freq-mhz", type=float, default=100.0)
    p.add_argument("--csv-out", help="write the segment trace as CSV")
    p.add_argument("--json-out", help="write the summary as JSON")
    return ap


def _cnn(args):
    try:
        return load_cnn(args.cnn)
    except (CnnSpecError, OSError) as e:
        raise UsageError(f"cannot load CNN {args.cnn!r}: {e}") from None


def _budget(args) -> ResourceBudget:
    vals = dict(PRESETS[args.preset]) if args.preset else {}
    for key, flag in (("n_dsp", args.dsp), ("n_bram", args.bram), ("bw_gib", args.bw_gib)):
        if flag is not None:
            vals[key] = flag
    missing = [k for k in ("n_dsp", "n_bram", "bw_gib") if k not in vals]
    if missing:
        raise UsageError("missing budget: give --preset or " + ", ".join(
            {"n_dsp": "--dsp", "n_bram": "--bram", "bw_gib": "--bw-gib"}[k] for k in missing))
    if vals["n_bram"] < 0 or vals["bw_gib"] <= 0 or args.freq_mhz <= 0:
        raise UsageError("budgets and frequency must be positive")
    return ResourceBudget(vals["n_dsp"], vals["n_bram"], vals["bw_gib"] * GIB, args.freq_mhz * 1e6)


def _config(args) -> OptimizerConfig:
    try:
        return OptimizerConfig(step=args.step, mode=args.mode)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _write(path, text):
    Path(path).write_text(text, encoding="utf-8", newline="")


def cmd_optimize(args, out):
    cnn, budget, cfg = _cnn(args), _budget(args), _config(args)
    res = run_optimizer(cnn, budget, cfg)
    out.write(design_report(res.design, cnn, budget))
    if args.json_out:
        _write(args.json_out, dump_design(res.design, cnn))
    if args.csv_out:
        _write(args.csv_out, to_csv(*design_rows(res.design, cnn)))


def cmd_sweep(args, out):
    cnn = _cnn(args)
    if args.dsp_min < 5:
        raise UsageError("--dsp-min must be at least 5")
    if args.dsp_step < 1 or args.dsp_max < args.dsp_min or args.bram_ratio <= 0:
        raise UsageError("bad sweep range")
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    if not modes or any(m not in ("single", "multi") for m in modes):
        raise UsageError("--modes takes single, multi or both")
    points = sweep(cnn, range(args.dsp_min, args.dsp_max + 1, args.dsp_step), args.bram_ratio, args.bw_gib,
                   modes, args.freq_mhz * 1e6, args.step,
                   progress=lambda p: logging.info("dsp %d %s done", p.dsp, p.mode))
    text = to_csv(SWEEP_COLUMNS, [p.row() for p in points])
    if args.csv_out:
        _write(args.csv_out, text)
    else:
        out.write(text)


def cmd_tradeoff(args, out):
    cnn, budget, cfg = _cnn(args), _budget(args), _config(args)
    text = to_csv(*tradeoff_rows(tradeoff_frontier(cnn, budget, cfg)))
    if args.csv_out:
        _write(args.csv_out, text)
    else:
        out.write(text)


def cmd_simulate(args, out):
    cnn = _cnn(args)
    if args.images < 1:
        raise UsageError("--images must be at least 1")
    try:
        text = Path(args.design).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read design: {e}") from None
    design = load_design(text, cnn)
    freq = args.freq_mhz * 1e6
    m = design_metrics(design, cnn, freq)
    trace = pipeline.simulate(design, cnn, args.images, freq)
    s = pipeline.summary(trace)
    s["analytic_img_per_s"] = m.throughput_img_s
    s["analytic_utilization"] = m.utilization
    out.write(f"images            {s['images']}\n")
    out.write(f"segments          {s['segments']} ({s['warmup_segments']} warmup, {s['steady_segments']} steady, "
              f"{s['drain_segments']} drain)\n")
    out.write(f"latency           {s['latency_segments']} segments\n")
    if s["steady_segments"]:
        out.write(f"steady segment    {s['steady_segment_cycles']:,} cycles\n")
        out.write(f"steady throughput {s['steady_img_per_s']:.2f} img/s (model {m.throughput_img_s:.2f})\n")
        out.write(f"in flight         {s['in_flight']} images\n")
        out.write(f"steady util       {100 * s['steady_utilization']:.2f}% (model {100 * m.utilization:.2f}%)\n")
        for k, pct in enumerate(s["clp_idle_pct"]):
            out.write(f"CLP{k} idle         {pct:.2f}%\n")
    out.write(f"overall util      {100 * s['utilization']:.2f}%\n")
    if args.csv_out:
        _write(args.csv_out, trace.to_csv())
    if args.json_out:
        _write(args.json_out, json.dumps(s, indent=2) + "\n")


COMMANDS = {"optimize": cmd_optimize, "sweep": cmd_sweep, "tradeoff": cmd_tradeoff, "simulate": cmd_simulate}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        COMMANDS[args.command](args, out)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleError, DesignError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return 0


if __name__ == "__main__":
    sys.exit(main())
