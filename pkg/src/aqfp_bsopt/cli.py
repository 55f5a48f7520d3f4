"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 unreadable or malformed input,
3 solver failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from collections import defaultdict
from pathlib import Path

from .config import PhaseConfig
from .corpus import BENCHMARKS, LARGE_BENCHMARKS, load
from .flow import optimize
from .initial import LevelAssignmentError
from .levels import total_cost
from .lp import NumericalError
from .netlist import NetlistError, from_json, parse_bench, parse_levels, serialize, to_json
from .verify import (buffer_chain_reduce, check_phase_legality, check_structure, report_json,
                     report_text, verify_solution)

EXIT_USAGE, EXIT_INPUT, EXIT_SOLVER, EXIT_VERIFY = 1, 2, 3, 4
CSV_HEADER = ["benchmark", "method", "skip", "buffers", "splitters", "total"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class InputError(Exception):
    pass


class UsageError(Exception):
    pass


def read_netlist(path: str):
    """(netlist, levels or None) from a bench-style or JSON file."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from e
    try:
        if path.endswith(".json"):
            return from_json(text)
        net = parse_bench(text)
        return net, parse_levels(text, net) or None
    except (NetlistError, ValueError, KeyError) as e:
        raise InputError(f"{path}: {e}") from e


def _write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def write_netlist(net, levels, path: str | None, fmt: str):
    text = to_json(net, levels) if fmt == "json" else serialize(net, levels)
    if path is None:
        sys.stdout.write(text)
    else:
        _write(path, text)


def _metrics_path(out: str | None, explicit: str | None) -> Path | None:
    if explicit:
        return Path(explicit)
    if out:
        p = Path(out)
        return p.with_name(p.stem + ".metrics.json")
    return None


def _config(args) -> PhaseConfig:
    try:
        return PhaseConfig(skip=args.skip, max_fanout=args.max_fanout, seed=args.seed,
                           subset_cap=args.subset_cap, enum_threshold=args.enum_threshold,
                           pi_level=args.pi_level)
    except ValueError as e:
        raise UsageError(str(e)) from e


def _benchmark_name(args) -> str:
    return args.benchmark or Path(args.input).stem


def cmd_optimize(args) -> int:
    cfg = _config(args)
    if args.max_iters < 1:
        raise UsageError("--max-iters must be >= 1")
    net, _ = read_netlist(args.input)
    t0 = time.perf_counter()
    sol = optimize(net, cfg, exact_ilp=args.lp == "exact", max_iters=args.max_iters)
    runtime_ms = round((time.perf_counter() - t0) * 1000)
    report = verify_solution(net, sol.netlist, sol.levels, cfg)
    if not report["ok"]:
        print(report_text(report), file=sys.stderr)
        return EXIT_VERIFY
    write_netlist(sol.netlist, sol.levels, args.output, args.format)
    metrics = {
        "benchmark": _benchmark_name(args), "method": "optimize", "skip": cfg.skip,
        **sol.cost.as_dict(), "iterations": sol.iterations, "runtime_ms": runtime_ms,
        "exact": args.lp == "exact", "max_fanout": cfg.max_fanout, "seed": cfg.seed,
        "fractional_cost": sol.fractional_cost, "stop_reason": sol.stop_reason,
    }
    mpath = _metrics_path(args.output, args.metrics)
    if mpath:
        _write(mpath, json.dumps(metrics, indent=2) + "\n")
    else:
        print(json.dumps(metrics), file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    original, _ = read_netlist(args.original)
    net, levels = read_netlist(args.optimized)
    if levels is None:
        raise InputError(f"{args.optimized}: no level annotations")
    cfg = PhaseConfig(skip=args.skip, max_fanout=args.max_fanout, pi_level=args.pi_level)
    report = verify_solution(original, net, levels, cfg)
    print(report_json(report) if args.json else report_text(report))
    return 0 if report["ok"] else EXIT_VERIFY


def cmd_reduce(args) -> int:
    net, levels = read_netlist(args.input)
    if levels is None:
        raise InputError(f"{args.input}: no level annotations")
    base = PhaseConfig(skip=0, max_fanout=args.max_fanout, pi_level=args.pi_level)
    if check_phase_legality(net, levels, base):
        raise InputError(f"{args.input}: not a legal skip-0 solution")
    cfg = base.with_skip(args.skip)
    out, lv = buffer_chain_reduce(net, levels, cfg)
    problems = check_phase_legality(out, lv, cfg) + check_structure(out, cfg.max_fanout)
    if problems:
        print("\n".join(map(str, problems)), file=sys.stderr)
        return EXIT_VERIFY
    write_netlist(out, lv, args.output, args.format)
    metrics = {"benchmark": _benchmark_name(args), "method": "chain_reduction",
               "skip": cfg.skip, **total_cost(out).as_dict()}
    mpath = _metrics_path(args.output, args.metrics)
    if mpath:
        _write(mpath, json.dumps(metrics, indent=2) + "\n")
    return 0


def _load_metrics(directory: str) -> list[dict]:
    root = Path(directory)
    if not root.is_dir():
        raise InputError(f"{directory}: not a directory")
    rows = []
    for path in sorted(root.glob("*.metrics.json")):
        try:
            m = json.loads(path.read_text())
            rows.append({"benchmark": str(m["benchmark"]), "method": str(m.get("method", "optimize")),
                         "skip": int(m["skip"]), "buffers": int(m["buffers"]),
                         "splitters": int(m["splitters"]), "total": int(m["total"])})
        except (ValueError, KeyError, TypeError) as e:
            raise InputError(f"{path}: malformed metrics ({e})") from e
    return sorted(rows, key=lambda r: (r["benchmark"], r["method"], r["skip"]))


def savings_rows(rows: list[dict]) -> list[list]:
    """Average per-circuit savings ``1 - total / reference`` in percent:
    against the circuit's own skip-0 optimize total, and for optimize rows
    also against chain reduction at the same skip."""
    total = {(r["benchmark"], r["method"], r["skip"]): r["total"] for r in rows}
    own, vs_chain = defaultdict(list), defaultdict(list)
    for (bench, method, skip), t in total.items():
        ref = total.get((bench, "optimize", 0))
        if skip > 0 and ref:
            own[(method, skip)].append(1 - t / ref)
        chain = total.get((bench, "chain_reduction", skip))
        if method == "optimize" and skip > 0 and chain:
            vs_chain[skip].append(1 - t / chain)
    out = []
    for (method, skip), vals in sorted(own.items()):
        out.append(["average_savings", method, skip, "", "", f"{100 * sum(vals) / len(vals):.1f}"])
    for skip, vals in sorted(vs_chain.items()):
        out.append(["average_savings_vs_chain", "optimize", skip, "", "",
                    f"{100 * sum(vals) / len(vals):.1f}"])
    return out


def cmd_report(args) -> int:
    rows = _load_metrics(args.directory)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r[k] for k in CSV_HEADER])
    w.writerows(savings_rows(rows))
    if args.output:
        _write(args.output, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_generate(args) -> int:
    write_netlist(load(args.name), None, args.output, args.format)
    return 0


def _add_phase_flags(p, full: bool):
    p.add_argument("--skip", type=int, choices=range(4), default=0, metavar="{0..3}",
                   help="phases an edge may skip (span = skip + 1)")
    p.add_argument("--max-fanout", type=int, default=4, help="splitter capacity X")
    p.add_argument("--pi-level", type=int, choices=(0, 1), default=0)
    if full:
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--subset-cap", type=int, default=32768)
        p.add_argument("--enum-threshold", type=int, default=15)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="aqfp-bsopt",
                 description="Buffer and splitter minimization for AQFP netlists under phase skipping.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", help="insert a minimal set of buffers and splitters")
    p.add_argument("input")
    _add_phase_flags(p, full=True)
    p.add_argument("--lp", choices=("relaxed", "exact"), default="relaxed")
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("-o", "--output")
    p.add_argument("--metrics")
    p.add_argument("--format", choices=("bench", "json"), default="bench")
    p.add_argument("--benchmark", help="name recorded in the metrics (default: input stem)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="check an optimized netlist against its original")
    p.add_argument("original")
    p.add_argument("optimized")
    _add_phase_flags(p, full=False)
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reduce", help="buffer-chain reduction of a skip-0 solution")
    p.add_argument("input")
    _add_phase_flags(p, full=False)
    p.add_argument("-o", "--output")
    p.add_argument("--metrics")
    p.add_argument("--format", choices=("bench", "json"), default="bench")
    p.add_argument("--benchmark")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("report", help="CSV summary of a directory of metrics files")
    p.add_argument("directory")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)

    names = sorted({**BENCHMARKS, **LARGE_BENCHMARKS})
    p = sub.add_parser("generate", help="write a built-in benchmark circuit")
    p.add_argument("name", choices=names)
    p.add_argument("-o", "--output")
    p.add_argument("--format", choices=("bench", "json"), default="bench")
    p.set_defaults(func=cmd_generate)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "max_fanout", 2) < 2:
            raise UsageError("--max-fanout must be >= 2")
        return args.func(args)
    except UsageError as e:
        print(f"aqfp-bsopt: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as e:
        print(f"aqfp-bsopt: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (LevelAssignmentError, NumericalError) as e:
        print(f"aqfp-bsopt: solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
