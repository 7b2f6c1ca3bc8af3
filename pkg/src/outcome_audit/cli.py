"""Command-line entry point: ``outcome-audit {audit,simulate,diagnose,oracle}``.

Exit status is 0 on success, 1 on bad input (or a failed oracle suite) and 2 on
an unexpected internal error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import io, oracle, simulation
from .diagnostics import monotonicity_violation
from .errors import OutcomeAuditError
from .polarity import DecisionPolarity
from .verdicts import Mode


def _group_map(text: str | None):
    if not text:
        return None
    out = {}
    for part in text.split(","):
        label, _, code = part.partition("=")
        if not code:
            raise argparse.ArgumentTypeError("group map entries look like label=0")
        out[label.strip()] = int(code)
    return out


def _mode(args) -> Mode:
    if args.mode == "significance":
        return Mode(args.alpha)
    return Mode()


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--polarity", choices=[v.value for v in DecisionPolarity], default="desirable")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--mode", choices=["point", "significance"], default="point")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="outcome-audit", description="Robust outcome test for discrimination audits.")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("audit", help="run the three tests on every unit of a CSV")
    a.add_argument("input")
    a.add_argument("--group-map", help="e.g. white=0,black=1 (default: sorted labels when exactly two)")
    a.add_argument("--input-mode", choices=["auto", "unit", "aggregate"], default="auto")
    a.add_argument(
        "--min-count",
        type=int,
        nargs="?",
        const=io.DEFAULT_MIN_STOPS,
        default=None,
        help=f"drop units with fewer rows per group (bare flag: {io.DEFAULT_MIN_STOPS})",
    )
    a.add_argument("--bins", type=int, default=10, help="risk bins for the monotonicity score")
    a.add_argument("--format", choices=["json", "csv"], default="json")
    a.add_argument("--out", help="report path (default: stdout summary only)")
    a.add_argument("--plot-data", help="write unit_id,n_stops,delta_dr,delta_or,quadrant CSV here")
    a.add_argument("--variance-denominator", choices=["positives", "group"], default="positives")
    _add_common(a)

    s = sub.add_parser("simulate", help="sweep policy percentiles over a preset risk pair")
    s.add_argument("--preset", choices=simulation.preset_names(), default="base_rate_gap")
    s.add_argument("--family", choices=simulation.FAMILIES, default="threshold")
    s.add_argument("--bins", type=int, default=simulation.PRESET_BINS)
    s.add_argument("--percentile-basis", choices=simulation.BASES, default="pooled")
    s.add_argument("--out", help="grid CSV path")
    _add_common(s)

    d = sub.add_parser("diagnose", help="monotonicity score of a unit-level CSV with risk scores")
    d.add_argument("input")
    d.add_argument("--group-map")
    d.add_argument("--bins", type=int, default=10)
    d.add_argument("--min-count", type=int, default=50, help="minimum rows per risk bin")
    d.add_argument("--format", choices=["json", "csv"], default="json")
    d.add_argument("--out")
    _add_common(d)

    o = sub.add_parser("oracle", help="exhaustive and randomized checks of the guarantee")
    o.add_argument("--suite", choices=["proposition", "theorem", "counterexample", "all"], default="all")
    o.add_argument("--n", type=int, default=None, help="instances per randomized suite")
    _add_common(o)
    return parser


def _cmd_audit(args) -> int:
    cfg = io.AuditConfig(
        group_map=_group_map(args.group_map),
        mode=args.input_mode,
        min_stops=args.min_count,
        variance_denominator=args.variance_denominator,
        bins=args.bins,
    )
    data = io.ingest(args.input, cfg)
    report = io.run_audit(data, DecisionPolarity(args.polarity), _mode(args), cfg)
    if args.out:
        io.emit(report, args.format, args.out)
    if args.plot_data:
        io.emit_plot_data(report, args.plot_data)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(json.dumps(report.tallies, indent=2))
    return 0


def _cmd_simulate(args) -> int:
    cfg = simulation.preset_config(
        args.preset,
        family=args.family,
        seed=args.seed,
        polarity=DecisionPolarity(args.polarity),
        percentile_basis=args.percentile_basis,
        bins=args.bins,
    )
    grid = simulation.sweep(cfg)
    if args.out:
        io.emit(grid, "csv", args.out)
    print(json.dumps(grid.summary(), indent=2))
    return 0


def _cmd_diagnose(args) -> int:
    data = io.ingest(args.input, io.AuditConfig(group_map=_group_map(args.group_map), mode="unit"))
    results = {}
    for unit in data.units:
        report = monotonicity_violation(unit.sample, args.bins, args.min_count)
        results[unit.unit_id] = {"direction": report.direction, "violation_score": report.violation_score}
        if args.out:
            path = args.out if len(data.units) == 1 else f"{args.out}.{unit.unit_id}"
            io.emit(report, args.format, path)
    print(json.dumps(results, indent=2))
    return 0


def _cmd_oracle(args) -> int:
    out = {}
    ok = True
    if args.suite in ("proposition", "all"):
        r = oracle.audit_proposition(args.n or 10_000, args.seed)
        out["proposition"] = {"instances": r.instances, "violations": r.violations, "premises_held": r.premises_held}
        ok &= r.violations == 0
    if args.suite in ("theorem", "all"):
        r = oracle.audit_theorem(args.n or 1_000, args.seed)
        out["theorem"] = {"instances": r.instances, "wrong_direction": r.violations, "conclusive": r.premises_held}
        ok &= r.violations == 0
    if args.suite in ("counterexample", "all"):
        inst = oracle.find_fig2_counterexample()
        out["counterexample"] = {"instance": inst.to_dict(), "rates": list(oracle.exact_rates(inst))}
    print(json.dumps(out, indent=2))
    return 0 if ok else 1


COMMANDS = {"audit": _cmd_audit, "simulate": _cmd_simulate, "diagnose": _cmd_diagnose, "oracle": _cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (OutcomeAuditError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
