"""Command-line front end: ``chern-euler verify`` / ``list`` / ``export``.

Exit codes: 0 when every selected check passes, 1 when a check fails (the
failing checks are named on standard error), 2 for usage errors such as bad
flags or unknown scenario names.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Optional, Sequence

from . import scenarios as sc

SWEEP_SCALES = (0.5, 1.0, 1.5)
CSV_FIELDS = ["scenario", "check", "computed", "expected", "tolerance", "provenance", "pass", "error_estimate",
              "seconds"]


class UsageError(Exception):
    pass


def _parse_orders(text: str):
    """``"G"`` or ``"G:P"`` -> (gauss, periodic)."""
    try:
        parts = [int(p) for p in text.replace(",", ":").split(":")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad orders {text!r}; expected GAUSS or GAUSS:PERIODIC") from exc
    if len(parts) not in (1, 2) or min(parts) < 2:
        raise argparse.ArgumentTypeError(f"bad orders {text!r}; orders must be integers >= 2")
    return parts[0], parts[-1] if len(parts) == 2 else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chern-euler",
        description="Verify Gauss-Bonnet-Chern identities and vector-field index formulas by quadrature.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run scenario checks")
    pick = verify.add_argument_group("selection")
    pick.add_argument("--scenario", action="append", default=[], metavar="GLOB",
                      help="scenario name or glob pattern (repeatable)")
    pick.add_argument("--all", action="store_true", help="run every scenario")
    pick.add_argument("--scenario-file", metavar="PATH", help="load scenarios from a JSON file instead of the catalog")
    verify.add_argument("--orders", type=_parse_orders, metavar="GAUSS[:PERIODIC]",
                        help="quadrature orders overriding the scenario defaults")
    verify.add_argument("--scheme", choices=["auto", "dual", "fd"], default="auto",
                        help="metric differentiation scheme")
    verify.add_argument("--sweep", action="store_true",
                        help="re-run at 0.5x, 1x and 1.5x the quadrature orders and tabulate values")
    verify.add_argument("--format", choices=["table", "json", "csv"], default="table")
    verify.add_argument("--out", metavar="PATH", help="write the report to PATH instead of standard output")
    verify.add_argument("--tolerance-scale", type=float, default=1.0, metavar="X",
                        help="multiply every tolerance by X")

    lst = sub.add_parser("list", help="list scenarios")
    lst.add_argument("--scenario-file", metavar="PATH")
    lst.add_argument("--format", choices=["table", "json"], default="table")

    export = sub.add_parser("export", help="write the catalog as scenario JSON")
    export.add_argument("--out", metavar="PATH", required=True)
    return parser


def _pool(args):
    if getattr(args, "scenario_file", None):
        pool = sc.load_scenarios(args.scenario_file)
    else:
        pool = sc.catalog()
    return pool


def _selection(args, pool):
    if args.all and args.scenario:
        raise UsageError("use either --all or --scenario, not both")
    if args.all:
        return list(pool)
    if not args.scenario:
        raise UsageError("select scenarios with --scenario GLOB or --all")
    try:
        return sc.select(args.scenario, pool)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc


def _fmt(x) -> str:
    return "nan" if x is None or x != x else f"{x:.10g}"


def _table(reports, sweep_rows=None) -> str:
    lines = []
    header = f"{'scenario':32s} {'check':36s} {'computed':>16s} {'expected':>12s} {'tol':>8s} {'prov':8s} {'result':6s} {'err est':>9s} {'sec':>6s}"
    lines.append(header)
    lines.append("-" * len(header))
    for rep in reports:
        for c in rep.checks:
            lines.append(
                f"{rep.scenario:32s} {c.name:36s} {_fmt(c.computed):>16s} {c.expected:>12.6g} {c.tolerance:>8.1e} "
                f"{c.provenance:8s} {'PASS' if c.passed else 'FAIL':6s} {c.error_estimate:>9.1e} {c.seconds:>6.1f}"
            )
            if c.message:
                lines.append(f"{'':32s}   error: {c.message}")
    if sweep_rows:
        lines.append("")
        lines.append("convergence sweep")
        lines.append(f"{'scenario':32s} {'check':36s} {'gauss':>6s} {'periodic':>8s} {'computed':>18s}")
        for row in sweep_rows:
            lines.append(f"{row['scenario']:32s} {row['check']:36s} {row['gauss']:>6d} {row['periodic']:>8d} "
                         f"{_fmt(row['computed']):>18s}")
    n_fail = sum(not c.passed for r in reports for c in r.checks)
    n_all = sum(len(r.checks) for r in reports)
    lines.append("")
    lines.append(f"{n_all - n_fail}/{n_all} checks passed in {len(reports)} scenario(s)")
    return "\n".join(lines) + "\n"


def _csv(reports, sweep_rows=None) -> str:
    buf = io.StringIO()
    if sweep_rows:
        writer = csv.DictWriter(buf, fieldnames=["scenario", "check", "gauss", "periodic", "computed", "pass"])
        writer.writeheader()
        writer.writerows(sweep_rows)
        return buf.getvalue()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS)
    writer.writeheader()
    for rep in reports:
        for c in rep.checks:
            d = c.to_dict()
            writer.writerow({"scenario": rep.scenario, "check": c.name, **{k: d[k] for k in CSV_FIELDS[2:]}})
    return buf.getvalue()


def _json(reports, sweep_rows=None) -> str:
    doc = {"passed": all(r.passed for r in reports), "reports": [r.to_dict() for r in reports]}
    if sweep_rows is not None:
        doc["sweep"] = sweep_rows
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _verify(args) -> int:
    pool = _pool(args)
    chosen = _selection(args, pool)
    for s in chosen:
        s.validate()
    gauss, periodic = args.orders if args.orders else (None, None)
    reports, sweep_rows = [], None
    for s in chosen:
        cfg = sc.RunConfig(gauss=gauss, periodic=periodic, scheme=args.scheme, tolerance_scale=args.tolerance_scale)
        reports.append(sc.run(s, cfg))
    if args.sweep:
        sweep_rows = []
        for s in chosen:
            for scale in SWEEP_SCALES:
                cfg = sc.RunConfig(gauss=gauss, periodic=periodic, scheme=args.scheme,
                                   tolerance_scale=args.tolerance_scale, order_scale=scale)
                ctx_cfg = sc.Context(s, cfg).tcfg
                rep = reports[chosen.index(s)] if scale == 1.0 else sc.run(s, cfg)
                for c in rep.checks:
                    sweep_rows.append({"scenario": s.name, "check": c.name, "gauss": ctx_cfg.gauss,
                                       "periodic": ctx_cfg.periodic, "computed": sc.finite_or_none(c.computed),
                                       "pass": c.passed})
    text = {"table": _table, "json": _json, "csv": _csv}[args.format](reports, sweep_rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = [(r.scenario, c) for r in reports for c in r.checks if not c.passed]
    for scen, c in failed:
        detail = f" ({c.message})" if c.message else ""
        print(f"FAILED: {scen} / {c.name}: computed {_fmt(c.computed)}, expected {c.expected:g} "
              f"[{c.mode}, tol {c.tolerance:g}]{detail}", file=sys.stderr)
    return 1 if failed else 0


def _list(args) -> int:
    pool = _pool(args)
    if args.format == "json":
        sys.stdout.write(json.dumps([{"name": s.name, "description": s.description,
                                      "checks": [c.name for c in s.checks]} for s in pool], indent=2) + "\n")
    else:
        for s in pool:
            sys.stdout.write(f"{s.name:32s} {len(s.checks):2d} checks  {s.description}\n")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return _verify(args)
        if args.command == "list":
            return _list(args)
        sc.dump_scenarios(sc.catalog(), args.out)
        return 0
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"chern-euler: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"chern-euler: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
