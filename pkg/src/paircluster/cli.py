"""Command-line entry points.

``paircluster analyze`` audits a paired-experiment CSV; ``paircluster
simulate`` runs the replicated size experiments.  Results go to stdout,
diagnostics to stderr.  Exit statuses: 0 success, 1 usage error, 2 data
validation error, 3 runtime/numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .dataio import read_csv
from .dgp import ConstantEffect, DGPConfig
from .errors import DataError, PairClusterError
from .montecarlo import SizeTable, run_size_experiment, SizeExperimentSpec
from .randomize import Seed
from .report import analyze

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="paircluster", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analyze", help="audit a paired experiment CSV")
    p_an.add_argument("--data", required=True, help="CSV with pair_id,unit_id,treatment,outcome")
    p_an.add_argument("--cluster", choices=["pair", "unit", "both"], default="both")
    p_an.add_argument("--fe", choices=["on", "off", "both"], default="both")
    p_an.add_argument("--level", type=float, default=0.05)
    p_an.add_argument("--json-out", help="write the full-precision JSON report here")

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo size experiment")
    p_sim.add_argument("--design", choices=["paired", "stratified"], required=True)
    p_sim.add_argument("--G", type=int, help="units per stratum (paired design fixes 2)")
    p_sim.add_argument("--scan-G", help="inclusive range a..b of stratum sizes to sweep")
    p_sim.add_argument("--P", type=int, required=True, help="number of pairs/strata")
    p_sim.add_argument("--n", type=int, required=True, help="observations per unit")
    p_sim.add_argument("--sigma2-gamma", type=float, default=0.0,
                       help="variance of the additive stratum shock")
    p_sim.add_argument("--effect", type=float, default=0.0,
                       help="constant treatment effect added in every stratum")
    p_sim.add_argument("--reps", type=int, required=True)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--level", type=float, default=0.05)
    p_sim.add_argument("--threads", type=int, default=None,
                       help="Monte Carlo worker cap (default: all cores)")
    p_sim.add_argument("--csv-out", help="also write the size table CSV here")
    p_sim.add_argument("--json-out", help="also write the size table JSON here")
    return parser


def _cmd_analyze(args) -> int:
    data, assignment = read_csv(args.data)
    if not 0.0 < args.level < 1.0:
        raise _UsageError("--level must be in (0, 1)")
    report = analyze(data, assignment, cluster=args.cluster, fe=args.fe, level=args.level)
    sys.stdout.write(report.to_text())
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as handle:
            json.dump(report.to_json_dict(), handle, indent=2)
            handle.write("\n")
    return EXIT_OK


def _parse_scan(text: str) -> range:
    try:
        lo_text, hi_text = text.split("..")
        lo, hi = int(lo_text), int(hi_text)
    except ValueError:
        raise _UsageError(f"--scan-G expects a..b, got {text!r}") from None
    if lo < 2 or hi < lo:
        raise _UsageError(f"--scan-G range must satisfy 2 <= a <= b, got {text!r}")
    return range(lo, hi + 1)


def _cmd_simulate(args) -> int:
    if args.reps < 1:
        raise _UsageError("--reps must be >= 1")
    if not 0.0 < args.level < 1.0:
        raise _UsageError("--level must be in (0, 1)")
    if args.design == "paired":
        if args.scan_G:
            raise _UsageError("--scan-G applies to the stratified design only")
        if args.G not in (None, 2):
            raise _UsageError("paired design means G=2")
        g_values = [2]
    elif args.scan_G:
        if args.G is not None:
            raise _UsageError("give either --G or --scan-G, not both")
        g_values = list(_parse_scan(args.scan_G))
    else:
        if args.G is None:
            raise _UsageError("stratified design needs --G or --scan-G")
        if args.G < 2:
            raise _UsageError("--G must be >= 2")
        g_values = [args.G]

    effect = ConstantEffect(args.effect) if args.effect != 0.0 else None
    cells = []
    tables = []
    for g in g_values:
        cfg_kwargs = dict(G=g, P=args.P, n_gp=args.n, sigma2_gamma=args.sigma2_gamma)
        if effect is not None:
            cfg_kwargs["effect_profile"] = effect
        spec = SizeExperimentSpec(
            dgp=DGPConfig(**cfg_kwargs),
            reps=args.reps,
            master_seed=Seed(args.seed),
            level=args.level,
        )
        table = run_size_experiment(spec, threads=args.threads)
        tables.append(table)
        cells.extend(table.cells)

    merged = SizeTable(
        cells=cells,
        level=args.level,
        seed=args.seed,
        design=tables[0].design if len(tables) == 1 else f"stratified scan G={g_values}",
    )
    csv_text = merged.to_csv_text()
    sys.stdout.write(csv_text)
    if args.csv_out:
        with open(args.csv_out, "w", encoding="utf-8", newline="") as handle:
            handle.write(csv_text)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as handle:
            json.dump(merged.to_json_dict(), handle, indent=2)
            handle.write("\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        return _cmd_simulate(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PairClusterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
