"""Command-line interface.

Exit codes: 0 ok, 2 invariant or verification failure, 3 numerical accuracy
failure, 64 usage error (bad flags, unreadable or malformed input files).
"""
from __future__ import annotations

import argparse
import json
import sys

from .barnard import build_barnard_partition, trace_to_csv
from .engine import ScanConfig, binomial_difference, smallest_limits
from .errors import AccuracyError, DomainError, InvariantError, PartitionError
from .med import step_down_med, study_from_csv, study_from_json
from .poisson import PoissonDiffProblem, solve
from .serialize import load_table, table_to_csv, table_to_json, write_atomic
from .space import (
    asymptotic_lower_scores,
    partition_from_json,
    partition_from_scores,
    i_order_41,
    zstat_scores,
)
from .verify import COVERAGE_SLACK, coverage_profile, set_inclusion_compare, verification_report

EXIT_OK, EXIT_INVARIANT, EXIT_ACCURACY, EXIT_USAGE = 0, 2, 3, 64

EPILOG = """exit codes:
  0   ok
  2   invariant or verification failure
  3   accuracy failure (Poisson lambda2 search ceiling)
  64  usage error: bad flags, unreadable or malformed input file"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("formatter_class", argparse.RawDescriptionHelpFormatter)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _scan_flags(p):
    p.add_argument("--delta-step", type=float, default=0.001)
    p.add_argument("--nuisance-points", type=int, default=1001)
    p.add_argument("--tie-tol", type=float, default=None)


def _scan_config(args) -> ScanConfig:
    return ScanConfig(args.delta_step, args.nuisance_points, args.tie_tol)


def _output_flags(p, formats=("csv", "json")):
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--output", "-o", default=None, help="file to write (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="smallci", description="Smallest one-sided confidence intervals.", epilog=EPILOG)
    parser.add_argument("--config", help="JSON file of flag values (same keys as the long flags)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("table", help="lower-limit table for p1 - p0", epilog=EPILOG)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--ordering", default="barnard",
                   help="zstat | asymptotic | barnard | i41 | file:<path>")
    p.add_argument("--trace", help="write the greedy-ordering trace CSV here (barnard only)")
    p.add_argument("--no-verify", action="store_true", help="skip the coverage self-check")
    _scan_flags(p)
    _output_flags(p)

    p = sub.add_parser("barnard-trace", help="step-by-step trace of the greedy ordering", epilog=EPILOG)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    _scan_flags(p)
    p.add_argument("--output", "-o", default=None)

    p = sub.add_parser("med", help="minimum effective dose by step-down testing", epilog=EPILOG)
    p.add_argument("--study", required=True, help="CSV (dose_index,x,n; control row 0) or JSON study")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    _scan_flags(p)
    p.add_argument("--output", "-o", default=None)

    p = sub.add_parser("poisson", help="lower limit for a difference of Poisson means", epilog=EPILOG)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--delta-step", type=float, default=0.001)
    p.add_argument("--lam-span", type=float, default=50.0)
    p.add_argument("--lam-step", type=float, default=0.05)
    p.add_argument("--trunc-mass", type=float, default=1e-10)
    p.add_argument("--output", "-o", default=None)

    p = sub.add_parser("verify", help="coverage check of a table file", epilog=EPILOG)
    p.add_argument("--table", required=True)
    p.add_argument("--alpha", type=float, default=None, help="needed when the table file has none")
    p.add_argument("--delta-step", type=float, default=0.0005)
    p.add_argument("--nuisance-points", type=int, default=2001)
    p.add_argument("--output", "-o", default=None)

    p = sub.add_parser("compare", help="set-inclusion comparison of two tables", epilog=EPILOG)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--expect", choices=("A_dominates", "B_dominates", "equal", "incomparable"),
                   help="exit 2 unless the verdict matches")
    p.add_argument("--output", "-o", default=None)
    return parser


def _emit(text: str, path: str | None) -> None:
    if path:
        write_atomic(path, text)
    else:
        sys.stdout.write(text)


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _partition(args, family, config):
    sel = args.ordering
    space = family.space
    if sel == "zstat":
        return partition_from_scores(space, zstat_scores(space)), None
    if sel == "asymptotic":
        return partition_from_scores(space, asymptotic_lower_scores(space, args.alpha)), None
    if sel == "barnard":
        return build_barnard_partition(family, args.alpha, config)
    if sel == "i41":
        if space.shape != (4, 1):
            raise UsageError("the i41 ordering exists only for n=4, m=1")
        return i_order_41(), None
    if sel.startswith("file:"):
        return partition_from_json(space, _read(sel[5:])), None
    raise UsageError(f"unknown ordering {sel!r}")


def run_table(args) -> int:
    if args.trace and args.ordering != "barnard":
        raise UsageError("--trace needs --ordering barnard")
    config = _scan_config(args)
    family = binomial_difference(args.n, args.m)
    partition, trace = _partition(args, family, config)
    table = smallest_limits(family, partition, args.alpha, config)
    if not args.no_verify:
        prof = coverage_profile(family, table)
        if prof.global_min < 1.0 - args.alpha - COVERAGE_SLACK:
            print(f"coverage self-check failed: {prof.global_min:.9f} at delta={prof.argmin_delta}",
                  file=sys.stderr)
            return EXIT_INVARIANT
    if trace is not None and args.trace:
        write_atomic(args.trace, trace_to_csv(trace))
    _emit(table_to_csv(table) if args.format == "csv" else table_to_json(table) + "\n", args.output)
    return EXIT_OK


def run_barnard_trace(args) -> int:
    family = binomial_difference(args.n, args.m)
    _, trace = build_barnard_partition(family, args.alpha, _scan_config(args))
    _emit(trace_to_csv(trace), args.output)
    return EXIT_OK


def run_med(args) -> int:
    text = _read(args.study)
    try:
        if args.study.endswith(".json") or text.lstrip().startswith("{"):
            study = study_from_json(text)
            if args.delta is not None or args.alpha is not None:
                study = type(study)(study.x, study.n, study.y, study.m,
                                    study.delta if args.delta is None else args.delta,
                                    study.alpha if args.alpha is None else args.alpha)
        else:
            study = study_from_csv(text, 0.0 if args.delta is None else args.delta,
                                   0.05 if args.alpha is None else args.alpha)
    except (DomainError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed study file: {exc}") from exc
    result = step_down_med(study, _scan_config(args))
    out = {"study": {"x": list(study.x), "n": list(study.n), "y": study.y, "m": study.m,
                     "delta": study.delta, "alpha": study.alpha}, **result.to_dict()}
    _emit(json.dumps(out, indent=1) + "\n", args.output)
    return EXIT_OK


def run_poisson(args) -> int:
    problem = PoissonDiffProblem(args.x, args.y, args.alpha, args.delta_step, args.lam_span,
                                 args.lam_step, args.trunc_mass)
    _emit(json.dumps(solve(problem)) + "\n", args.output)
    return EXIT_OK


def _load(path, alpha=None):
    _read(path)
    try:
        return load_table(path, alpha)
    except PartitionError as exc:
        raise UsageError(f"malformed table file {path}: {exc}") from exc


def run_verify(args) -> int:
    table = _load(args.table, args.alpha)
    if table.alpha is None:
        raise UsageError("table file has no alpha; pass --alpha")
    family = binomial_difference(*table.space.shape)
    report = verification_report(family, table, ScanConfig(args.delta_step, args.nuisance_points))
    _emit(json.dumps(report, indent=1) + "\n", args.output)
    return EXIT_INVARIANT if report["violations"] else EXIT_OK


def run_compare(args) -> int:
    verdict = set_inclusion_compare(_load(args.a), _load(args.b))
    out = {
        "verdict": verdict.verdict,
        "a_larger": [list(p) for p in verdict.a_larger],
        "b_larger": [list(p) for p in verdict.b_larger],
    }
    _emit(json.dumps(out) + "\n", args.output)
    if args.expect and verdict.verdict != args.expect:
        return EXIT_INVARIANT
    return EXIT_OK


COMMANDS = {
    "table": run_table,
    "barnard-trace": run_barnard_trace,
    "med": run_med,
    "poisson": run_poisson,
    "verify": run_verify,
    "compare": run_compare,
}


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        values = json.loads(_read(known.config))
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(values, dict):
        raise UsageError("config file must hold a JSON object")
    values = {k.replace("-", "_"): v for k, v in values.items()}
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in subs.choices.values():
        sp.set_defaults(**values)
        # values from the config satisfy required flags
        for action in sp._actions:
            if action.dest in values:
                action.required = False


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help, or a usage error already reported
            return exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"smallci: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PartitionError, DomainError) as exc:
        print(f"smallci: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantError as exc:
        print(f"smallci: invariant check failed: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except AccuracyError as exc:
        print(f"smallci: accuracy: {exc}", file=sys.stderr)
        return EXIT_ACCURACY


if __name__ == "__main__":
    sys.exit(main())
