"""Command-line entry point: ``eqmine {discover,test,validate,synth}``.

Exit codes: 0 on a completed run, 1 on I/O failure, 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from . import report as report_io
from .ingest import (
    EmptyAfterFilteringError,
    IngestError,
    Relation,
    candidate_view,
    load_relation,
    write_relation,
)
from .model import PairSetError, canonicalize
from .search import SearchConfig, discover
from .stats import TestConfig, derive_seed, test_candidate
from .synth import FAMILIES, ScenarioSpec, gen_fig1_scenario, gen_null_pair, gen_shifted_pair
from .validate import run_validation

log = logging.getLogger("eqmine")

EXIT_OK, EXIT_IO, EXIT_USAGE = 0, 1, 2

_DELIMITERS = {"comma": ",", "tab": "\t", "semicolon": ";", ",": ",", "\\t": "\t", "\t": "\t", ";": ";"}


class UsageError(Exception):
    pass


def _delimiter(value: str) -> str:
    try:
        return _DELIMITERS[value]
    except KeyError:
        raise argparse.ArgumentTypeError(
            f"unsupported delimiter {value!r}; use comma, tab or semicolon"
        ) from None


def _probability(value: str) -> float:
    x = float(value)
    if not 0.0 < x < 1.0:
        raise argparse.ArgumentTypeError(f"{value} is not in (0, 1)")
    return x


def _rows(value: str) -> int:
    n = int(value)
    if n < 2:
        raise argparse.ArgumentTypeError(f"rows must be at least 2, got {n}")
    return n


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--left", required=True, help="first relation (delimited text)")
    p.add_argument("--right", required=True, help="second relation (delimited text)")
    p.add_argument("--delimiter", type=_delimiter, default=",", help="comma (default), tab or semicolon")
    p.add_argument("--max-rows", type=int, default=2000, help="subsample cap per side (default 2000)")


def _add_test_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=_probability, default=0.05, help="significance level (default 0.05)")
    p.add_argument("--test", choices=("ks", "wilcoxon"), default="ks", help="unary test (default ks)")
    p.add_argument("--perms", type=int, default=199, help="permutations per test (default 199)")
    p.add_argument(
        "--ks-pvalue",
        choices=("asymptotic", "permutation"),
        default="asymptotic",
        help="how unary KS p-values are computed",
    )
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument(
        "--standardize",
        action="store_true",
        help="z-score each column over the pooled sample first (tests a weaker hypothesis)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqmine",
        description="Find attribute sets of two relations that are identically distributed.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("discover", help="search for maximal equally distributed pairings")
    _add_input_flags(d)
    _add_test_flags(d)
    d.add_argument("--max-arity", type=int, default=4)
    d.add_argument("--budget-beta", type=float, default=0.01)
    d.add_argument("--hard-apriori", action="store_true", help="prune every superset of a rejection")
    d.add_argument("--include-identity", action="store_true", help="allow a column paired with itself")
    d.add_argument("--output", help="report path (JSON); stdout when omitted")

    t = sub.add_parser("test", help="test one explicit pairing")
    _add_input_flags(t)
    _add_test_flags(t)
    t.add_argument("--pairs", required=True, help="comma separated left:right column names")

    v = sub.add_parser("validate", help="check the false-rejection count on null data")
    v.add_argument("--trials", type=int, default=5)
    v.add_argument("--rows", type=_rows, default=200)
    v.add_argument("--dims", type=int, default=10)
    v.add_argument("--alpha", type=_probability, default=0.1)
    v.add_argument("--perms", type=int, default=99)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--output", help="also write the summary here")

    s = sub.add_parser("synth", help="write synthetic relation pairs")
    s.add_argument("--family", choices=("fig1", "shifted") + FAMILIES, default="fig1")
    s.add_argument("--rows", type=_rows, default=500)
    s.add_argument("--dims", type=int, default=2)
    s.add_argument("--rho", type=float, default=0.5)
    s.add_argument("--delta", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--delimiter", type=_delimiter, default=",")
    s.add_argument("--output", default=".", help="directory for R.csv and S.csv")
    return parser


def _test_config(args: argparse.Namespace) -> TestConfig:
    return TestConfig(
        alpha=args.alpha,
        univariate_test=args.test,
        permutations=args.perms,
        pvalue_mode_univariate=args.ks_pvalue,
        master_seed=args.seed,
        standardize=args.standardize,
    )


def _load_pair(args: argparse.Namespace) -> tuple[Relation, Relation]:
    left = load_relation(args.left, delimiter=args.delimiter)
    if os.path.abspath(args.left) == os.path.abspath(args.right):
        return left, left
    return left, load_relation(args.right, delimiter=args.delimiter)


def cmd_discover(args: argparse.Namespace) -> int:
    try:
        test_cfg = _test_config(args)
        search_cfg = SearchConfig(
            max_arity=args.max_arity,
            budget_beta=args.budget_beta,
            hard_apriori=args.hard_apriori,
            alpha=args.alpha,
            include_identity_pairs=args.include_identity,
            max_rows=args.max_rows,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    left, right = _load_pair(args)
    result = discover(left, right, test_cfg, search_cfg)
    text = report_io.dumps(result)
    if args.output:
        report_io.write_atomic(text, args.output)
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


def parse_pairs(spec: str, left: Relation, right: Relation):
    raw = []
    for item in spec.split(","):
        parts = item.strip().split(":")
        if len(parts) != 2 or not all(parts):
            raise UsageError(f"malformed pair {item!r}; expected left:right")
        try:
            raw.append((left.column_index(parts[0]), right.column_index(parts[1])))
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    try:
        return canonicalize(raw)
    except PairSetError as exc:
        raise UsageError(str(exc)) from exc


def cmd_test(args: argparse.Namespace) -> int:
    try:
        cfg = _test_config(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    left, right = _load_pair(args)
    p = parse_pairs(args.pairs, left, right)
    view = candidate_view(left, right, p, args.max_rows, derive_seed(cfg.master_seed, p, "rows"))
    outcome = test_candidate(view, p, cfg)
    sys.stdout.write(json.dumps(outcome.to_dict()) + "\n")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    if args.trials < 1 or args.dims < 4 or args.perms < 19:
        raise UsageError("need trials >= 1, dims >= 4 and perms >= 19")
    summary = run_validation(
        trials=args.trials,
        rows=args.rows,
        dims=args.dims,
        alpha=args.alpha,
        permutations=args.perms,
        seed=args.seed,
    )
    text = json.dumps(summary.to_dict(), indent=2)
    if args.output:
        report_io.write_atomic(text, args.output)
    sys.stdout.write(text + "\n")
    for t in summary.trials:
        mark = "ok" if t.in_band else "outside band"
        log.info("seed %d: %d rejections (%s)", t.seed, t.observed, mark)
    return EXIT_OK if summary.passed else EXIT_IO


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        if args.family == "fig1":
            left, right = gen_fig1_scenario(args.rows, args.seed)
        elif args.family == "shifted":
            left, right = gen_shifted_pair(args.rows, args.dims, args.delta, args.seed)
        else:
            spec = ScenarioSpec(
                rows=args.rows, seed=args.seed, family=args.family, dims=args.dims, rho=args.rho
            )
            left, right = gen_null_pair(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    os.makedirs(args.output, exist_ok=True)
    for rel in (left, right):
        target = os.path.join(args.output, f"{rel.name}.csv")
        tmp = target + ".tmp"
        write_relation(rel, tmp, delimiter=args.delimiter)
        os.replace(tmp, target)
    return EXIT_OK


COMMANDS = {
    "discover": cmd_discover,
    "test": cmd_test,
    "validate": cmd_validate,
    "synth": cmd_synth,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"eqmine {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestError, EmptyAfterFilteringError, OSError) as exc:
        print(f"eqmine {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
