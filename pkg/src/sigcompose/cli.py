"""Command-line front end for the whole pipeline.

Subcommands: ingest-check, build, query, serve, eval, gen. Exit codes:
0 success, 1 usage error, 2 data/validation error, 3 runtime failure.
Flags beat environment variables (SIGCOMPOSE_*), which beat defaults.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .classification_index import (
    IndexFormatError,
    build_index,
    dataset_fingerprint,
    index_stats,
    load_index,
    save_index,
)
from .decision_tree import SPLIT_MODES, TreeParams
from .evaluation import SyntheticSpec, generate_synthetic, run_cluster_recovery
from .ingestion import (
    DEFAULT_EPOCH,
    Dataset,
    ParseError,
    format_month,
    merge,
    parse_meta,
    parse_month,
    parse_returns,
    serialize_meta,
    serialize_returns,
)
from .search_service import DEFAULT_K, DEFAULT_PAGE_SIZE, compute_benefits, serve
from .self_labeling import build_slice_plan
from .signal_composition import QueryRange, UnknownFundError, compose, top_k

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the exit-code contract wants 1
    def error(self, message):  # noqa: A002 - argparse API
        raise UsageError(message)


def _env(name: str, fallback):
    return os.environ.get(f"SIGCOMPOSE_{name}", fallback)


def _add_tree_flags(
    p: argparse.ArgumentParser, split_mode_default: str, variability_default: float = 2.0
) -> None:
    p.add_argument("--penalty", type=float, default=0.0,
                   help="complexity penalty in [0,1) gating splits")
    p.add_argument("--min-support", type=int, default=2,
                   help="minimum records per node (>= 2)")
    p.add_argument("--split-mode", choices=SPLIT_MODES, default=split_mode_default)
    p.add_argument("--variability-threshold", type=float, default=variability_default,
                   help="max label spread of a retained leaf, percent points")
    p.add_argument("--slice-length", type=int, default=6,
                   help="nominal slice length in months")


def _tree_params(args) -> TreeParams:
    try:
        return TreeParams(
            complexity_penalty=args.penalty,
            min_support=args.min_support,
            split_mode=args.split_mode,
            variability_threshold=args.variability_threshold,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_dataset(returns_path: str, meta_path: str | None, epoch: str) -> Dataset:
    try:
        returns_text = Path(returns_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{returns_path}: {exc.strerror or exc}") from None
    try:
        series = parse_returns(returns_text, epoch)
    except ParseError as exc:
        raise DataError(f"{returns_path}: {exc}") from None
    metas = {}
    if meta_path:
        try:
            meta_text = Path(meta_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise DataError(f"{meta_path}: {exc.strerror or exc}") from None
        try:
            metas = parse_meta(meta_text)
        except ParseError as exc:
            raise DataError(f"{meta_path}: {exc}") from None
    return merge(series, metas)


def _load_index_checked(index_path: str, dataset: Dataset):
    try:
        table = load_index(index_path)
    except OSError as exc:
        raise DataError(f"{index_path}: {exc.strerror or exc}") from None
    except IndexFormatError as exc:
        raise DataError(f"{index_path}: {exc}") from None
    actual = dataset_fingerprint(dataset)
    if table.manifest.dataset_fingerprint != actual:
        raise DataError(
            f"fingerprint mismatch: index built from "
            f"{table.manifest.dataset_fingerprint}, dataset is {actual}"
        )
    if table.manifest.epoch != dataset.epoch:
        raise DataError(
            f"epoch mismatch: index uses {table.manifest.epoch}, "
            f"dataset parsed with {dataset.epoch}"
        )
    return table


def _parse_month_flag(value: str, epoch: str, flag: str) -> int:
    try:
        return parse_month(value, epoch)
    except ValueError as exc:
        raise UsageError(f"{flag}: {exc}") from None


def cmd_ingest_check(args) -> int:
    dataset = _load_dataset(args.returns, args.meta, args.epoch)
    n_cells = sum(len(s.returns) for s in dataset.series.values())
    first, last = dataset.month_range
    gaps = len(dataset.series) * dataset.n_months - n_cells
    if args.porcelain:
        print(f"funds\t{len(dataset.series)}")
        print(f"months\t{dataset.n_months}")
        print(f"values\t{n_cells}")
        print(f"gaps\t{gaps}")
        print(f"fingerprint\t{dataset_fingerprint(dataset)}")
    else:
        print(
            f"{len(dataset.series)} funds, "
            f"{format_month(first, dataset.epoch)}.."
            f"{format_month(last, dataset.epoch)} "
            f"({dataset.n_months} months), {n_cells} values, {gaps} gaps"
        )
        print(f"fingerprint: {dataset_fingerprint(dataset)}")
    return EXIT_OK


def cmd_build(args) -> int:
    params = _tree_params(args)
    if args.slice_length < 2:
        raise UsageError(f"--slice-length must be >= 2, got {args.slice_length}")
    dataset = _load_dataset(args.returns, args.meta, args.epoch)
    plan = build_slice_plan(dataset.month_range, args.slice_length)
    table = build_index(dataset, plan, params, workers=args.workers)
    save_index(table, args.out)
    stats = index_stats(table)
    if args.porcelain:
        print(f"rows\t{stats['row_count']}")
        print(f"slices\t{stats['slices_covered']}")
        print(f"funds\t{stats['funds_covered']}")
        for slice_id, leaves in stats["leaves_per_slice"].items():
            print(f"leaves\t{slice_id}\t{leaves}")
    else:
        print(
            f"built {args.out}: {stats['row_count']} rows, "
            f"{stats['slices_covered']}/{len(plan)} slices, "
            f"{stats['funds_covered']} funds"
        )
        leaves = " ".join(
            f"{sid}:{n}" for sid, n in stats["leaves_per_slice"].items()
        )
        print(f"leaves per slice: {leaves}")
    return EXIT_OK


def cmd_query(args) -> int:
    if args.k < 0:
        raise UsageError(f"--k must be >= 0, got {args.k}")
    dataset = _load_dataset(args.returns, args.meta, args.epoch)
    table = _load_index_checked(args.index, dataset)
    from_month = _parse_month_flag(args.from_, dataset.epoch, "--from")
    to_month = _parse_month_flag(args.to, dataset.epoch, "--to")
    if from_month > to_month:
        raise UsageError(f"--from {args.from_} is after --to {args.to}")
    try:
        results = compose(table, dataset, args.fund, QueryRange(from_month, to_month))
    except UnknownFundError:
        raise DataError(f"unknown fund {args.fund!r}") from None
    query_meta = dataset.meta[args.fund]
    selected = top_k(results, args.k)
    if args.porcelain:
        for rank, res in enumerate(selected, start=1):
            meta = dataset.meta.get(res.fund_id)
            benefits = compute_benefits(query_meta, meta) if meta else []
            r_text = (
                "" if res.tiebreak_correlation is None
                else f"{res.tiebreak_correlation:.6f}"
            )
            print(
                f"{rank}\t{res.fund_id}\t{meta.name if meta else ''}\t"
                f"{res.counter}\t{r_text}\t"
                + "|".join(b.kind for b in benefits)
            )
    else:
        print(
            f"similar to {args.fund} ({query_meta.name}) "
            f"{args.from_}..{args.to}, {len(results)} match(es)"
        )
        for rank, res in enumerate(selected, start=1):
            meta = dataset.meta.get(res.fund_id)
            benefits = compute_benefits(query_meta, meta) if meta else []
            r_text = (
                "r=n/a" if res.tiebreak_correlation is None
                else f"r={res.tiebreak_correlation:.4f}"
            )
            line = (
                f"{rank:3d}. {res.fund_id} {meta.name if meta else ''} "
                f"counter={res.counter}/{res.slices_in_range} {r_text}"
            )
            if benefits:
                line += "  " + "  ".join(b.display for b in benefits)
            print(line)
    return EXIT_OK


def cmd_serve(args) -> int:
    if not args.index:
        raise UsageError("--index (or SIGCOMPOSE_INDEX) is required")
    if not args.returns:
        raise UsageError("--returns (or SIGCOMPOSE_DATASET) is required")
    if args.default_k < 0:
        raise UsageError(f"--default-k must be >= 0, got {args.default_k}")
    if args.page_size < 1:
        raise UsageError(f"--page-size must be >= 1, got {args.page_size}")
    dataset = _load_dataset(args.returns, args.meta, args.epoch)
    table = _load_index_checked(args.index, dataset)
    serve(
        table,
        dataset,
        bind_address=args.bind,
        default_k=args.default_k,
        page_size=args.page_size,
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    params = _tree_params(args)
    if args.k < 1:
        raise UsageError(f"--k must be >= 1, got {args.k}")
    try:
        spec = SyntheticSpec(
            clusters=args.clusters,
            funds_per_cluster=args.funds_per_cluster,
            months=args.months,
            factor_volatility=args.factor_volatility,
            noise_volatility=args.noise_volatility,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = run_cluster_recovery(
        spec, params, slice_length=args.slice_length, k=args.k
    )
    Path(args.report).write_text(report.to_text(), encoding="utf-8")
    if args.porcelain:
        print(f"queries\t{len(report.queries)}")
        print(f"precision_at_{args.k}\t{report.mean_precision:.6f}")
        print(f"mean_r_top3\t{report.mean_r_top3}")
        print(f"mean_r_random\t{report.mean_r_random}")
        print(f"margin\t{report.margin}")
        print(f"flagged\t{'yes' if report.flagged else 'no'}")
    else:
        print(f"evaluation report written to {args.report}")
        print(
            f"precision@{args.k}={report.mean_precision:.4f} "
            f"mean_r_top3={report.mean_r_top3} "
            f"mean_r_random={report.mean_r_random} margin={report.margin}"
        )
        if report.flagged:
            print(
                "warning: precision near uniform baseline "
                f"{report.baseline_precision:.4f}"
            )
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        spec = SyntheticSpec(
            clusters=args.clusters,
            funds_per_cluster=args.funds_per_cluster,
            months=args.months,
            factor_volatility=args.factor_volatility,
            noise_volatility=args.noise_volatility,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    dataset = generate_synthetic(spec)
    Path(args.returns_out).write_text(serialize_returns(dataset), encoding="utf-8")
    if args.meta_out:
        Path(args.meta_out).write_text(serialize_meta(dataset.meta), encoding="utf-8")
    print(
        f"wrote {len(dataset.series)} funds x {dataset.n_months} months "
        f"to {args.returns_out}"
        + (f" and {args.meta_out}" if args.meta_out else "")
    )
    return EXIT_OK


def _add_synthetic_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--clusters", type=int, default=5)
    p.add_argument("--funds-per-cluster", type=int, default=20)
    p.add_argument("--months", type=int, default=60)
    p.add_argument("--factor-volatility", type=float, default=3.0)
    p.add_argument("--noise-volatility", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=7)


def build_parser() -> _Parser:
    parser = _Parser(prog="sigcompose", description=__doc__)
    parser.add_argument(
        "--epoch", default=_env("EPOCH", DEFAULT_EPOCH),
        help="calendar month of index 0, YYYY-MM",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-check", help="parse and validate data files")
    p.add_argument("--returns", required=True)
    p.add_argument("--meta", default=None)
    p.add_argument("--porcelain", action="store_true")
    p.set_defaults(func=cmd_ingest_check)

    p = sub.add_parser("build", help="build and save the classification index")
    p.add_argument("--returns", required=True)
    p.add_argument("--meta", default=None)
    p.add_argument("--out", required=True)
    # interval splits match production use; threshold is the cheap test mode
    _add_tree_flags(p, split_mode_default="interval")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--porcelain", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="rank funds similar to one fund")
    p.add_argument("--index", required=True)
    p.add_argument("--returns", required=True)
    p.add_argument("--meta", default=None)
    p.add_argument("--fund", required=True)
    p.add_argument("--from", dest="from_", required=True, metavar="YYYY-MM")
    p.add_argument("--to", required=True, metavar="YYYY-MM")
    p.add_argument("--k", type=int, default=int(_env("DEFAULT_K", DEFAULT_K)))
    p.add_argument("--porcelain", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("serve", help="run the HTTP search service")
    p.add_argument("--index", default=_env("INDEX", None), required=False)
    p.add_argument("--returns", default=_env("DATASET", None), required=False)
    p.add_argument("--meta", default=_env("META", None))
    p.add_argument("--bind", default=_env("BIND", "127.0.0.1:8000"))
    p.add_argument(
        "--default-k", type=int, default=int(_env("DEFAULT_K", DEFAULT_K))
    )
    p.add_argument(
        "--page-size", type=int, default=int(_env("PAGE_SIZE", DEFAULT_PAGE_SIZE))
    )
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("eval", help="synthetic cluster-recovery evaluation")
    _add_synthetic_flags(p)
    # summed labels spread wider than single returns; see run_cluster_recovery
    _add_tree_flags(p, split_mode_default="threshold", variability_default=5.0)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--report", default="eval_report.txt")
    p.add_argument("--porcelain", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen", help="write a synthetic dataset to files")
    _add_synthetic_flags(p)
    p.add_argument("--returns-out", required=True)
    p.add_argument("--meta-out", default=None)
    p.set_defaults(func=cmd_gen)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:  # pragma: no cover - defensive
        logger.exception("unexpected failure")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
