#!/usr/bin/env python3
"""Generate a synthetic fixture, build its index, and serve it — one command.

Handy for driving the web client locally:
    python scripts/serve_demo.py --bind 127.0.0.1:8000
"""

import argparse
from pathlib import Path

from sigcompose import (
    SyntheticSpec,
    TreeParams,
    build_index,
    build_slice_plan,
    generate_synthetic,
    save_index,
    serialize_meta,
    serialize_returns,
    serve,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--bind", default="127.0.0.1:8000")
    parser.add_argument("--clusters", type=int, default=5)
    parser.add_argument("--funds-per-cluster", type=int, default=20)
    parser.add_argument("--months", type=int, default=60)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument(
        "--keep-files", metavar="DIR",
        help="also write the fixture files into DIR",
    )
    args = parser.parse_args()

    spec = SyntheticSpec(
        clusters=args.clusters,
        funds_per_cluster=args.funds_per_cluster,
        months=args.months,
        seed=args.seed,
    )
    dataset = generate_synthetic(spec)
    plan = build_slice_plan(dataset.month_range, 6)
    params = TreeParams(variability_threshold=5.0)
    table = build_index(dataset, plan, params)

    if args.keep_files:
        out = Path(args.keep_files)
        out.mkdir(parents=True, exist_ok=True)
        (out / "returns.csv").write_text(serialize_returns(dataset))
        (out / "meta.csv").write_text(serialize_meta(dataset.meta))
        save_index(table, out / "index.sig")
        print(f"fixture written to {out}/")

    print(
        f"serving {len(dataset.series)} funds x {dataset.n_months} months "
        f"({len(table.rows)} index rows) on {args.bind}"
    )
    serve(table, dataset, bind_address=args.bind)


if __name__ == "__main__":
    main()
