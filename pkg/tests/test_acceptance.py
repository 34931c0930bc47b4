"""Acceptance gate: one test per primary criterion, each printing a
[ACCEPTANCE] pass line with its runtime (run with -s to see them live).
Tolerances and budgets are pinned here, not configurable.
"""

import math
import random
import time
from contextlib import contextmanager

import pytest
from fastapi.testclient import TestClient

from sigcompose.classification_index import (
    build_index,
    load_index,
    parse_index,
    save_index,
    serialize_index,
)
from sigcompose.decision_tree import TreeParams, fit_tree, prune_noisy
from sigcompose.evaluation import (
    SyntheticSpec,
    cluster_of,
    pearson,
    run_cluster_recovery,
)
from sigcompose.ingestion import (
    ReturnSeries,
    parse_month,
    serialize_meta,
    serialize_returns,
)
from sigcompose.cli import main as cli_main
from sigcompose.search_service import create_app
from sigcompose.self_labeling import build_slice_plan, label_of, slice_and_label
from sigcompose.signal_composition import QueryRange, compose

from test_decision_tree import assert_root_matches_oracle, make_records
from test_signal_composition import (
    brute_force_counters,
    make_dataset,
    make_table,
)


@contextmanager
def criterion(name, budget_seconds):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < budget_seconds, (
        f"{name} took {elapsed:.3f}s, budget {budget_seconds}s"
    )
    print(f"[ACCEPTANCE] {name}: PASS ({elapsed * 1000:.1f} ms)")


def test_slice_plan_reproduction():
    month_range = (parse_month("2000-01"), parse_month("2010-08"))
    build_slice_plan(month_range, 6)  # warm
    with criterion("slice-plan-reproduction", 0.001):
        plan = build_slice_plan(month_range, 6)
    assert len(plan) == 21
    assert [s.length for s in plan] == [6] * 20 + [8]
    assert plan.slices[0].start == 0
    assert plan.slices[-1].start == 120


def test_self_label_oracle():
    rng = random.Random(20100831)
    with criterion("self-label-oracle", 1.0):
        for _ in range(10_000):
            window = [rng.uniform(-15.0, 15.0) for _ in range(rng.randint(1, 12))]
            assert abs(label_of(window) - math.fsum(window)) < 1e-12


def _random_small_instance(rng):
    n = rng.randint(2, 8)
    h = rng.randint(1, 3)
    grid = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0]
    features = [
        tuple(rng.choice(grid) for _ in range(h)) for _ in range(n)
    ]
    labels = [rng.choice(grid) for _ in range(n)]
    return make_records(features, labels)


def test_tree_split_oracle():
    rng = random.Random(1722)
    with criterion("tree-split-oracle", 5.0):
        for i in range(200):
            records = _random_small_instance(rng)
            mode = "threshold" if i % 2 == 0 else "interval"
            assert_root_matches_oracle(records, TreeParams(split_mode=mode))


def _random_fit_instance(rng, max_n=40, max_h=4):
    min_support = rng.randint(2, 4)
    n = rng.randint(min_support, max_n)
    h = rng.randint(1, max_h)
    features = [
        tuple(rng.uniform(-10, 10) for _ in range(h)) for _ in range(n)
    ]
    labels = [rng.uniform(-30, 30) for _ in range(n)]
    return make_records(features, labels), min_support


def test_support_and_partition_invariants():
    rng = random.Random(6376)
    with criterion("support-and-partition", 10.0):
        for _ in range(100):
            records, min_support = _random_fit_instance(rng)
            tree = fit_tree(records, TreeParams(min_support=min_support))
            for node in tree.walk():
                assert len(node.members) >= min_support
                if node.rule is not None:
                    merged = sorted(
                        node.children[0].members + node.children[1].members
                    )
                    assert merged == sorted(node.members)


def test_penalty_monotonicity():
    rng = random.Random(11312)
    with criterion("penalty-monotonicity", 10.0):
        for _ in range(50):
            records, _ = _random_fit_instance(rng, max_n=25, max_h=3)
            counts = [
                fit_tree(records, TreeParams(complexity_penalty=p)).n_splits()
                for p in (0.0, 0.01, 0.05, 0.2, 0.999)
            ]
            assert counts == sorted(counts, reverse=True), counts
            assert counts[-1] == 0, counts


def test_prune_guarantee(small_synthetic):
    with criterion("prune-guarantee", 10.0):
        rng = random.Random(75000)
        for _ in range(40):
            records, min_support = _random_fit_instance(rng, max_n=30)
            threshold = rng.uniform(0.5, 20.0)
            tree = prune_noisy(
                fit_tree(records, TreeParams(min_support=min_support)), threshold
            )
            for leaf in tree.leaves():
                if not leaf.pruned:
                    lo, hi = leaf.label_range()
                    assert hi - lo <= threshold

        # and on a full index build: every indexed leaf obeys the bound
        params = TreeParams(variability_threshold=5.0)
        plan = build_slice_plan(small_synthetic.month_range, 6)
        table = build_index(small_synthetic, plan, params)
        indexed = {(r.slice_id, r.node_name) for r in table.rows}
        for records in slice_and_label(small_synthetic, plan).values():
            tree = prune_noisy(fit_tree(records, params), 5.0)
            for leaf in tree.leaves():
                if (tree.slice_id, leaf.name) in indexed:
                    lo, hi = leaf.label_range()
                    assert hi - lo <= 5.0


def test_composition_oracle_and_symmetry():
    rng = random.Random(404)
    funds = ["F0", "F1", "F2", "F3", "F4"]
    plan_range = QueryRange(0, 23)
    with criterion("composition-oracle-and-symmetry", 5.0):
        for _ in range(100):
            n_rows = rng.randint(0, 50)
            seen = set()
            rows = []
            for _ in range(n_rows):
                slice_id = rng.randint(0, 3)
                fund = rng.choice(funds)
                if (slice_id, fund) in seen:
                    continue
                seen.add((slice_id, fund))
                rows.append((slice_id, f"S{slice_id}/L{rng.randint(0, 2)}", fund))
            table = make_table(rows, build_slice_plan((0, 23), 6))
            dataset = make_dataset(funds, 24)
            counters = {}
            for query in funds:
                results = compose(table, dataset, query, plan_range)
                got = {r.fund_id: r.counter for r in results}
                assert got == brute_force_counters(table, query, [0, 1, 2, 3])
                counters[query] = got
            for a in funds:
                for b in funds:
                    if a != b:
                        assert counters[a].get(b, 0) == counters[b].get(a, 0)


def test_index_round_trip(small_synthetic, tmp_path):
    with criterion("index-round-trip", 10.0):
        params = TreeParams(variability_threshold=5.0)
        plan = build_slice_plan(small_synthetic.month_range, 6)
        first = build_index(small_synthetic, plan, params)
        second = build_index(small_synthetic, plan, params)

        path_a, path_b = tmp_path / "a.sig", tmp_path / "b.sig"
        save_index(first, path_a)
        save_index(second, path_b)
        assert path_a.read_bytes() == path_b.read_bytes()  # byte-stable rebuild

        loaded = load_index(path_a)
        assert loaded == first                             # structural identity
        assert serialize_index(loaded) == path_a.read_text()


# frozen from the first oracle run at these exact settings (seed 7,
# threshold mode, variability 5.0): precision 0.9500, margin 0.581413
FROZEN_PRECISION = 0.95
FROZEN_MARGIN = 0.581413


def test_synthetic_cluster_recovery():
    spec = SyntheticSpec(
        clusters=5, funds_per_cluster=20, months=60,
        factor_volatility=3.0, noise_volatility=2.0, seed=7,
    )
    with criterion("synthetic-cluster-recovery", 60.0):
        report = run_cluster_recovery(spec, k=5)
    assert len(report.queries) == 100
    assert report.mean_precision >= 0.8
    assert report.margin is not None and report.margin >= 0.3
    # regression pins on the frozen oracle values
    assert report.mean_precision == pytest.approx(FROZEN_PRECISION, abs=1e-6)
    assert report.margin == pytest.approx(FROZEN_MARGIN, abs=1e-4)


def test_pearson_unit():
    with criterion("pearson-unit", 5.0):
        a = ReturnSeries("a", dict(enumerate([1.0, 2.5, -0.5, 4.0])))
        same = ReturnSeries("b", dict(enumerate([1.0, 2.5, -0.5, 4.0])))
        negated = ReturnSeries("c", dict(enumerate([-1.0, -2.5, 0.5, -4.0])))
        assert pearson(a, same).r == 1.0
        assert pearson(a, negated).r == -1.0

        x = ReturnSeries("x", dict(enumerate([1.0, 2.0, 3.0, 4.0])))
        y = ReturnSeries("y", dict(enumerate([1.0, 2.0, 3.0, 5.0])))
        # direct formula evaluation, independent arithmetic path
        n = 4
        mx, my = 10.0 / n, 11.0 / n
        sxy = sum((v - mx) * (w - my) for v, w in [(1, 1), (2, 2), (3, 3), (4, 5)])
        sxx = sum((v - mx) ** 2 for v in [1, 2, 3, 4])
        syy = sum((w - my) ** 2 for w in [1, 2, 3, 5])
        expected = sxy / math.sqrt(sxx * syy)
        assert abs(pearson(x, y).r - expected) < 1e-12


def test_service_contract(small_synthetic, small_index, tmp_path, capsys):
    with criterion("service-contract", 5.0):
        app = create_app(small_index, small_synthetic, default_k=6)
        client = TestClient(app)
        first, last = small_synthetic.month_range
        query_range = QueryRange(first, last)

        expected = compose(small_index, small_synthetic, "C00F000", query_range)[:6]
        body = client.get(
            "/funds/C00F000/similar",
            params={"from": "2000-01", "to": "2001-12", "k": 6},
        ).json()
        assert [r["fund"]["fund_id"] for r in body["results"]] == [
            e.fund_id for e in expected
        ]
        assert [r["counter"] for r in body["results"]] == [
            e.counter for e in expected
        ]

        # the CLI must agree with the service and compose
        returns_path = tmp_path / "r.csv"
        meta_path = tmp_path / "m.csv"
        index_path = tmp_path / "i.sig"
        returns_path.write_text(serialize_returns(small_synthetic))
        meta_path.write_text(serialize_meta(small_synthetic.meta))
        save_index(small_index, index_path)
        code = cli_main([
            "query", "--index", str(index_path), "--returns", str(returns_path),
            "--meta", str(meta_path), "--fund", "C00F000",
            "--from", "2000-01", "--to", "2001-12", "--k", "6", "--porcelain",
        ])
        out = capsys.readouterr().out
        assert code == 0
        cli_rows = [line.split("\t") for line in out.strip().splitlines()]
        assert [row[1] for row in cli_rows] == [e.fund_id for e in expected]
        assert [int(row[3]) for row in cli_rows] == [e.counter for e in expected]

        # every benefit chip re-validates as a strict inequality
        q = small_synthetic.meta["C00F000"]
        accessors = {
            "lower_management_fee": (lambda m: m.management_fee,
                                     lambda r, s: r < s),
            "lower_performance_fee": (lambda m: m.performance_fee,
                                      lambda r, s: r < s),
            "lower_redemption_fee": (lambda m: m.redemption_fee,
                                     lambda r, s: r < s),
            "higher_ret_1m": (lambda m: m.trailing_returns["1m"],
                              lambda r, s: r > s),
            "higher_ret_3m": (lambda m: m.trailing_returns["3m"],
                              lambda r, s: r > s),
            "higher_ret_6m": (lambda m: m.trailing_returns["6m"],
                              lambda r, s: r > s),
            "higher_ret_1y": (lambda m: m.trailing_returns["1y"],
                              lambda r, s: r > s),
            "higher_sharpe": (lambda m: m.sharpe_ratio, lambda r, s: r > s),
        }
        for result in body["results"]:
            m = small_synthetic.meta[result["fund"]["fund_id"]]
            for chip in result["benefits"]:
                accessor, compare = accessors[chip["kind"]]
                rv, qv = accessor(m), accessor(q)
                assert rv is not None and qv is not None
                assert compare(rv, qv), (chip, rv, qv)

        resp = client.get("/funds/GHOST/similar")
        assert resp.status_code == 404
        assert resp.json()["error"] == "fund_not_found"
