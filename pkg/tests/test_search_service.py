import dataclasses

import pytest
from fastapi.testclient import TestClient

from sigcompose.ingestion import FundMeta, format_month
from sigcompose.search_service import (
    FingerprintMismatchError,
    compute_benefits,
    create_app,
    list_funds,
)
from sigcompose.signal_composition import QueryRange, compose


def meta(**kwargs):
    return FundMeta(fund_id=kwargs.pop("fund_id", "X"), **kwargs)


class TestComputeBenefits:
    def test_lower_performance_fee(self):
        q = meta(performance_fee=20.0)
        r = meta(performance_fee=15.0)
        kinds = [b.kind for b in compute_benefits(q, r)]
        assert kinds == ["lower_performance_fee"]

    def test_equal_fees_no_indicator(self):
        q = meta(management_fee=1.0)
        r = meta(management_fee=1.0)
        assert compute_benefits(q, r) == []

    def test_absent_values_no_indicator(self):
        q = meta(sharpe_ratio=1.0)
        r = meta(sharpe_ratio=None)
        assert compute_benefits(q, r) == []
        assert compute_benefits(meta(sharpe_ratio=None), meta(sharpe_ratio=9.0)) == []

    def test_higher_sharpe_is_a_benefit(self):
        q = meta(sharpe_ratio=0.5)
        r = meta(sharpe_ratio=0.9)
        assert [b.kind for b in compute_benefits(q, r)] == ["higher_sharpe"]

    def test_fee_direction_is_lower(self):
        q = meta(redemption_fee=0.5)
        r = meta(redemption_fee=1.5)
        assert compute_benefits(q, r) == []

    def test_return_direction_is_higher(self):
        q = meta(trailing_returns={"1m": 2.0, "3m": None, "6m": None,
                                   "1y": None, "3y": None})
        r = meta(trailing_returns={"1m": 1.0, "3m": None, "6m": None,
                                   "1y": None, "3y": None})
        assert compute_benefits(q, r) == []

    def test_canonical_order_and_displays(self):
        q = meta(
            management_fee=2.0, performance_fee=20.0, redemption_fee=1.0,
            sharpe_ratio=0.5,
            trailing_returns={"1m": 1.0, "3m": 1.0, "6m": 1.0, "1y": 1.0,
                              "3y": 1.0},
        )
        r = meta(
            management_fee=1.0, performance_fee=15.0, redemption_fee=0.5,
            sharpe_ratio=1.5,
            trailing_returns={"1m": 2.0, "3m": 2.0, "6m": 2.0, "1y": 2.0,
                              "3y": 99.0},
        )
        benefits = compute_benefits(q, r)
        assert [b.display for b in benefits] == [
            "Lower Management Fee",
            "Lower Performance Fee",
            "Lower Redemption Fee",
            "Higher 1-Month Return",
            "Higher 3-Month Return",
            "Higher 6-Month Return",
            "Higher 1-Year Return",
            "Higher Sharpe Ratio",
        ]
        # 3-year trailing return never produces an indicator
        assert not any("3-Year" in b.display for b in benefits)


class TestListFunds:
    def test_substring_matches_name_and_id(self, small_synthetic):
        by_id, _ = list_funds(small_synthetic, "c01f")
        assert all(m.fund_id.startswith("C01F") for m in by_id)
        by_name, _ = list_funds(small_synthetic, "cluster 2 fund")
        assert all(m.name.startswith("Cluster 2") for m in by_name)

    def test_pagination(self, small_synthetic):
        page1, token = list_funds(small_synthetic, page_size=7)
        assert len(page1) == 7 and token == "7"
        page2, _ = list_funds(small_synthetic, page_token=token, page_size=7)
        assert page1[-1].fund_id < page2[0].fund_id

    def test_bad_token(self, small_synthetic):
        with pytest.raises(ValueError, match="page token"):
            list_funds(small_synthetic, page_token="x")


@pytest.fixture(scope="module")
def client(small_synthetic, small_index):
    app = create_app(small_index, small_synthetic, default_k=6, page_size=10)
    with TestClient(app) as c:
        yield c


class TestEndpoints:
    def test_health(self, client, small_index):
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["rows"] == len(small_index.rows)
        assert body["slices"] == len(small_index.manifest.plan)
        assert body["fingerprint"] == small_index.manifest.dataset_fingerprint

    def test_funds_listing_and_filter(self, client):
        body = client.get("/funds").json()
        assert len(body["funds"]) == 10
        assert body["next_page"] == "10"
        filtered = client.get("/funds", params={"filter": "C02F00"}).json()
        assert all("C02F00" in f["fund_id"] for f in filtered["funds"])

    def test_funds_no_match_is_200_empty(self, client):
        body = client.get("/funds", params={"filter": "zzz-none"}).json()
        assert body == {"funds": [], "next_page": None}

    def test_fund_detail(self, client, small_synthetic):
        body = client.get("/funds/C00F000").json()
        m = small_synthetic.meta["C00F000"]
        assert body["name"] == m.name
        assert body["management_fee"] == m.management_fee
        assert body["trailing_returns"]["6m"] == m.trailing_returns["6m"]
        assert body["extra_fields"] == m.extra_fields
        first_month = format_month(0, small_synthetic.epoch)
        assert body["returns"][first_month] == small_synthetic.series[
            "C00F000"
        ].returns[0]

    def test_unknown_fund_detail(self, client):
        resp = client.get("/funds/NOPE")
        assert resp.status_code == 404
        assert resp.json() == {
            "error": "fund_not_found",
            "message": "unknown fund 'NOPE'",
        }

    def test_unknown_fund_similar(self, client):
        resp = client.get("/funds/NOPE/similar")
        assert resp.status_code == 404
        assert resp.json()["error"] == "fund_not_found"

    def test_similar_matches_compose(self, client, small_synthetic, small_index):
        first, last = small_synthetic.month_range
        resp = client.get(
            "/funds/C00F000/similar",
            params={
                "from": format_month(first, small_synthetic.epoch),
                "to": format_month(last, small_synthetic.epoch),
                "k": 6,
            },
        )
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["results"]) <= 6
        expected = compose(
            small_index, small_synthetic, "C00F000", QueryRange(first, last)
        )[:6]
        assert [r["fund"]["fund_id"] for r in body["results"]] == [
            e.fund_id for e in expected
        ]
        assert [r["counter"] for r in body["results"]] == [
            e.counter for e in expected
        ]
        for got, exp in zip(body["results"], expected):
            if exp.tiebreak_correlation is None:
                assert got["r"] is None
            else:
                assert got["r"] == pytest.approx(exp.tiebreak_correlation)

    def test_benefits_revalidate_against_metadata(self, client, small_synthetic):
        body = client.get("/funds/C00F000/similar", params={"k": 20}).json()
        q = small_synthetic.meta["C00F000"]
        checks = {
            "lower_management_fee": lambda m: m.management_fee < q.management_fee,
            "lower_performance_fee": lambda m: m.performance_fee < q.performance_fee,
            "lower_redemption_fee": lambda m: m.redemption_fee < q.redemption_fee,
            "higher_ret_1m": lambda m: m.trailing_returns["1m"] > q.trailing_returns["1m"],
            "higher_ret_3m": lambda m: m.trailing_returns["3m"] > q.trailing_returns["3m"],
            "higher_ret_6m": lambda m: m.trailing_returns["6m"] > q.trailing_returns["6m"],
            "higher_ret_1y": lambda m: m.trailing_returns["1y"] > q.trailing_returns["1y"],
            "higher_sharpe": lambda m: m.sharpe_ratio > q.sharpe_ratio,
        }
        seen = set()
        for result in body["results"]:
            m = small_synthetic.meta[result["fund"]["fund_id"]]
            for chip in result["benefits"]:
                assert checks[chip["kind"]](m), chip
                seen.add(chip["kind"])
        assert seen  # fixture actually exercises some benefits

    def test_default_range_is_full_dataset(self, client, small_synthetic):
        body = client.get("/funds/C00F000/similar").json()
        first, last = small_synthetic.month_range
        assert body["query"]["from"] == format_month(first, small_synthetic.epoch)
        assert body["query"]["to"] == format_month(last, small_synthetic.epoch)
        assert body["query"]["k"] == 6

    def test_bad_month(self, client):
        resp = client.get("/funds/C00F000/similar", params={"from": "20xx-01"})
        assert resp.status_code == 400
        assert resp.json()["error"] == "bad_month"

    def test_from_after_to(self, client):
        resp = client.get(
            "/funds/C00F000/similar",
            params={"from": "2001-06", "to": "2000-01"},
        )
        assert resp.status_code == 400
        assert resp.json()["error"] == "bad_range"

    def test_negative_k(self, client):
        resp = client.get("/funds/C00F000/similar", params={"k": -1})
        assert resp.status_code == 400
        assert resp.json()["error"] == "bad_k"

    def test_idempotent_reads(self, client):
        a = client.get("/funds/C00F000/similar", params={"k": 4})
        b = client.get("/funds/C00F000/similar", params={"k": 4})
        assert a.content == b.content


class TestFingerprintGate:
    def test_mismatched_dataset_refused(self, small_synthetic, small_index):
        mutated_series = dict(small_synthetic.series)
        victim = mutated_series["C00F000"]
        mutated_series["C00F000"] = dataclasses.replace(
            victim, returns={**victim.returns, 0: 99.0}
        )
        mutated = dataclasses.replace(small_synthetic, series=mutated_series)
        with pytest.raises(FingerprintMismatchError, match="fingerprint"):
            create_app(small_index, mutated)
