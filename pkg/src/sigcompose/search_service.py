"""HTTP query service: pick a fund and a range, get ranked similar funds.

Read-only over an immutable, fingerprint-checked (index, dataset) snapshot.
Every result carries benefit indicators: fields where it strictly beats the
query fund (lower fees, higher trailing returns, higher Sharpe ratio).
"""

from __future__ import annotations

from dataclasses import dataclass

from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse

from .classification_index import ClassificationTable, dataset_fingerprint
from .ingestion import Dataset, FundMeta, format_month, parse_month
from .signal_composition import QueryRange, UnknownFundError, compose, top_k

DEFAULT_K = 6
DEFAULT_PAGE_SIZE = 50


class FingerprintMismatchError(RuntimeError):
    """Index was built from a different dataset than the one being served."""


@dataclass(frozen=True)
class BenefitIndicator:
    kind: str
    display: str


# (kind, display, metadata accessor, True when lower is better)
_BENEFIT_SPECS = (
    ("lower_management_fee", "Lower Management Fee",
     lambda m: m.management_fee, True),
    ("lower_performance_fee", "Lower Performance Fee",
     lambda m: m.performance_fee, True),
    ("lower_redemption_fee", "Lower Redemption Fee",
     lambda m: m.redemption_fee, True),
    ("higher_ret_1m", "Higher 1-Month Return",
     lambda m: m.trailing_returns.get("1m"), False),
    ("higher_ret_3m", "Higher 3-Month Return",
     lambda m: m.trailing_returns.get("3m"), False),
    ("higher_ret_6m", "Higher 6-Month Return",
     lambda m: m.trailing_returns.get("6m"), False),
    ("higher_ret_1y", "Higher 1-Year Return",
     lambda m: m.trailing_returns.get("1y"), False),
    ("higher_sharpe", "Higher Sharpe Ratio",
     lambda m: m.sharpe_ratio, False),
)


def compute_benefits(
    query_meta: FundMeta, result_meta: FundMeta
) -> list[BenefitIndicator]:
    """Indicators where the result strictly beats the query fund.

    Emitted only when both values are present; ties never qualify. Order is
    fixed: fees, then returns short to long, then Sharpe.
    """
    benefits = []
    for kind, display, accessor, lower_is_better in _BENEFIT_SPECS:
        qv, rv = accessor(query_meta), accessor(result_meta)
        if qv is None or rv is None:
            continue
        if (rv < qv) if lower_is_better else (rv > qv):
            benefits.append(BenefitIndicator(kind=kind, display=display))
    return benefits


def list_funds(
    dataset: Dataset,
    filter_text: str | None = None,
    page_token: str | None = None,
    page_size: int = DEFAULT_PAGE_SIZE,
) -> tuple[list[FundMeta], str | None]:
    """Case-insensitive substring lookup on fund names and ids, paginated."""
    needle = (filter_text or "").lower()
    matches = [
        dataset.meta[fund_id]
        for fund_id in sorted(dataset.meta)
        if needle in fund_id.lower() or needle in dataset.meta[fund_id].name.lower()
    ]
    offset = 0
    if page_token:
        try:
            offset = int(page_token)
        except ValueError:
            raise ValueError(f"invalid page token {page_token!r}") from None
        if offset < 0:
            raise ValueError(f"invalid page token {page_token!r}")
    page = matches[offset : offset + page_size]
    next_token = (
        str(offset + page_size) if offset + page_size < len(matches) else None
    )
    return page, next_token


def _summary(meta: FundMeta, classifiable: bool) -> dict:
    return {
        "fund_id": meta.fund_id,
        "name": meta.name,
        "category": meta.category,
        "domicile": meta.domicile,
        "classifiable": classifiable,
    }


def _detail(meta: FundMeta, dataset: Dataset) -> dict:
    series = dataset.series.get(meta.fund_id)
    returns = {}
    if series is not None:
        returns = {
            format_month(m, dataset.epoch): series.returns[m]
            for m in sorted(series.returns)
        }
    return {
        "fund_id": meta.fund_id,
        "name": meta.name,
        "category": meta.category,
        "domicile": meta.domicile,
        "management_fee": meta.management_fee,
        "performance_fee": meta.performance_fee,
        "redemption_fee": meta.redemption_fee,
        "sharpe_ratio": meta.sharpe_ratio,
        "trailing_returns": meta.trailing_returns,
        "extra_fields": meta.extra_fields,
        "returns": returns,
    }


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": code, "message": message}
    )


def create_app(
    table: ClassificationTable,
    dataset: Dataset,
    default_k: int = DEFAULT_K,
    page_size: int = DEFAULT_PAGE_SIZE,
) -> FastAPI:
    """Wire the endpoints over immutable snapshots; refuses mismatched inputs."""
    actual = dataset_fingerprint(dataset)
    expected = table.manifest.dataset_fingerprint
    if actual != expected:
        raise FingerprintMismatchError(
            f"index fingerprint {expected} does not match dataset {actual}"
        )
    if table.manifest.epoch != dataset.epoch:
        raise FingerprintMismatchError(
            f"index epoch {table.manifest.epoch} does not match "
            f"dataset epoch {dataset.epoch}"
        )

    app = FastAPI(title="sigcompose search service", docs_url=None, redoc_url=None)
    first, last = dataset.month_range

    @app.get("/health")
    def health() -> dict:
        plan = table.manifest.plan
        return {
            "status": "ok",
            "rows": len(table.rows),
            "slices": len(plan),
            "funds": len(dataset.series),
            "fingerprint": table.manifest.dataset_fingerprint,
            "epoch": dataset.epoch,
            "month_range": [
                format_month(first, dataset.epoch),
                format_month(last, dataset.epoch),
            ],
            "params": {
                "penalty": table.manifest.params.complexity_penalty,
                "min_support": table.manifest.params.min_support,
                "split_mode": table.manifest.params.split_mode,
                "variability_threshold": table.manifest.params.variability_threshold,
            },
        }

    @app.get("/funds")
    def funds(filter: str | None = None, page: str | None = None):
        try:
            page_metas, next_token = list_funds(dataset, filter, page, page_size)
        except ValueError as exc:
            return _error(400, "bad_page_token", str(exc))
        return {
            "funds": [
                _summary(m, classifiable=m.fund_id in dataset.series)
                for m in page_metas
            ],
            "next_page": next_token,
        }

    @app.get("/funds/{fund_id}")
    def fund_detail(fund_id: str):
        meta = dataset.meta.get(fund_id)
        if meta is None:
            return _error(404, "fund_not_found", f"unknown fund {fund_id!r}")
        return _detail(meta, dataset)

    @app.get("/funds/{fund_id}/similar")
    def similar(
        fund_id: str,
        from_: str | None = Query(default=None, alias="from"),
        to: str | None = None,
        k: int | None = None,
    ):
        try:
            from_month = parse_month(from_, dataset.epoch) if from_ else first
            to_month = parse_month(to, dataset.epoch) if to else last
        except ValueError as exc:
            return _error(400, "bad_month", str(exc))
        if from_month > to_month:
            return _error(
                400, "bad_range", f"from {from_} is after to {to}"
            )
        if k is None:
            k = default_k
        if k < 0:
            return _error(400, "bad_k", f"k must be >= 0, got {k}")
        try:
            results = compose(
                table, dataset, fund_id, QueryRange(from_month, to_month)
            )
        except UnknownFundError:
            return _error(404, "fund_not_found", f"unknown fund {fund_id!r}")
        query_meta = dataset.meta[fund_id]
        payload = []
        for res in top_k(results, k):
            meta = dataset.meta[res.fund_id]
            payload.append(
                {
                    "fund": _summary(meta, classifiable=True),
                    "counter": res.counter,
                    "slices_in_range": res.slices_in_range,
                    "r": res.tiebreak_correlation,
                    "benefits": [
                        {"kind": b.kind, "display": b.display}
                        for b in compute_benefits(query_meta, meta)
                    ],
                }
            )
        return {
            "query": {
                "fund": _summary(query_meta, classifiable=True),
                "from": format_month(from_month, dataset.epoch),
                "to": format_month(to_month, dataset.epoch),
                "k": k,
            },
            "results": payload,
        }

    return app


def serve(
    table: ClassificationTable,
    dataset: Dataset,
    bind_address: str = "127.0.0.1:8000",
    default_k: int = DEFAULT_K,
    page_size: int = DEFAULT_PAGE_SIZE,
) -> None:
    """Run the service until interrupted; uvicorn handles graceful shutdown."""
    import uvicorn

    app = create_app(table, dataset, default_k=default_k, page_size=page_size)
    host, _, port = bind_address.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"bind address must be host:port, got {bind_address!r}")
    uvicorn.run(app, host=host, port=int(port))
