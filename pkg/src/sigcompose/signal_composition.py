"""Similarity queries over the classification table.

For a query fund and month range, count per fund how many in-range slices
place it in the same retained leaf as the query; the counter ranks
similarity. Pearson correlation over the range breaks counter ties.
"""

from __future__ import annotations

from dataclasses import dataclass

from .classification_index import ClassificationTable
from .evaluation import pearson
from .ingestion import Dataset
from .self_labeling import SlicePlan


class UnknownFundError(KeyError):
    """Query fund does not exist in the dataset."""


@dataclass(frozen=True)
class QueryRange:
    from_month: int
    to_month: int

    def __post_init__(self) -> None:
        if self.from_month > self.to_month:
            raise ValueError(
                f"range start {self.from_month} after end {self.to_month}"
            )


@dataclass(frozen=True)
class SimilarityResult:
    fund_id: str
    counter: int
    slices_in_range: int
    tiebreak_correlation: float | None


def slices_for_range(plan: SlicePlan, query_range: QueryRange) -> list[int]:
    """Ids of plan slices lying entirely within the range; may be empty."""
    return [
        s.slice_id
        for s in plan
        if s.start >= query_range.from_month and s.end - 1 <= query_range.to_month
    ]


def compose(
    table: ClassificationTable,
    dataset: Dataset,
    query_fund: str,
    query_range: QueryRange,
) -> list[SimilarityResult]:
    """Rank funds by retained-leaf co-membership with the query fund.

    Only funds sharing at least one leaf appear. Total order: counter
    descending, then tie-break correlation descending (absent last), then
    fund id ascending.
    """
    if query_fund not in dataset.series:
        raise UnknownFundError(query_fund)
    slice_ids = set(slices_for_range(table.manifest.plan, query_range))
    if not slice_ids:
        return []

    fund_node: dict[int, dict[str, str]] = {}
    node_members: dict[tuple[int, str], list[str]] = {}
    for row in table.rows:
        if row.slice_id not in slice_ids:
            continue
        fund_node.setdefault(row.slice_id, {})[row.fund_id] = row.node_name
        node_members.setdefault((row.slice_id, row.node_name), []).append(row.fund_id)

    counters: dict[str, int] = {}
    for slice_id in slice_ids:
        node = fund_node.get(slice_id, {}).get(query_fund)
        if node is None:
            continue
        for fund_id in node_members[(slice_id, node)]:
            if fund_id != query_fund:
                counters[fund_id] = counters.get(fund_id, 0) + 1

    month_span = (query_range.from_month, query_range.to_month)
    query_series = dataset.series[query_fund]
    results = []
    for fund_id, counter in counters.items():
        r = None
        series = dataset.series.get(fund_id)
        if series is not None:
            r = pearson(query_series, series, month_span).r
        results.append(
            SimilarityResult(
                fund_id=fund_id,
                counter=counter,
                slices_in_range=len(slice_ids),
                tiebreak_correlation=r,
            )
        )
    results.sort(
        key=lambda res: (
            -res.counter,
            -(res.tiebreak_correlation
              if res.tiebreak_correlation is not None
              else float("-inf")),
            res.fund_id,
        )
    )
    return results


def top_k(results: list[SimilarityResult], k: int) -> list[SimilarityResult]:
    """First k results of the already-total-ordered list; stable."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return results[:k]
