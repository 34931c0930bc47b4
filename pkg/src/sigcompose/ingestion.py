"""Parsing, validation, and calendar alignment of fund return data.

Monthly returns are kept in percent units exactly as displayed by data
vendors (1.89 means +1.89%). Months are addressed by an integer index
counted from a configurable epoch month (default January 2000).
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field

DEFAULT_EPOCH = "2000-01"

TRAILING_KEYS = ("1m", "3m", "6m", "1y", "3y")

_META_COLUMNS = (
    "fund_id",
    "name",
    "category",
    "domicile",
    "management_fee",
    "performance_fee",
    "redemption_fee",
    "sharpe_ratio",
    "ret_1m",
    "ret_3m",
    "ret_6m",
    "ret_1y",
    "ret_3y",
)

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


class ParseError(ValueError):
    """Raised on malformed input files; message carries the line number."""


def parse_month(text: str, epoch: str = DEFAULT_EPOCH) -> int:
    """Convert a YYYY-MM string to a month index relative to the epoch month."""
    m = _MONTH_RE.match(text.strip())
    if not m:
        raise ValueError(f"invalid month {text!r}, expected YYYY-MM")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise ValueError(f"invalid month {text!r}, month out of range")
    em = _MONTH_RE.match(epoch)
    if not em:
        raise ValueError(f"invalid epoch {epoch!r}, expected YYYY-MM")
    index = (year - int(em.group(1))) * 12 + (month - int(em.group(2)))
    if index < 0:
        raise ValueError(f"month {text!r} precedes epoch {epoch}")
    return index


def format_month(index: int, epoch: str = DEFAULT_EPOCH) -> str:
    """Inverse of :func:`parse_month`."""
    em = _MONTH_RE.match(epoch)
    if not em:
        raise ValueError(f"invalid epoch {epoch!r}, expected YYYY-MM")
    total = (int(em.group(1)) * 12 + int(em.group(2)) - 1) + index
    return f"{total // 12:04d}-{total % 12 + 1:02d}"


@dataclass
class ReturnSeries:
    """One fund's calendar-aligned monthly returns; gaps are simply absent keys."""

    fund_id: str
    returns: dict[int, float] = field(default_factory=dict)

    def months(self) -> list[int]:
        return sorted(self.returns)


@dataclass
class FundMeta:
    """Vendor-supplied descriptive fields; absent numerics stay ``None``, never 0."""

    fund_id: str
    name: str = ""
    category: str = ""
    domicile: str = ""
    management_fee: float | None = None
    performance_fee: float | None = None
    redemption_fee: float | None = None
    sharpe_ratio: float | None = None
    trailing_returns: dict[str, float | None] = field(
        default_factory=lambda: {k: None for k in TRAILING_KEYS}
    )
    extra_fields: dict[str, str] = field(default_factory=dict)


@dataclass
class Dataset:
    """Immutable-by-convention bundle of return series and fund metadata.

    ``series`` holds the classifiable funds; ``meta`` may additionally hold
    display-only funds that have metadata but no return history.
    """

    series: dict[str, ReturnSeries]
    meta: dict[str, FundMeta]
    month_range: tuple[int, int]
    epoch: str = DEFAULT_EPOCH

    @property
    def n_months(self) -> int:
        return self.month_range[1] - self.month_range[0] + 1

    def classifiable_funds(self) -> list[str]:
        return sorted(self.series)


def _parse_return_cell(cell: str, line: int, fund_id: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(
            f"line {line}: non-numeric return {cell!r} for fund {fund_id}"
        ) from None
    if not math.isfinite(value):
        raise ParseError(f"line {line}: non-finite return {cell!r} for fund {fund_id}")
    return value


def parse_returns(text: str, epoch: str = DEFAULT_EPOCH) -> Dataset:
    """Parse the returns file format into a Dataset with series only.

    Line 1 is a header ``fund_id,<YYYY-MM>,...`` of consecutive months; every
    other line is a fund id followed by one cell per header month, empty cells
    meaning missing returns.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("line 1: empty returns file") from None
    if not header or header[0].strip() != "fund_id":
        raise ParseError("line 1: header must start with 'fund_id'")
    if len(header) < 2:
        raise ParseError("line 1: header lists no months")
    months: list[int] = []
    for cell in header[1:]:
        try:
            months.append(parse_month(cell, epoch))
        except ValueError as exc:
            raise ParseError(f"line 1: {exc}") from None
    for prev, cur in zip(months, months[1:]):
        if cur != prev + 1:
            raise ParseError("line 1: header months are not consecutive")

    series: dict[str, ReturnSeries] = {}
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        fund_id = row[0]
        if len(row) - 1 != len(months):
            raise ParseError(
                f"line {line}: expected {len(months)} returns, got {len(row) - 1}"
            )
        if fund_id in series:
            raise ParseError(f"line {line}: duplicate fund {fund_id}")
        returns = {}
        for month, cell in zip(months, row[1:]):
            cell = cell.strip()
            if cell == "":
                continue
            returns[month] = _parse_return_cell(cell, line, fund_id)
        series[fund_id] = ReturnSeries(fund_id=fund_id, returns=returns)

    return Dataset(
        series=series,
        meta={},
        month_range=(months[0], months[-1]),
        epoch=epoch,
    )


def serialize_returns(dataset: Dataset) -> str:
    """Render a Dataset back to the returns file format, canonically.

    Funds are sorted by id and floats rendered with ``repr`` so that
    parse(serialize(d)) == d and the output is byte-stable; this canonical
    text is also what the index fingerprint hashes.
    """
    first, last = dataset.month_range
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["fund_id"] + [format_month(m, dataset.epoch) for m in range(first, last + 1)]
    )
    for fund_id in sorted(dataset.series):
        returns = dataset.series[fund_id].returns
        cells = [
            repr(returns[m]) if m in returns else "" for m in range(first, last + 1)
        ]
        writer.writerow([fund_id] + cells)
    return out.getvalue()


def _parse_numeric_cell(cell: str, line: int, column: str) -> float | None:
    cell = cell.strip()
    if cell == "":
        return None
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(
            f"line {line}: non-numeric value {cell!r} in column {column}"
        ) from None
    if not math.isfinite(value):
        raise ParseError(f"line {line}: non-finite value {cell!r} in column {column}")
    return value


def parse_meta(text: str) -> dict[str, FundMeta]:
    """Parse the metadata file format; unknown columns land in extra_fields."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("line 1: empty metadata file") from None
    header = [h.strip() for h in header]
    if "fund_id" not in header:
        raise ParseError("line 1: missing fund_id column")
    known = set(_META_COLUMNS)
    extra_columns = [h for h in header if h not in known]

    metas: dict[str, FundMeta] = {}
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(
                f"line {line}: expected {len(header)} columns, got {len(row)}"
            )
        cells = dict(zip(header, row))
        fund_id = cells["fund_id"]
        if fund_id in metas:
            raise ParseError(f"line {line}: duplicate fund {fund_id}")
        meta = FundMeta(
            fund_id=fund_id,
            name=cells.get("name", ""),
            category=cells.get("category", ""),
            domicile=cells.get("domicile", ""),
            management_fee=_parse_numeric_cell(
                cells.get("management_fee", ""), line, "management_fee"
            ),
            performance_fee=_parse_numeric_cell(
                cells.get("performance_fee", ""), line, "performance_fee"
            ),
            redemption_fee=_parse_numeric_cell(
                cells.get("redemption_fee", ""), line, "redemption_fee"
            ),
            sharpe_ratio=_parse_numeric_cell(
                cells.get("sharpe_ratio", ""), line, "sharpe_ratio"
            ),
            trailing_returns={
                k: _parse_numeric_cell(cells.get(f"ret_{k}", ""), line, f"ret_{k}")
                for k in TRAILING_KEYS
            },
            extra_fields={c: cells[c] for c in extra_columns},
        )
        metas[fund_id] = meta
    return metas


def serialize_meta(metas: dict[str, FundMeta]) -> str:
    """Render metadata to its file format, canonically (sorted by fund id)."""
    extra_columns: list[str] = []
    for meta in metas.values():
        for key in meta.extra_fields:
            if key not in extra_columns:
                extra_columns.append(key)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(_META_COLUMNS) + extra_columns)

    def num(value: float | None) -> str:
        return "" if value is None else repr(value)

    for fund_id in sorted(metas):
        m = metas[fund_id]
        row = [
            m.fund_id,
            m.name,
            m.category,
            m.domicile,
            num(m.management_fee),
            num(m.performance_fee),
            num(m.redemption_fee),
            num(m.sharpe_ratio),
        ]
        row += [num(m.trailing_returns.get(k)) for k in TRAILING_KEYS]
        row += [m.extra_fields.get(c, "") for c in extra_columns]
        writer.writerow(row)
    return out.getvalue()


def merge(series_dataset: Dataset, meta_map: dict[str, FundMeta]) -> Dataset:
    """Combine parsed series with parsed metadata into one Dataset.

    Funds with series but no metadata get a minimal synthesized FundMeta;
    funds with metadata but no series are kept for display only and never
    enter classification.
    """
    meta: dict[str, FundMeta] = {}
    for fund_id in sorted(set(series_dataset.series) | set(meta_map)):
        if fund_id in meta_map:
            meta[fund_id] = meta_map[fund_id]
        else:
            meta[fund_id] = FundMeta(fund_id=fund_id, name=fund_id)
    series = {fid: series_dataset.series[fid] for fid in sorted(series_dataset.series)}
    return Dataset(
        series=series,
        meta=meta,
        month_range=series_dataset.month_range,
        epoch=series_dataset.epoch,
    )
