"""Slicing return series into fixed windows and attaching self-generated labels.

Each complete window of a fund's history becomes one training record whose
regression target is simply the sum of the window's returns. Funds missing
any month of a window drop out of that window entirely; nothing is imputed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ingestion import Dataset


@dataclass(frozen=True)
class Slice:
    slice_id: int
    start: int
    length: int

    @property
    def end(self) -> int:
        """First month index after the slice."""
        return self.start + self.length


@dataclass(frozen=True)
class SlicePlan:
    """Contiguous, non-overlapping slices covering a month range in order."""

    slices: tuple[Slice, ...]

    def __iter__(self):
        return iter(self.slices)

    def __len__(self) -> int:
        return len(self.slices)

    def by_id(self) -> dict[int, Slice]:
        return {s.slice_id: s for s in self.slices}


@dataclass(frozen=True)
class SelfLabeledRecord:
    """One fund's feature vector for one slice plus its self-generated label."""

    fund_id: str
    slice_id: int
    features: tuple[float, ...]
    label: float


def build_slice_plan(
    month_range: tuple[int, int], nominal_length: int = 6
) -> SlicePlan:
    """Cut a month range into consecutive slices of ``nominal_length``.

    Any remainder is absorbed into the terminal slice rather than forming a
    stub: a 128-month range at length 6 yields 20 six-month slices plus one
    terminal 8-month slice, and a 13-month range yields slices of 6 and 7.
    A range shorter than one nominal slice becomes a single short slice.
    """
    if nominal_length < 2:
        raise ValueError(f"nominal_length must be >= 2, got {nominal_length}")
    first, last = month_range
    span = last - first + 1
    if span < 2:
        raise ValueError(f"range must cover at least 2 months, got {span}")
    full, remainder = divmod(span, nominal_length)
    if remainder == 0:
        lengths = [nominal_length] * full
    elif full == 0:
        lengths = [span]
    else:
        lengths = [nominal_length] * (full - 1) + [nominal_length + remainder]
    slices = []
    start = first
    for slice_id, length in enumerate(lengths):
        slices.append(Slice(slice_id=slice_id, start=start, length=length))
        start += length
    return SlicePlan(slices=tuple(slices))


def label_of(features: list[float] | tuple[float, ...]) -> float:
    """Self-label of a window: the left-to-right sum of its returns."""
    if len(features) == 0:
        raise ValueError("cannot label an empty window")
    total = 0.0
    for value in features:
        total += value
    return total


def slice_and_label(
    dataset: Dataset, plan: SlicePlan
) -> dict[int, list[SelfLabeledRecord]]:
    """Produce per-slice training records for every fund with complete windows.

    A fund yields a record for a slice iff every month of the slice is
    present in its series. Funds are visited in sorted id order so the
    record lists are deterministic regardless of input file row order.
    """
    first, last = dataset.month_range
    for s in plan:
        if s.start < first or s.end - 1 > last:
            raise ValueError(
                f"slice {s.slice_id} [{s.start}, {s.end}) outside dataset range"
            )
    out: dict[int, list[SelfLabeledRecord]] = {s.slice_id: [] for s in plan}
    for fund_id in sorted(dataset.series):
        returns = dataset.series[fund_id].returns
        for s in plan:
            window = []
            for month in range(s.start, s.end):
                value = returns.get(month)
                if value is None:
                    break
                window.append(value)
            if len(window) != s.length:
                continue
            features = tuple(window)
            out[s.slice_id].append(
                SelfLabeledRecord(
                    fund_id=fund_id,
                    slice_id=s.slice_id,
                    features=features,
                    label=label_of(features),
                )
            )
    return out
