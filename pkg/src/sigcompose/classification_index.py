"""Build and persist the table of classification results.

The pipeline runs once per slice (slice records -> tree -> prune), and the
retained-leaf memberships land in a flat (slice, node, fund) table saved as
a single self-describing text file. The file embeds the slice plan, tree
parameters, and a content fingerprint of the source dataset so a stale or
mismatched index is refused instead of silently queried.
"""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .decision_tree import DecisionTree, TreeParams, fit_tree, prune_noisy
from .ingestion import Dataset, serialize_returns
from .self_labeling import SelfLabeledRecord, Slice, SlicePlan, slice_and_label

logger = logging.getLogger(__name__)

FORMAT_HEADER = "SIGCOMPOSE-INDEX v1"


class IndexFormatError(ValueError):
    """Raised when an index file is unreadable, truncated, or mismatched."""


@dataclass(frozen=True)
class ClassificationRow:
    slice_id: int
    node_name: str
    fund_id: str


@dataclass
class IndexManifest:
    plan: SlicePlan
    params: TreeParams
    dataset_fingerprint: str
    epoch: str
    build_timestamp: str | None = field(default=None, compare=False)


@dataclass
class ClassificationTable:
    rows: list[ClassificationRow]
    manifest: IndexManifest


def dataset_fingerprint(dataset: Dataset) -> str:
    """Content hash of the canonical returns serialization."""
    text = serialize_returns(dataset)
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def _slice_rows(
    records: list[SelfLabeledRecord], params: TreeParams
) -> list[ClassificationRow]:
    tree = prune_noisy(fit_tree(records, params), params.variability_threshold)
    return rows_from_tree(tree)


def rows_from_tree(tree: DecisionTree) -> list[ClassificationRow]:
    """One row per (retained leaf, member fund) of a pruned tree."""
    rows = []
    for leaf in tree.leaves():
        if leaf.pruned:
            continue
        for fund_id, _ in leaf.members:
            rows.append(
                ClassificationRow(
                    slice_id=tree.slice_id, node_name=leaf.name, fund_id=fund_id
                )
            )
    return rows


def build_index(
    dataset: Dataset, plan: SlicePlan, params: TreeParams, workers: int = 1
) -> ClassificationTable:
    """Run the whole classification pipeline and return the immutable table.

    Slices with fewer complete records than min_support contribute no rows
    (logged, not an error). Slice jobs are independent; with workers > 1
    they run in a process pool and are joined before the rows are sorted.
    """
    records_by_slice = slice_and_label(dataset, plan)
    fittable = []
    for slice_id in sorted(records_by_slice):
        records = records_by_slice[slice_id]
        if len(records) < params.min_support:
            logger.warning(
                "slice %d: %d complete records < min_support %d, no rows emitted",
                slice_id,
                len(records),
                params.min_support,
            )
            continue
        fittable.append(records)

    rows: list[ClassificationRow] = []
    if workers > 1 and len(fittable) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for slice_rows in pool.map(_slice_rows, fittable, [params] * len(fittable)):
                rows.extend(slice_rows)
    else:
        for records in fittable:
            rows.extend(_slice_rows(records, params))

    rows.sort(key=lambda r: (r.slice_id, r.node_name, r.fund_id))
    manifest = IndexManifest(
        plan=plan,
        params=params,
        dataset_fingerprint=dataset_fingerprint(dataset),
        epoch=dataset.epoch,
        build_timestamp=datetime.now(timezone.utc).isoformat(),
    )
    return ClassificationTable(rows=rows, manifest=manifest)


def serialize_index(table: ClassificationTable) -> str:
    """Render the index file; byte-stable for equal tables.

    The build timestamp is deliberately not persisted: rebuilding from the
    same fingerprinted inputs must produce byte-identical files.
    """
    m = table.manifest
    lines = [FORMAT_HEADER]
    for s in m.plan:
        lines.append(f"slice:{s.slice_id}:{s.start}:{s.length}")
    lines.append(f"penalty={m.params.complexity_penalty!r}")
    lines.append(f"min_support={m.params.min_support}")
    lines.append(f"split_mode={m.params.split_mode}")
    lines.append(f"variability_threshold={m.params.variability_threshold!r}")
    lines.append(f"fingerprint={m.dataset_fingerprint}")
    lines.append(f"epoch={m.epoch}")
    lines.append(f"rows={len(table.rows)}")
    lines.append("")
    for row in table.rows:
        if "\n" in row.fund_id or "\r" in row.fund_id:
            raise ValueError(f"fund id {row.fund_id!r} cannot be persisted")
        lines.append(f"{row.slice_id},{row.node_name},{row.fund_id}")
    return "\n".join(lines) + "\n"


def save_index(table: ClassificationTable, destination: str | Path) -> None:
    Path(destination).write_text(serialize_index(table), encoding="utf-8")


def parse_index(text: str) -> ClassificationTable:
    """Inverse of :func:`serialize_index`, with defect-naming errors."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != FORMAT_HEADER:
        got = lines[0] if lines else "<empty file>"
        raise IndexFormatError(f"unsupported index version: expected "
                               f"{FORMAT_HEADER!r}, got {got!r}")

    slices: list[Slice] = []
    manifest_values: dict[str, str] = {}
    cursor = 1
    while cursor < len(lines):
        line = lines[cursor]
        cursor += 1
        if line == "":
            break
        if line.startswith("slice:"):
            parts = line.split(":")
            if len(parts) != 4:
                raise IndexFormatError(f"line {cursor}: malformed slice entry {line!r}")
            try:
                slices.append(
                    Slice(
                        slice_id=int(parts[1]),
                        start=int(parts[2]),
                        length=int(parts[3]),
                    )
                )
            except ValueError:
                raise IndexFormatError(
                    f"line {cursor}: malformed slice entry {line!r}"
                ) from None
            continue
        if "=" not in line:
            raise IndexFormatError(f"line {cursor}: malformed manifest line {line!r}")
        key, value = line.split("=", 1)
        manifest_values[key] = value
    else:
        raise IndexFormatError("manifest not terminated by a blank line")

    if not slices:
        raise IndexFormatError("manifest missing slice plan")
    for key in ("penalty", "min_support", "split_mode",
                "variability_threshold", "fingerprint", "epoch", "rows"):
        if key not in manifest_values:
            raise IndexFormatError(f"manifest missing {key}")
    try:
        params = TreeParams(
            complexity_penalty=float(manifest_values["penalty"]),
            min_support=int(manifest_values["min_support"]),
            split_mode=manifest_values["split_mode"],
            variability_threshold=float(manifest_values["variability_threshold"]),
        )
        expected_rows = int(manifest_values["rows"])
    except ValueError as exc:
        raise IndexFormatError(f"malformed manifest value: {exc}") from None

    plan = SlicePlan(slices=tuple(slices))
    plan_ids = {s.slice_id for s in plan}

    rows: list[ClassificationRow] = []
    seen: set[tuple[int, str, str]] = set()
    for offset, line in enumerate(lines[cursor:]):
        lineno = cursor + offset + 1
        parts = line.split(",", 2)
        if len(parts) != 3:
            raise IndexFormatError(f"line {lineno}: corrupted row {line!r}")
        try:
            slice_id = int(parts[0])
        except ValueError:
            raise IndexFormatError(
                f"line {lineno}: corrupted row {line!r}"
            ) from None
        if slice_id not in plan_ids:
            raise IndexFormatError(
                f"line {lineno}: row references unknown slice {slice_id}"
            )
        key = (slice_id, parts[1], parts[2])
        if key in seen:
            raise IndexFormatError(f"line {lineno}: duplicate row {line!r}")
        seen.add(key)
        rows.append(
            ClassificationRow(slice_id=slice_id, node_name=parts[1], fund_id=parts[2])
        )
    if len(rows) < expected_rows:
        raise IndexFormatError(
            f"unexpected end of rows: expected {expected_rows}, got {len(rows)}"
        )
    if len(rows) > expected_rows:
        raise IndexFormatError(
            f"trailing data: expected {expected_rows} rows, got {len(rows)}"
        )

    manifest = IndexManifest(
        plan=plan,
        params=params,
        dataset_fingerprint=manifest_values["fingerprint"],
        epoch=manifest_values["epoch"],
    )
    return ClassificationTable(rows=rows, manifest=manifest)


def load_index(source: str | Path) -> ClassificationTable:
    return parse_index(Path(source).read_text(encoding="utf-8"))


def index_stats(table: ClassificationTable) -> dict:
    """Exact row/slice/fund counts plus distinct leaves per slice."""
    leaves_per_slice: dict[int, set[str]] = {}
    funds: set[str] = set()
    for row in table.rows:
        leaves_per_slice.setdefault(row.slice_id, set()).add(row.node_name)
        funds.add(row.fund_id)
    return {
        "row_count": len(table.rows),
        "slices_covered": len(leaves_per_slice),
        "funds_covered": len(funds),
        "leaves_per_slice": {
            s: len(names) for s, names in sorted(leaves_per_slice.items())
        },
    }
