"""Per-slice regression trees on self-labeled return windows.

Growth is greedy: at each node every candidate split is scored by the
reduction in sum-of-squared label deviations (SSE), and the best split is
accepted only when both children keep minimum support and the normalized
gain clears the complexity penalty. Leaves whose label spread exceeds the
variability threshold are pruned as noisy and never reach the index.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

from .self_labeling import SelfLabeledRecord

SPLIT_MODES = ("threshold", "interval")


@dataclass(frozen=True)
class TreeParams:
    complexity_penalty: float = 0.0
    min_support: int = 2
    split_mode: str = "threshold"
    variability_threshold: float = 2.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.complexity_penalty < 1.0:
            raise ValueError(
                f"complexity_penalty must be in [0, 1), got {self.complexity_penalty}"
            )
        if self.min_support < 2:
            raise ValueError(f"min_support must be >= 2, got {self.min_support}")
        if self.split_mode not in SPLIT_MODES:
            raise ValueError(f"split_mode must be one of {SPLIT_MODES}")


@dataclass(frozen=True)
class SplitRule:
    """Two-way rule on one feature; 'inside' is < cut, or within [low, high).

    A value equal to the cut (or to the interval's high bound) goes outside,
    matching the ">= ... and < ..." reading of the rule grammar.
    """

    feature_index: int
    kind: str  # "threshold" or "interval"
    cut: float | None = None
    low: float | None = None
    high: float | None = None

    def is_inside(self, value: float) -> bool:
        if self.kind == "threshold":
            return value < self.cut
        return self.low <= value < self.high


@dataclass
class TreeNode:
    name: str
    members: list[tuple[str, float]]
    rule: SplitRule | None = None
    children: list["TreeNode"] = field(default_factory=list)
    pruned: bool = False

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def label_range(self) -> tuple[float, float]:
        labels = [label for _, label in self.members]
        return min(labels), max(labels)


@dataclass
class DecisionTree:
    slice_id: int
    root: TreeNode
    params: TreeParams
    sse_root: float
    h: int

    def walk(self) -> Iterator[TreeNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> list[TreeNode]:
        return [node for node in self.walk() if node.is_leaf]

    def n_splits(self) -> int:
        return sum(1 for node in self.walk() if node.rule is not None)


def _sse(labels: Sequence[float]) -> float:
    mean = sum(labels) / len(labels)
    return sum((y - mean) ** 2 for y in labels)


def split_candidates(
    records: Sequence[SelfLabeledRecord], feature_index: int, mode: str
) -> list[SplitRule]:
    """Enumerate candidate rules for one feature.

    Threshold mode cuts at midpoints between consecutive distinct values;
    interval mode takes every (low, high) midpoint pair with low < high.
    Identical values yield no candidates.
    """
    if len(records) < 2:
        raise ValueError("need at least 2 records to enumerate splits")
    if mode not in SPLIT_MODES:
        raise ValueError(f"unknown split mode {mode!r}")
    values = sorted({r.features[feature_index] for r in records})
    midpoints = [(a + b) / 2.0 for a, b in zip(values, values[1:])]
    if mode == "threshold":
        return [
            SplitRule(feature_index=feature_index, kind="threshold", cut=c)
            for c in midpoints
        ]
    return [
        SplitRule(feature_index=feature_index, kind="interval", low=lo, high=hi)
        for i, lo in enumerate(midpoints)
        for hi in midpoints[i + 1 :]
    ]


def _best_split(
    records: Sequence[SelfLabeledRecord], params: TreeParams, h: int
) -> tuple[SplitRule, list[SelfLabeledRecord], list[SelfLabeledRecord], float] | None:
    """Best admissible split by SSE reduction, or None.

    Candidates are scanned in (feature_index, cut/low, high) order and a
    candidate replaces the incumbent only on strictly larger gain, which
    realizes the deterministic tie-break.
    """
    parent_sse = _sse([r.label for r in records])
    best = None
    best_gain = -1.0
    for feature_index in range(h):
        for rule in split_candidates(records, feature_index, params.split_mode):
            inside = [r for r in records if rule.is_inside(r.features[feature_index])]
            if (
                len(inside) < params.min_support
                or len(records) - len(inside) < params.min_support
            ):
                continue
            outside = [
                r for r in records if not rule.is_inside(r.features[feature_index])
            ]
            gain = parent_sse - (
                _sse([r.label for r in inside]) + _sse([r.label for r in outside])
            )
            if gain > best_gain:
                best_gain = gain
                best = (rule, inside, outside)
    if best is None:
        return None
    return best[0], best[1], best[2], best_gain


def fit_tree(records: Sequence[SelfLabeledRecord], params: TreeParams) -> DecisionTree:
    """Fit one regression tree on the records of a single slice.

    Deterministic for identical inputs: record order is preserved into
    member lists and tie-breaks are fixed, so two fits produce
    byte-identical node names and memberships.
    """
    if len(records) < params.min_support:
        raise ValueError(
            f"need at least min_support={params.min_support} records, got {len(records)}"
        )
    slice_id = records[0].slice_id
    h = len(records[0].features)
    for r in records:
        if r.slice_id != slice_id:
            raise ValueError("records mix slice ids")
        if len(r.features) != h:
            raise ValueError("records mix feature lengths")

    sse_root = _sse([r.label for r in records])

    def grow(node_records: list[SelfLabeledRecord], name: str) -> TreeNode:
        node = TreeNode(
            name=name, members=[(r.fund_id, r.label) for r in node_records]
        )
        if sse_root == 0.0:
            return node
        found = _best_split(node_records, params, h)
        if found is None:
            return node
        rule, inside, outside, gain = found
        if gain / sse_root <= params.complexity_penalty:
            return node
        node.rule = rule
        node.children = [grow(inside, name + "/in"), grow(outside, name + "/out")]
        return node

    root = grow(list(records), f"S{slice_id}")
    return DecisionTree(
        slice_id=slice_id, root=root, params=params, sse_root=sse_root, h=h
    )


def locate_leaf(tree: DecisionTree, features: Sequence[float]) -> str:
    """Follow the tree's rules down from the root; returns the leaf's name."""
    if len(features) != tree.h:
        raise ValueError(f"expected {tree.h} features, got {len(features)}")
    node = tree.root
    while node.rule is not None:
        value = features[node.rule.feature_index]
        node = node.children[0] if node.rule.is_inside(value) else node.children[1]
    return node.name


def prune_noisy(tree: DecisionTree, variability_threshold: float) -> DecisionTree:
    """Mark leaves whose label range exceeds the threshold as pruned.

    Structure is unchanged; pruned leaves are simply excluded downstream
    when the classification table is emitted.
    """

    def rebuild(node: TreeNode) -> TreeNode:
        if node.is_leaf:
            lo, hi = node.label_range()
            return TreeNode(
                name=node.name,
                members=list(node.members),
                pruned=(hi - lo) > variability_threshold,
            )
        return TreeNode(
            name=node.name,
            members=list(node.members),
            rule=node.rule,
            children=[rebuild(child) for child in node.children],
        )

    return replace(tree, root=rebuild(tree.root))


def dump_tree(tree: DecisionTree) -> str:
    """Indented one-node-per-line debug rendering of the tree."""
    lines: list[str] = []

    def visit(node: TreeNode, depth: int) -> None:
        lo, hi = node.label_range()
        parts = [f"{node.name} n={len(node.members)} label_range={lo!r}..{hi!r}"]
        if node.rule is not None:
            r = node.rule
            if r.kind == "threshold":
                parts.append(f"rule: f{r.feature_index} threshold cut={r.cut!r}")
            else:
                parts.append(
                    f"rule: f{r.feature_index} interval low={r.low!r} high={r.high!r}"
                )
        if node.pruned:
            parts.append("PRUNED")
        lines.append("  " * depth + " ".join(parts))
        for child in node.children:
            visit(child, depth + 1)

    visit(tree.root, 0)
    return "\n".join(lines) + "\n"
