"""Correlation-based validation of search quality.

The original vendor dataset behind the reported experiments is not
available, so quantitative checks run on a synthetic clustered-fund
generator instead: funds within a cluster share a Gaussian factor series
plus independent noise, giving a known ground truth and a tunable
intra-cluster correlation. Pearson r and precision@k quantify how well
composition queries recover the clusters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .decision_tree import TreeParams
from .ingestion import TRAILING_KEYS, Dataset, FundMeta, ReturnSeries
from .self_labeling import build_slice_plan

GENERATOR_NAME = "numpy-pcg64"

_DOMICILES = (
    "United States",
    "Cayman Islands",
    "Switzerland",
    "Jersey",
    "Netherlands Antilles",
)


@dataclass(frozen=True)
class CorrelationResult:
    fund_a: str
    fund_b: str
    r: float | None
    months_used: int


def pearson(
    series_a: ReturnSeries,
    series_b: ReturnSeries,
    month_range: tuple[int, int] | None = None,
) -> CorrelationResult:
    """Product-moment correlation over the months present in both series.

    r is absent when fewer than 3 common months exist or either series has
    zero variance over them. The result is clamped to [-1, 1]; identical
    and exactly negated series come out as exactly +1.0 and -1.0.
    """
    common = set(series_a.returns) & set(series_b.returns)
    if month_range is not None:
        lo, hi = month_range
        common = {m for m in common if lo <= m <= hi}
    months = sorted(common)
    if len(months) < 3:
        return CorrelationResult(series_a.fund_id, series_b.fund_id, None, len(months))
    x = [series_a.returns[m] for m in months]
    y = [series_b.returns[m] for m in months]
    n = len(months)
    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    dx = [v - mean_x for v in x]
    dy = [v - mean_y for v in y]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        return CorrelationResult(series_a.fund_id, series_b.fund_id, None, n)
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    return CorrelationResult(series_a.fund_id, series_b.fund_id, r, n)


def correlation_matrix(
    fund_ids: Sequence[str],
    dataset: Dataset,
    month_range: tuple[int, int] | None = None,
) -> dict[str, dict[str, float | None]]:
    """Symmetric matrix of pairwise r with a unit diagonal where defined."""
    if len(fund_ids) < 2:
        raise ValueError("need at least 2 funds for a correlation matrix")
    matrix: dict[str, dict[str, float | None]] = {f: {} for f in fund_ids}
    for i, a in enumerate(fund_ids):
        for b in fund_ids[i:]:
            r = pearson(dataset.series[a], dataset.series[b], month_range).r
            matrix[a][b] = r
            matrix[b][a] = r
    return matrix


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the clustered-fund generator; same seed, same dataset."""

    clusters: int = 5
    funds_per_cluster: int = 20
    months: int = 60
    factor_volatility: float = 3.0
    noise_volatility: float = 2.0
    seed: int = 7

    def __post_init__(self) -> None:
        if self.clusters < 1 or self.funds_per_cluster < 1 or self.months < 1:
            raise ValueError("clusters, funds_per_cluster, and months must be >= 1")
        if self.factor_volatility < 0 or self.noise_volatility < 0:
            raise ValueError("volatilities must be >= 0")

    def fund_id(self, cluster: int, index: int) -> str:
        return f"C{cluster:02d}F{index:03d}"


def cluster_of(fund_id: str) -> int:
    """Ground-truth cluster encoded in a synthetic fund id."""
    if not fund_id.startswith("C") or "F" not in fund_id:
        raise ValueError(f"not a synthetic fund id: {fund_id!r}")
    return int(fund_id[1 : fund_id.index("F")])


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Deterministic clustered dataset: return = cluster factor + own noise.

    Intra-cluster correlation is fv^2 / (fv^2 + nv^2) by construction
    (~0.69 at the defaults). Metadata fields are drawn from the same seeded
    generator so generated files are byte-stable run to run.
    """
    rng = np.random.default_rng(spec.seed)
    factors = rng.normal(0.0, spec.factor_volatility, (spec.clusters, spec.months))
    noise = rng.normal(
        0.0,
        spec.noise_volatility,
        (spec.clusters, spec.funds_per_cluster, spec.months),
    )
    values = np.round(factors[:, None, :] + noise, 4)

    series: dict[str, ReturnSeries] = {}
    meta: dict[str, FundMeta] = {}
    for c in range(spec.clusters):
        for i in range(spec.funds_per_cluster):
            fund_id = spec.fund_id(c, i)
            series[fund_id] = ReturnSeries(
                fund_id=fund_id,
                returns={m: float(values[c, i, m]) for m in range(spec.months)},
            )
            meta[fund_id] = FundMeta(
                fund_id=fund_id,
                name=f"Cluster {c} Fund {i:03d}",
                category=f"Synthetic Cluster {c}",
                domicile=_DOMICILES[c % len(_DOMICILES)],
                management_fee=round(float(rng.uniform(0.5, 2.5)), 2),
                performance_fee=round(float(rng.uniform(10.0, 25.0)), 1),
                redemption_fee=round(float(rng.uniform(0.0, 2.0)), 2),
                sharpe_ratio=round(float(rng.uniform(-0.5, 2.5)), 2),
                trailing_returns={
                    k: round(float(rng.uniform(-5.0, 12.0)), 2) for k in TRAILING_KEYS
                },
            )
    return Dataset(series=series, meta=meta, month_range=(0, spec.months - 1))


def precision_at_k(
    results: Sequence,
    query_fund: str,
    ground_truth_cluster_of: Callable[[str], int],
    k: int,
) -> float:
    """Fraction of the top-k ranked results in the query fund's cluster."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    top = results[:k]
    if not top:
        return 0.0
    query_cluster = ground_truth_cluster_of(query_fund)
    hits = sum(
        1 for res in top if ground_truth_cluster_of(res.fund_id) == query_cluster
    )
    return hits / len(top)


@dataclass
class QueryReport:
    query_fund: str
    precision: float
    # (rank, fund_id, counter, r, cluster_match) for the top-k results
    rows: list[tuple[int, str, int, float | None, bool]]


@dataclass
class ClusterRecoveryReport:
    spec: SyntheticSpec
    params: TreeParams
    k: int
    slice_length: int
    queries: list[QueryReport]
    mean_precision: float
    mean_r_top3: float | None
    mean_r_random: float | None
    margin: float | None
    baseline_precision: float
    flagged: bool = False
    generator: str = GENERATOR_NAME

    def to_text(self) -> str:
        s, p = self.spec, self.params
        lines = [
            "# sigcompose evaluation report",
            f"# generator={self.generator} seed={s.seed} clusters={s.clusters} "
            f"funds_per_cluster={s.funds_per_cluster} months={s.months} "
            f"factor_volatility={s.factor_volatility} "
            f"noise_volatility={s.noise_volatility}",
            f"# params: penalty={p.complexity_penalty} min_support={p.min_support} "
            f"split_mode={p.split_mode} "
            f"variability_threshold={p.variability_threshold} "
            f"slice_length={self.slice_length}",
        ]
        for q in self.queries:
            lines.append(f"query={q.query_fund} precision@{self.k}={q.precision:.4f}")
            lines.append("rank,fund_id,counter,r,cluster_match")
            for rank, fund_id, counter, r, match in q.rows:
                r_text = "" if r is None else f"{r:.6f}"
                lines.append(
                    f"{rank},{fund_id},{counter},{r_text},{'yes' if match else 'no'}"
                )
        mean_top3 = "" if self.mean_r_top3 is None else f"{self.mean_r_top3:.6f}"
        mean_rand = "" if self.mean_r_random is None else f"{self.mean_r_random:.6f}"
        margin = "" if self.margin is None else f"{self.margin:.6f}"
        lines.append(
            f"aggregate: queries={len(self.queries)} "
            f"precision@{self.k}={self.mean_precision:.4f} "
            f"mean_r_top3={mean_top3} mean_r_random={mean_rand} margin={margin}"
        )
        if self.flagged:
            lines.append(
                f"flag: precision near uniform baseline "
                f"{self.baseline_precision:.4f}; no cluster structure recovered"
            )
        return "\n".join(lines) + "\n"


def run_cluster_recovery(
    spec: SyntheticSpec,
    params: TreeParams | None = None,
    slice_length: int = 6,
    k: int = 5,
) -> ClusterRecoveryReport:
    """Generate, build, query every fund, and score cluster recovery.

    For each query: precision@k against ground truth, mean r to the top-3
    results, and mean r to 3 uniformly drawn other funds as the baseline.
    """
    # imported here: signal_composition pulls pearson from this module
    from .classification_index import build_index
    from .signal_composition import QueryRange, compose

    if params is None:
        # labels are multi-month sums, so leaf spreads run far wider than
        # for single returns; the generic 2.0 default over-prunes here
        params = TreeParams(variability_threshold=5.0)
    dataset = generate_synthetic(spec)
    plan = build_slice_plan(dataset.month_range, slice_length)
    table = build_index(dataset, plan, params)
    query_range = QueryRange(dataset.month_range[0], dataset.month_range[1])

    all_funds = sorted(dataset.series)
    pair_rng = np.random.default_rng((spec.seed, 1))
    top3_rs: list[float] = []
    random_rs: list[float] = []
    queries: list[QueryReport] = []
    for fund_id in all_funds:
        results = compose(table, dataset, fund_id, query_range)
        prec = precision_at_k(results, fund_id, cluster_of, k)
        rows = []
        query_cluster = cluster_of(fund_id)
        for rank, res in enumerate(results[:k], start=1):
            rows.append(
                (
                    rank,
                    res.fund_id,
                    res.counter,
                    res.tiebreak_correlation,
                    cluster_of(res.fund_id) == query_cluster,
                )
            )
        queries.append(QueryReport(query_fund=fund_id, precision=prec, rows=rows))
        for res in results[:3]:
            if res.tiebreak_correlation is not None:
                top3_rs.append(res.tiebreak_correlation)
        others = [f for f in all_funds if f != fund_id]
        picks = pair_rng.choice(len(others), size=min(3, len(others)), replace=False)
        for j in sorted(int(v) for v in picks):
            r = pearson(
                dataset.series[fund_id],
                dataset.series[others[j]],
                dataset.month_range,
            ).r
            if r is not None:
                random_rs.append(r)

    mean_precision = (
        sum(q.precision for q in queries) / len(queries) if queries else 0.0
    )
    mean_r_top3 = sum(top3_rs) / len(top3_rs) if top3_rs else None
    mean_r_random = sum(random_rs) / len(random_rs) if random_rs else None
    margin = (
        mean_r_top3 - mean_r_random
        if mean_r_top3 is not None and mean_r_random is not None
        else None
    )
    baseline = 1.0 / spec.clusters
    return ClusterRecoveryReport(
        spec=spec,
        params=params,
        k=k,
        slice_length=slice_length,
        queries=queries,
        mean_precision=mean_precision,
        mean_r_top3=mean_r_top3,
        mean_r_random=mean_r_random,
        margin=margin,
        baseline_precision=baseline,
        flagged=mean_precision <= baseline + 0.05,
    )
