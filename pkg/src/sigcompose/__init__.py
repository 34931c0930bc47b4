"""Similarity search for monthly-return time series.

Pipeline: slice each fund's return history into windows, self-label every
complete window with its summed return, fit one regression tree per slice,
persist retained-leaf memberships as a flat classification table, and rank
similarity at query time by counting shared leaves across a month range.
"""

from .classification_index import (
    ClassificationRow,
    ClassificationTable,
    build_index,
    dataset_fingerprint,
    index_stats,
    load_index,
    save_index,
)
from .decision_tree import (
    DecisionTree,
    SplitRule,
    TreeNode,
    TreeParams,
    dump_tree,
    fit_tree,
    locate_leaf,
    prune_noisy,
    split_candidates,
)
from .evaluation import (
    CorrelationResult,
    SyntheticSpec,
    cluster_of,
    correlation_matrix,
    generate_synthetic,
    pearson,
    precision_at_k,
    run_cluster_recovery,
)
from .ingestion import (
    Dataset,
    FundMeta,
    ParseError,
    ReturnSeries,
    format_month,
    merge,
    parse_meta,
    parse_month,
    parse_returns,
    serialize_meta,
    serialize_returns,
)
from .search_service import BenefitIndicator, compute_benefits, create_app, serve
from .self_labeling import (
    SelfLabeledRecord,
    Slice,
    SlicePlan,
    build_slice_plan,
    label_of,
    slice_and_label,
)
from .signal_composition import (
    QueryRange,
    SimilarityResult,
    UnknownFundError,
    compose,
    slices_for_range,
    top_k,
)

__version__ = "0.1.0"
