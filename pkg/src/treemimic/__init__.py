"""treemimic: population clustering trees for categorical count data,
with mimicry-ensemble reliability scoring.

The pipeline: a K x M count matrix becomes a proportion matrix; pairwise
d0 or variance-weighted dstar distances feed Ward.D2 clustering into a
strictly binary tree; leaves are binary-coded so branches are code
prefixes; a multinomial mimicry ensemble of the matrix yields an ensemble
of trees; and any observed pattern's reliability is its recurrence rate
across that ensemble.
"""

__version__ = "0.1.0"

from .codes import CodeTable, encode, is_standalone, minimal_containing_branch
from .distance import DistanceMatrix, distance_matrix, euclid, weighted
from .hclust import Dendrogram, cut, leaf_order, ward_d2
from .matrix import (
    BlockedCountMatrix,
    CountMatrix,
    ProportionMatrix,
    VarianceMatrix,
    empirical_variance,
    load_blocked_counts,
    load_counts,
    theoretical_covariance,
    theoretical_variance,
    to_proportions,
)
from .mimicry import (
    MeasureConfig,
    MimicryEnsemble,
    build_ensemble,
    mimic_blocked,
    mimic_homogeneous,
    sample_multinomial,
)
from .reliability import (
    PatternQuery,
    ReliabilityReport,
    depth_size_summary,
    evaluate_group,
    evaluate_separation,
)
from .report import HeatmapBundle, heatmap_export, uniformness

__all__ = [
    "__version__",
    "BlockedCountMatrix",
    "CodeTable",
    "CountMatrix",
    "Dendrogram",
    "DistanceMatrix",
    "HeatmapBundle",
    "MeasureConfig",
    "MimicryEnsemble",
    "PatternQuery",
    "ProportionMatrix",
    "ReliabilityReport",
    "VarianceMatrix",
    "build_ensemble",
    "cut",
    "depth_size_summary",
    "distance_matrix",
    "empirical_variance",
    "encode",
    "euclid",
    "evaluate_group",
    "evaluate_separation",
    "heatmap_export",
    "is_standalone",
    "leaf_order",
    "load_blocked_counts",
    "load_counts",
    "mimic_blocked",
    "mimic_homogeneous",
    "minimal_containing_branch",
    "sample_multinomial",
    "theoretical_covariance",
    "theoretical_variance",
    "to_proportions",
    "uniformness",
    "ward_d2",
    "weighted",
]
