"""Heatmap-ready ordered matrices and column-block uniformness scores.

Superimposing the tree on the matrix's row axis means permuting rows into
leaf order; a cut of the tree then frames contiguous row blocks. The
uniformness score is the within-cluster total variation per column: lower
means visually cleaner blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hclust import Dendrogram, cut, leaf_order
from .matrix import ProportionMatrix

__all__ = ["HeatmapBundle", "UniformnessScores", "heatmap_export", "uniformness"]


@dataclass(frozen=True, eq=False)
class HeatmapBundle:
    """Everything a plotting layer needs to draw tree + ordered matrix.

    ``row_order`` permutes original rows into display order;
    ``boundaries`` gives the display-row offsets at which each of the g
    contiguous cluster blocks begins (the first is always 0).
    """

    row_order: np.ndarray
    ordered_props: np.ndarray
    boundaries: tuple[int, ...]
    cluster_labels: np.ndarray
    column_bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        order = np.asarray(self.row_order, dtype=np.int64)
        k = order.shape[0]
        if sorted(order.tolist()) != list(range(k)):
            raise ValueError("row_order must be a permutation")
        if self.ordered_props.shape[0] != k:
            raise ValueError("ordered grid row count does not match permutation")
        if not self.boundaries or self.boundaries[0] != 0:
            raise ValueError("boundaries must start at offset 0")
        if list(self.boundaries) != sorted(set(self.boundaries)) or self.boundaries[-1] >= k:
            raise ValueError("boundaries must be increasing offsets below K")


def heatmap_export(pm: ProportionMatrix, d: Dendrogram, g: int) -> HeatmapBundle:
    """Permute rows into leaf order and frame the g-cluster boundaries."""
    if d.n_leaves != pm.n_populations:
        raise ValueError("tree and matrix disagree on population count")
    order = leaf_order(d)
    labels = cut(d, g)
    ordered = pm.props[order]
    in_order = labels[order]
    starts = [0] + [i for i in range(1, len(order)) if in_order[i] != in_order[i - 1]]
    bounds = tuple(
        (float(pm.props[:, m].min()), float(pm.props[:, m].max()))
        for m in range(pm.n_categories)
    )
    return HeatmapBundle(
        row_order=order,
        ordered_props=ordered,
        boundaries=tuple(starts),
        cluster_labels=labels,
        column_bounds=bounds,
    )


@dataclass(frozen=True, eq=False)
class UniformnessScores:
    per_column: np.ndarray
    total: float


def uniformness(pm: ProportionMatrix, labels: np.ndarray) -> UniformnessScores:
    """Within-cluster total variation, per column and summed.

    For each column m: sum over clusters of sum over members of
    (p_km - cluster mean of column m)^2. Zero when every cluster is
    constant per column; equals the total column variation when all rows
    share one cluster.
    """
    labels = np.asarray(labels)
    if labels.shape != (pm.n_populations,):
        raise ValueError("need one cluster label per population")
    per_col = np.zeros(pm.n_categories)
    for lab in np.unique(labels):
        sub = pm.props[labels == lab]
        centered = sub - sub.mean(axis=0)
        per_col += (centered * centered).sum(axis=0)
    return UniformnessScores(per_column=per_col, total=float(per_col.sum()))
