"""Agglomerative hierarchical clustering with the Ward.D2 merge rule.

The merge loop is the hot kernel when trees are built for a whole mimicry
ensemble, so it lives in a compiled extension with a pure-NumPy fallback;
the backend is chosen once at import. Set TREEMIMIC_PURE=1 to force the
fallback (used by the benchmark to compare the two).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .distance import DistanceMatrix

if os.environ.get("TREEMIMIC_PURE") == "1":
    from . import _ward_py as _kernel

    _BACKEND = "python"
else:
    try:
        from . import _ward_cy as _kernel  # type: ignore[no-redef]

        _BACKEND = "compiled"
    except ImportError:
        from . import _ward_py as _kernel  # type: ignore[no-redef]

        _BACKEND = "python"

__all__ = ["Dendrogram", "ward_d2", "leaf_order", "cut", "backend"]

#: merge heights may dip below the previous one by FP rounding only
HEIGHT_TOL = 1e-9


def backend() -> str:
    """Name of the agglomeration kernel in use: 'compiled' or 'python'."""
    return _BACKEND


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """Strictly binary merge tree over K leaves.

    Nodes are numbered: leaves 0..K-1, internal nodes K..2K-2 in merge
    order. Merge t joins ``left[t]`` and ``right[t]`` at ``heights[t]``
    into node K+t of leaf count ``sizes[t]``. The left child is the one
    whose subtree contains the smaller minimum original leaf index; this
    orientation is what the binary coding relies on.
    """

    n_leaves: int
    left: np.ndarray
    right: np.ndarray
    heights: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        k = self.n_leaves
        if k < 2:
            raise ValueError("need at least 2 leaves")
        left = np.asarray(self.left, dtype=np.int64)
        right = np.asarray(self.right, dtype=np.int64)
        heights = np.asarray(self.heights, dtype=np.float64)
        sizes = np.asarray(self.sizes, dtype=np.int64)
        if not (left.shape == right.shape == heights.shape == sizes.shape == (k - 1,)):
            raise ValueError("expected exactly K-1 merge records")
        if np.any(heights < 0) or not np.all(np.isfinite(heights)):
            raise ValueError("heights must be finite and nonnegative")
        if np.any(np.diff(heights) < -HEIGHT_TOL * np.maximum(heights[:-1], 1.0)):
            raise ValueError("merge heights must be non-decreasing")

        node_size = np.ones(2 * k - 1, dtype=np.int64)
        seen = np.zeros(2 * k - 1, dtype=bool)
        for t in range(k - 1):
            a, b = int(left[t]), int(right[t])
            for child in (a, b):
                if not 0 <= child < k + t:
                    raise ValueError(f"merge {t} references invalid node {child}")
                if seen[child]:
                    raise ValueError(f"node {child} has two parents")
                seen[child] = True
            node_size[k + t] = node_size[a] + node_size[b]
            if node_size[k + t] != sizes[t]:
                raise ValueError(f"merge {t} size mismatch")
        if sizes[-1] != k:
            raise ValueError("root must cover all leaves")
        for arr in (left, right, heights, sizes):
            arr.setflags(write=False)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "sizes", sizes)

    @property
    def root(self) -> int:
        return 2 * self.n_leaves - 2


def _as_values(dm: DistanceMatrix | np.ndarray) -> tuple[np.ndarray, bool | None]:
    if isinstance(dm, DistanceMatrix):
        return dm.values, dm.measure == "dstar"
    v = np.asarray(dm, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ValueError("need a square matrix")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise ValueError("distances must be finite and nonnegative")
    if not np.array_equal(v, v.T):
        raise ValueError("distance matrix must be symmetric")
    return v, None


def ward_d2(dm: DistanceMatrix | np.ndarray, assume_squared: bool | None = None) -> Dendrogram:
    """Cluster a dissimilarity matrix into a strictly binary dendrogram.

    At each step the active pair with the minimal current dissimilarity is
    merged, and dissimilarities to the new cluster follow the Lance-Williams
    Ward.D2 update on squared values. With ``assume_squared`` the input is
    taken to be already squared (the dstar convention) and heights are
    reported on that scale; otherwise entries are squared on entry and
    heights are reported as square roots (the d0 convention). Ties are
    broken toward the pair whose clusters have the lexicographically
    smallest minimum original leaf indices, which keeps mimicked trees
    reproducible when small counts produce exact ties.
    """
    values, inferred = _as_values(dm)
    if assume_squared is None:
        assume_squared = False if inferred is None else inferred
    k = values.shape[0]
    if k < 2:
        raise ValueError("need at least 2 populations")
    work = np.array(values if assume_squared else values * values, dtype=np.float64, order="C")
    left, right, heights_sq, sizes = _kernel.ward_merge(work)
    heights = heights_sq if assume_squared else np.sqrt(np.maximum(heights_sq, 0.0))
    # FP rounding can leave a later merge a few ulps below its predecessor
    heights = np.maximum.accumulate(heights)
    return Dendrogram(k, left, right, heights, sizes)


def leaf_order(d: Dendrogram) -> np.ndarray:
    """Leaves in in-order traversal (left child first at every node)."""
    k = d.n_leaves
    order = np.empty(k, dtype=np.int64)
    pos = 0
    stack = [d.root]
    while stack:
        node = stack.pop()
        if node < k:
            order[pos] = node
            pos += 1
        else:
            t = node - k
            stack.append(int(d.right[t]))
            stack.append(int(d.left[t]))
    return order


def cut(d: Dendrogram, g: int) -> np.ndarray:
    """Labels 1..g from removing the g-1 highest merges.

    Components are numbered by first appearance in leaf order, so label 1
    is the topmost block of a heatmap ordered by this tree.
    """
    k = d.n_leaves
    if not 1 <= g <= k:
        raise ValueError(f"cluster count must be in 1..{k}, got {g}")
    parent = np.arange(k, dtype=np.int64)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    # a representative leaf for every node, so merges can be unioned
    rep = np.empty(2 * k - 1, dtype=np.int64)
    rep[:k] = np.arange(k)
    for t in range(k - 1):
        rep[k + t] = rep[d.left[t]]
    for t in range(k - 1 - (g - 1)):
        a, b = find(int(rep[d.left[t]])), find(int(rep[d.right[t]]))
        parent[a] = b

    labels = np.zeros(k, dtype=np.int64)
    next_label = 1
    assigned: dict[int, int] = {}
    for leaf in leaf_order(d):
        root = find(int(leaf))
        if root not in assigned:
            assigned[root] = next_label
            next_label += 1
        labels[leaf] = assigned[root]
    return labels
