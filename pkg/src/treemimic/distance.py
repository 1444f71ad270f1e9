"""Distances between proportion rows: plain Euclidean and variance-weighted.

``d0`` is the Euclidean distance in R^M. ``dstar`` rescales each squared
component difference by the summed mimicking variances of the two cells,
making discrepancies comparable across categories and across populations
with heterogeneous totals. dstar is a squared-form quantity (no outer
square root) and is consumed as such by the clustering step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import ProportionMatrix, VarianceMatrix, csv_text

__all__ = [
    "DEFAULT_FLOOR",
    "DistanceMatrix",
    "euclid",
    "weighted",
    "distance_matrix",
    "render_distance_csv",
    "render_distance_meta",
]

#: Lower clamp for dstar denominators. Both variances vanish when both
#: proportions are 0 or 1, where the weighted distance is undefined; the
#: clamp keeps the division finite while preserving the instability that
#: near-zero cells genuinely cause.
DEFAULT_FLOOR = 1e-9

MEASURES = ("d0", "dstar")


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric K x K dissimilarities with the measure that produced them."""

    values: np.ndarray
    measure: str
    population_ids: tuple[str, ...]
    floor: float | None = None

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"unknown measure {self.measure!r}")
        v = np.asarray(self.values, dtype=np.float64)
        k = len(self.population_ids)
        if v.shape != (k, k):
            raise ValueError("distance matrix shape does not match labels")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("distances must be finite and nonnegative")
        if np.any(np.diagonal(v) != 0):
            raise ValueError("diagonal must be zero")
        if not np.array_equal(v, v.T):
            raise ValueError("distance matrix must be symmetric")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "population_ids", tuple(self.population_ids))

    @property
    def n_populations(self) -> int:
        return self.values.shape[0]


def euclid(p: np.ndarray, q: np.ndarray) -> float:
    """Euclidean distance between two equal-length vectors."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("vectors must be 1-D and of equal length")
    d = p - q
    return float(np.sqrt((d * d).sum()))


def weighted(
    p: np.ndarray,
    q: np.ndarray,
    var_p: np.ndarray,
    var_q: np.ndarray,
    floor: float = DEFAULT_FLOOR,
) -> float:
    """Variance-weighted squared discrepancy between two proportion rows.

    Each component contributes (p_m - q_m)^2 / max(var_p[m] + var_q[m], floor).
    The result is left in squared form.
    """
    if floor <= 0:
        raise ValueError("floor must be positive")
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    vp = np.asarray(var_p, dtype=np.float64)
    vq = np.asarray(var_q, dtype=np.float64)
    if not (p.shape == q.shape == vp.shape == vq.shape) or p.ndim != 1:
        raise ValueError("all four vectors must be 1-D and of equal length")
    if np.any(vp < 0) or np.any(vq < 0):
        raise ValueError("variances must be nonnegative")
    d = p - q
    return float((d * d / np.maximum(vp + vq, floor)).sum())


def _pairwise_sq(props: np.ndarray) -> np.ndarray:
    k = props.shape[0]
    out = np.zeros((k, k))
    for i in range(k - 1):
        d = props[i + 1 :] - props[i]
        out[i, i + 1 :] = (d * d).sum(axis=1)
    return out


def _pairwise_weighted(props: np.ndarray, vars_: np.ndarray, floor: float) -> np.ndarray:
    k = props.shape[0]
    out = np.zeros((k, k))
    for i in range(k - 1):
        d = props[i + 1 :] - props[i]
        denom = np.maximum(vars_[i + 1 :] + vars_[i], floor)
        out[i, i + 1 :] = (d * d / denom).sum(axis=1)
    return out


def distance_matrix(
    pm: ProportionMatrix,
    measure: str = "dstar",
    variances: VarianceMatrix | None = None,
    floor: float = DEFAULT_FLOOR,
) -> DistanceMatrix:
    """Assemble the K x K matrix of pairwise d0 or dstar values.

    dstar requires the per-cell variances used as weights; d0 ignores them.
    """
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}")
    if measure == "dstar":
        if variances is None:
            raise ValueError("dstar requires a VarianceMatrix")
        if variances.vars.shape != pm.props.shape:
            raise ValueError("variance grid shape does not match proportions")
        if floor <= 0:
            raise ValueError("floor must be positive")
        upper = _pairwise_weighted(pm.props, variances.vars, floor)
        vals = upper + upper.T
        return DistanceMatrix(vals, "dstar", pm.population_ids, floor=floor)
    upper = np.sqrt(_pairwise_sq(pm.props))
    vals = upper + upper.T
    return DistanceMatrix(vals, "d0", pm.population_ids, floor=None)


def render_distance_csv(dm: DistanceMatrix) -> str:
    """Square CSV with population labels as header row and first column."""
    rows = [["population", *dm.population_ids]]
    for k, label in enumerate(dm.population_ids):
        rows.append([label, *(repr(float(v)) for v in dm.values[k])])
    return csv_text(rows)


def render_distance_meta(dm: DistanceMatrix) -> str:
    """Sidecar metadata recording the measure (and floor, for dstar)."""
    lines = [f"measure={dm.measure}"]
    if dm.floor is not None:
        lines.append(f"floor={dm.floor!r}")
    return "\n".join(lines) + "\n"
