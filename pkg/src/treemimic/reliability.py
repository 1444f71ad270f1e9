"""Recurrence-rate scoring of observed tree patterns against an ensemble.

A pattern seen on the observed tree is reliable to the extent that it
recurs among the mimicked trees. A group pattern holds in a replicate when
the queried leaves are exactly a branch there; a separation pattern holds
when the two groups' minimal containing branches are disjoint. Counting is
by leaf membership, so sibling orientation differences between replicate
trees cannot affect the rates.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .codes import CodeTable, minimal_containing_branch
from .mimicry import MimicryEnsemble

__all__ = [
    "PatternQuery",
    "ReliabilityReport",
    "DepthSizeSummary",
    "evaluate_query",
    "evaluate_group",
    "evaluate_separation",
    "depth_size_summary",
    "report_document",
]


@dataclass(frozen=True)
class PatternQuery:
    """A group (one leaf set) or separation (two disjoint sets) question."""

    kind: str
    group: tuple[str, ...]
    group2: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("group", "separation"):
            raise ValueError(f"unknown query kind {self.kind!r}")
        object.__setattr__(self, "group", tuple(self.group))
        if not self.group:
            raise ValueError("empty query set")
        if self.kind == "separation":
            if not self.group2:
                raise ValueError("separation needs two leaf sets")
            object.__setattr__(self, "group2", tuple(self.group2))
            if set(self.group) & set(self.group2):
                raise ValueError("separation sets must be disjoint")
        elif self.group2:
            raise ValueError("group query takes a single leaf set")


@dataclass(frozen=True, eq=False)
class ReliabilityReport:
    """Recurrence rate plus the per-replicate (depth, size) evidence.

    ``depths[b]`` and ``sizes[b]`` describe the minimal containing branch
    in replicate b: of the queried set for group queries, of the union of
    the two sets (the branch where they join) for separation queries.
    ``observed_depth``/``observed_size`` are the same numbers on the
    observed tree, for the observed-versus-ensemble overlay.
    """

    query: PatternQuery
    n_replicates: int
    recurrence_rate: float
    observed_depth: int
    observed_size: int
    depths: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        depths = np.asarray(self.depths, dtype=np.int64)
        sizes = np.asarray(self.sizes, dtype=np.int64)
        if depths.shape != (self.n_replicates,) or sizes.shape != (self.n_replicates,):
            raise ValueError("need one (depth, size) pair per replicate")
        if not 0.0 <= self.recurrence_rate <= 1.0:
            raise ValueError("rate must lie in [0, 1]")
        depths.setflags(write=False)
        sizes.setflags(write=False)
        object.__setattr__(self, "depths", depths)
        object.__setattr__(self, "sizes", sizes)


@dataclass(frozen=True)
class DepthSizeSummary:
    depth_counts: dict[int, int]
    size_counts: dict[int, int]
    observed: tuple[int, int]


def _indices(labels: Iterable[str], population_ids: Sequence[str]) -> tuple[int, ...]:
    at = {p: i for i, p in enumerate(population_ids)}
    out = []
    for lab in labels:
        if lab not in at:
            raise ValueError(f"unknown population label {lab!r}")
        out.append(at[lab])
    return tuple(out)


def evaluate_query(
    tables: Sequence[CodeTable],
    observed: CodeTable,
    query: PatternQuery,
    population_ids: Sequence[str],
) -> ReliabilityReport:
    """Score one query against a sequence of replicate code tables."""
    idx1 = _indices(query.group, population_ids)
    idx2 = _indices(query.group2 or (), population_ids)
    union = idx1 + idx2

    obs = minimal_containing_branch(observed, union)
    b_count = len(tables)
    depths = np.empty(b_count, dtype=np.int64)
    sizes = np.empty(b_count, dtype=np.int64)
    hits = 0
    for b, ct in enumerate(tables):
        joined = minimal_containing_branch(ct, union)
        depths[b] = joined.depth
        sizes[b] = joined.size
        if query.kind == "group":
            if joined.size == len(union):
                hits += 1
        else:
            p1 = minimal_containing_branch(ct, idx1).prefix
            p2 = minimal_containing_branch(ct, idx2).prefix
            # branches are nested or disjoint; nested iff one prefix
            # extends the other
            if not (p1.startswith(p2) or p2.startswith(p1)):
                hits += 1
    return ReliabilityReport(
        query=query,
        n_replicates=b_count,
        recurrence_rate=hits / b_count,
        observed_depth=obs.depth,
        observed_size=obs.size,
        depths=depths,
        sizes=sizes,
    )


def _ensemble_tables(ensemble: MimicryEnsemble) -> tuple[CodeTable, ...]:
    if ensemble.code_tables is None:
        raise ValueError("ensemble was built without trees; rebuild with build_trees=True")
    return ensemble.code_tables


def evaluate_group(
    ensemble: MimicryEnsemble, observed: CodeTable, members: Iterable[str]
) -> ReliabilityReport:
    """How often the queried populations stand alone as a branch."""
    query = PatternQuery("group", tuple(members))
    return evaluate_query(
        _ensemble_tables(ensemble), observed, query, ensemble.population_ids
    )


def evaluate_separation(
    ensemble: MimicryEnsemble,
    observed: CodeTable,
    group: Iterable[str],
    group2: Iterable[str],
) -> ReliabilityReport:
    """How often the two groups' containing branches are disjoint.

    The recorded (depth, size) pairs describe the union's containing
    branch: the node where the two groups are joined.
    """
    query = PatternQuery("separation", tuple(group), tuple(group2))
    return evaluate_query(
        _ensemble_tables(ensemble), observed, query, ensemble.population_ids
    )


def depth_size_summary(report: ReliabilityReport) -> DepthSizeSummary:
    """Histogram the per-replicate pairs; order-free by construction."""
    return DepthSizeSummary(
        depth_counts=dict(sorted(Counter(report.depths.tolist()).items())),
        size_counts=dict(sorted(Counter(report.sizes.tolist()).items())),
        observed=(report.observed_depth, report.observed_size),
    )


def report_document(report: ReliabilityReport) -> dict:
    """JSON-ready record: query, B, rate, observed pair, replicate pairs."""
    q: dict = {"kind": report.query.kind, "group": list(report.query.group)}
    if report.query.group2 is not None:
        q["group2"] = list(report.query.group2)
    return {
        "format_version": 1,
        "query": q,
        "B": report.n_replicates,
        "recurrence_rate": report.recurrence_rate,
        "observed": {"depth": report.observed_depth, "size": report.observed_size},
        "replicates": [
            [int(d), int(s)] for d, s in zip(report.depths.tolist(), report.sizes.tolist())
        ],
    }
