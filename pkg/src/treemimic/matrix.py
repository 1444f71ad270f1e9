"""Count-matrix ingestion, normalization, and multinomial moment formulas.

The raw data for every analysis is a K x M grid of category counts, one row
per population. Rows are turned into proportion vectors (each row is a
histogram), and the per-cell multinomial moments of those proportions are
what the variance-weighted distance downstream consumes.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from .errors import (
    CellValueError,
    DuplicateLabelError,
    HeaderError,
    ParseError,
    RaggedRowError,
    ZeroRowError,
)

__all__ = [
    "CountMatrix",
    "ProportionMatrix",
    "BlockedCountMatrix",
    "VarianceMatrix",
    "load_counts",
    "load_blocked_counts",
    "read_counts",
    "read_blocked_counts",
    "render_counts",
    "render_blocked_counts",
    "write_counts",
    "to_proportions",
    "theoretical_variance",
    "theoretical_covariance",
    "empirical_variance",
]

ROW_SUM_TOL = 1e-12

_INT_RE = re.compile(r"^[+-]?\d+$")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def csv_text(rows: Iterable[Iterable]) -> str:
    """CSV rendering used by every writer: LF line ends, minimal quoting."""
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _check_labels(labels: tuple[str, ...], kind: str) -> None:
    seen: set[str] = set()
    for lab in labels:
        if not lab:
            raise ParseError(f"empty {kind} label")
        if lab in seen:
            raise DuplicateLabelError(f"duplicate {kind} label {lab!r}")
        seen.add(lab)


@dataclass(frozen=True, eq=False)
class CountMatrix:
    """K x M nonnegative integer category counts with row/column labels.

    Immutable after construction; ``row_sums`` holds the per-population
    totals N_k. Every row must have N_k >= 1 (a population with no
    observations has no histogram).
    """

    population_ids: tuple[str, ...]
    category_names: tuple[str, ...]
    counts: np.ndarray
    row_sums: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "population_ids", tuple(self.population_ids))
        object.__setattr__(self, "category_names", tuple(self.category_names))
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise ValueError("counts must be a 2-D array")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.floor(counts)):
                raise ValueError("counts must be integers")
            counts = counts.astype(np.int64)
        else:
            counts = counts.astype(np.int64, copy=True)
        k, m = counts.shape
        if k < 2 or m < 2:
            raise ValueError(f"need at least 2 populations and 2 categories, got {k}x{m}")
        if len(self.population_ids) != k or len(self.category_names) != m:
            raise ValueError("label lengths do not match the counts grid")
        _check_labels(self.population_ids, "population")
        _check_labels(self.category_names, "category")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        sums = counts.sum(axis=1)
        if np.any(sums < 1):
            bad = self.population_ids[int(np.argmin(sums))]
            raise ZeroRowError(f"zero-total population {bad!r}")
        object.__setattr__(self, "counts", _frozen(counts))
        object.__setattr__(self, "row_sums", _frozen(sums))

    @property
    def n_populations(self) -> int:
        return self.counts.shape[0]

    @property
    def n_categories(self) -> int:
        return self.counts.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountMatrix):
            return NotImplemented
        return (
            self.population_ids == other.population_ids
            and self.category_names == other.category_names
            and np.array_equal(self.counts, other.counts)
        )


@dataclass(frozen=True, eq=False)
class ProportionMatrix:
    """Row-normalized counts: row k is the histogram of population k."""

    population_ids: tuple[str, ...]
    category_names: tuple[str, ...]
    props: np.ndarray
    row_sums: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "population_ids", tuple(self.population_ids))
        object.__setattr__(self, "category_names", tuple(self.category_names))
        props = np.asarray(self.props, dtype=np.float64)
        sums = np.asarray(self.row_sums, dtype=np.int64)
        if props.shape != (len(self.population_ids), len(self.category_names)):
            raise ValueError("props shape does not match labels")
        if np.any(props < 0) or np.any(props > 1):
            raise ValueError("proportions must lie in [0, 1]")
        if np.any(np.abs(props.sum(axis=1) - 1.0) > ROW_SUM_TOL):
            raise ValueError("every proportion row must sum to 1")
        if sums.shape != (props.shape[0],) or np.any(sums < 1):
            raise ValueError("row_sums must be positive, one per population")
        object.__setattr__(self, "props", _frozen(props.copy()))
        object.__setattr__(self, "row_sums", _frozen(sums.copy()))

    @property
    def n_populations(self) -> int:
        return self.props.shape[0]

    @property
    def n_categories(self) -> int:
        return self.props.shape[1]


@dataclass(frozen=True, eq=False)
class BlockedCountMatrix:
    """Per-block decomposition of the counts: a K x T x M grid.

    Block t of population k holds the counts observed in that block;
    aggregating over blocks must yield a valid :class:`CountMatrix`.
    All-zero blocks are permitted and contribute nothing.
    """

    population_ids: tuple[str, ...]
    category_names: tuple[str, ...]
    block_ids: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "population_ids", tuple(self.population_ids))
        object.__setattr__(self, "category_names", tuple(self.category_names))
        object.__setattr__(self, "block_ids", tuple(self.block_ids))
        counts = np.asarray(self.counts).astype(np.int64, copy=True)
        k, t, m = counts.shape
        expect = (len(self.population_ids), len(self.block_ids), len(self.category_names))
        if (k, t, m) != expect:
            raise ValueError("blocked counts shape does not match labels")
        _check_labels(self.block_ids, "block")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", _frozen(counts))
        # raises on duplicate labels, zero-total populations, K/M too small
        self.aggregate()

    def aggregate(self) -> CountMatrix:
        """Sum over blocks, yielding the plain K x M count matrix."""
        return CountMatrix(self.population_ids, self.category_names, self.counts.sum(axis=1))


@dataclass(frozen=True, eq=False)
class VarianceMatrix:
    """Per-cell variances of mimicked proportions; tagged with their source."""

    vars: np.ndarray
    source: str

    def __post_init__(self):
        if self.source not in ("theoretical", "empirical"):
            raise ValueError(f"unknown variance source {self.source!r}")
        v = np.asarray(self.vars, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("vars must be a K x M grid")
        if np.any(v < 0):
            raise ValueError("variances must be nonnegative")
        object.__setattr__(self, "vars", _frozen(v.copy()))


# ---------------------------------------------------------------------------
# CSV ingestion

def _parse_cell(cell: str, rownum: int, label: str, colname: str) -> int:
    s = cell.strip()
    if not _INT_RE.match(s):
        raise CellValueError(
            f"cell is not an integer count: {cell!r}",
            where=f"row {rownum} {label!r}, column {colname!r}",
        )
    value = int(s)
    if value < 0:
        raise CellValueError(
            f"negative count {value}",
            where=f"row {rownum} {label!r}, column {colname!r}",
        )
    return value


def _reader(stream: str | IO[str] | Iterable[str]):
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    return csv.reader(stream)


def load_counts(stream: str | IO[str] | Iterable[str]) -> CountMatrix:
    """Parse the counts CSV layout into a CountMatrix.

    Layout: header ``population,<cat1>,...,<catM>``; one body row per
    population with its label and M integer cells. Labels are trimmed of
    surrounding whitespace; row and column order are preserved.
    """
    rows = _reader(stream)
    try:
        header = next(rows)
    except StopIteration:
        raise HeaderError("empty input, expected a header row") from None
    if not header or header[0].strip() != "population":
        raise HeaderError(f"first header cell must be 'population', got {header[0]!r}"
                          if header else "empty header row")
    categories = tuple(h.strip() for h in header[1:])
    if len(categories) < 2:
        raise HeaderError("need at least 2 category columns")
    _check_labels(categories, "category")

    labels: list[str] = []
    body: list[list[int]] = []
    for rownum, row in enumerate(rows, start=2):
        if not row:
            continue
        label = row[0].strip()
        if len(row) != len(categories) + 1:
            raise RaggedRowError(
                f"expected {len(categories)} cells, got {len(row) - 1}",
                where=f"row {rownum} {label!r}",
            )
        cells = [
            _parse_cell(cell, rownum, label, categories[j])
            for j, cell in enumerate(row[1:])
        ]
        labels.append(label)
        body.append(cells)
    if not body:
        raise ParseError("no body rows")
    _check_labels(tuple(labels), "population")
    counts = np.array(body, dtype=np.int64)
    if counts.shape[0] >= 1:
        sums = counts.sum(axis=1)
        if np.any(sums < 1):
            bad = labels[int(np.argmin(sums))]
            raise ZeroRowError(f"zero-total population {bad!r}")
    return CountMatrix(tuple(labels), categories, counts)


def load_blocked_counts(stream: str | IO[str] | Iterable[str]) -> BlockedCountMatrix:
    """Parse the blocked counts CSV: ``population,block,<cats...>`` rows.

    One body row per (population, block) pair; missing pairs are taken as
    all-zero blocks. Population and block orders follow first appearance.
    """
    rows = _reader(stream)
    try:
        header = next(rows)
    except StopIteration:
        raise HeaderError("empty input, expected a header row") from None
    if len(header) < 2 or header[0].strip() != "population" or header[1].strip() != "block":
        raise HeaderError("blocked header must start with 'population,block'")
    categories = tuple(h.strip() for h in header[2:])
    if len(categories) < 2:
        raise HeaderError("need at least 2 category columns")
    _check_labels(categories, "category")

    pops: list[str] = []
    blocks: list[str] = []
    cells: dict[tuple[str, str], list[int]] = {}
    for rownum, row in enumerate(rows, start=2):
        if not row:
            continue
        label = row[0].strip()
        block = row[1].strip() if len(row) > 1 else ""
        if len(row) != len(categories) + 2:
            raise RaggedRowError(
                f"expected {len(categories)} cells, got {len(row) - 2}",
                where=f"row {rownum} {label!r}/{block!r}",
            )
        key = (label, block)
        if key in cells:
            raise DuplicateLabelError(
                f"duplicate (population, block) pair {key!r}", where=f"row {rownum}"
            )
        if label not in pops:
            pops.append(label)
        if block not in blocks:
            blocks.append(block)
        cells[key] = [
            _parse_cell(cell, rownum, label, categories[j])
            for j, cell in enumerate(row[2:])
        ]
    if not cells:
        raise ParseError("no body rows")
    pop_at = {p: i for i, p in enumerate(pops)}
    block_at = {b: i for i, b in enumerate(blocks)}
    counts = np.zeros((len(pops), len(blocks), len(categories)), dtype=np.int64)
    for (label, block), vals in cells.items():
        counts[pop_at[label], block_at[block]] = vals
    sums = counts.sum(axis=(1, 2))
    if np.any(sums < 1):
        bad = pops[int(np.argmin(sums))]
        raise ZeroRowError(f"zero-total population {bad!r}")
    return BlockedCountMatrix(tuple(pops), categories, tuple(blocks), counts)


def read_counts(path) -> CountMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        return load_counts(fh)


def read_blocked_counts(path) -> BlockedCountMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        return load_blocked_counts(fh)


def render_counts(cm: CountMatrix) -> str:
    """Canonical CSV text for a CountMatrix; inverse of load_counts."""
    rows = [["population", *cm.category_names]]
    for k, label in enumerate(cm.population_ids):
        rows.append([label, *(str(int(c)) for c in cm.counts[k])])
    return csv_text(rows)


def render_blocked_counts(bcm: BlockedCountMatrix) -> str:
    rows = [["population", "block", *bcm.category_names]]
    for k, label in enumerate(bcm.population_ids):
        for t, block in enumerate(bcm.block_ids):
            rows.append([label, block, *(str(int(c)) for c in bcm.counts[k, t])])
    return csv_text(rows)


def write_counts(path, cm: CountMatrix | BlockedCountMatrix) -> None:
    text = (
        render_blocked_counts(cm)
        if isinstance(cm, BlockedCountMatrix)
        else render_counts(cm)
    )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Moments

def to_proportions(cm: CountMatrix) -> ProportionMatrix:
    """Normalize each row by its total: props[k, m] = counts[k, m] / N_k."""
    props = cm.counts / cm.row_sums[:, None]
    return ProportionMatrix(cm.population_ids, cm.category_names, props, cm.row_sums)


def theoretical_variance(pm: ProportionMatrix) -> VarianceMatrix:
    """Multinomial variance of a mimicked proportion: p(1-p)/N per cell."""
    v = pm.props * (1.0 - pm.props) / pm.row_sums[:, None]
    return VarianceMatrix(v, source="theoretical")


def theoretical_covariance(pm: ProportionMatrix, k: int, m: int, m2: int) -> float:
    """Multinomial covariance -p_km * p_km' / N_k between two cells of row k.

    Always <= 0; zero exactly when either proportion is zero. Use
    :func:`theoretical_variance` for the m == m' diagonal.
    """
    if m == m2:
        raise ValueError("covariance needs two distinct categories; use theoretical_variance")
    return float(-pm.props[k, m] * pm.props[k, m2] / pm.row_sums[k])


def empirical_variance(observed: ProportionMatrix, ensemble) -> VarianceMatrix:
    """Mimicking variance estimated from an ensemble: mean of (p_obs - p_b)^2.

    The ensemble must have been built from the same observed matrix (labels
    and row totals are checked).
    """
    if ensemble.n_replicates < 2:
        raise ValueError("need at least 2 replicates to estimate variance")
    if (
        ensemble.population_ids != observed.population_ids
        or ensemble.category_names != observed.category_names
        or not np.array_equal(ensemble.row_sums, observed.row_sums)
    ):
        raise ValueError("ensemble was not built from this observed matrix")
    return VarianceMatrix(ensemble.dev_sq_sum / ensemble.n_replicates, source="empirical")
