"""On-disk artifact formats and session loading.

Every CLI command writes into a directory containing a ``manifest.json``
that embeds the run configuration, so any output directory is exactly
reproducible from its manifest plus the input data. Nothing here embeds
timestamps or absolute output paths: reruns must be byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .codes import CodeTable, render_code_table
from .distance import DistanceMatrix, render_distance_csv, render_distance_meta
from .hclust import Dendrogram
from .matrix import ProportionMatrix, csv_text
from .report import HeatmapBundle

FORMAT_VERSION = 1

__all__ = [
    "FORMAT_VERSION",
    "write_manifest",
    "read_manifest",
    "to_newick",
    "render_dendrogram",
    "parse_dendrogram",
    "write_tree_artifacts",
    "write_ensemble_artifacts",
    "parse_code_table",
    "SessionState",
    "load_session",
]


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def write_manifest(outdir: Path, command: str, config: dict) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "tool": "treemimic",
        "tool_version": __version__,
        "command": command,
        "config": config,
    }
    _write(Path(outdir) / "manifest.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_manifest(outdir: Path) -> dict:
    doc = json.loads((Path(outdir) / "manifest.json").read_text(encoding="utf-8"))
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported manifest format {doc.get('format_version')!r}")
    return doc


# ---------------------------------------------------------------------------
# Trees

_NEEDS_QUOTE = re.compile(r"[\s(),:;\[\]']")


def _newick_label(label: str) -> str:
    if _NEEDS_QUOTE.search(label):
        return "'" + label.replace("'", "''") + "'"
    return label


def to_newick(d: Dendrogram, labels: tuple[str, ...]) -> str:
    """Newick text with branch lengths from the merge heights."""
    k = d.n_leaves
    if len(labels) != k:
        raise ValueError("label count does not match the tree")
    text: dict[int, str] = {}
    height: dict[int, float] = {i: 0.0 for i in range(k)}
    for t in range(k - 1):
        a, b = int(d.left[t]), int(d.right[t])
        h = float(d.heights[t])
        for child in (a, b):
            if child < k:
                text[child] = f"{_newick_label(labels[child])}:{h - height[child]!r}"
            else:
                text[child] = f"({text[child]}):{h - height[child]!r}"
        text[k + t] = f"{text[a]},{text[b]}"
        height[k + t] = h
    return f"({text[d.root]});\n"


def render_dendrogram(d: Dendrogram) -> str:
    """One merge per line: ``left right height size``.

    Leaves are 0..K-1; internal nodes K..2K-2 in merge order, so line t
    defines node K+t.
    """
    lines = [
        f"{int(d.left[t])} {int(d.right[t])} {float(d.heights[t])!r} {int(d.sizes[t])}"
        for t in range(d.n_leaves - 1)
    ]
    return "\n".join(lines) + "\n"


def parse_dendrogram(text: str) -> Dendrogram:
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if not rows:
        raise ValueError("empty dendrogram text")
    k = len(rows) + 1
    left = np.array([int(r[0]) for r in rows], dtype=np.int64)
    right = np.array([int(r[1]) for r in rows], dtype=np.int64)
    heights = np.array([float(r[2]) for r in rows])
    sizes = np.array([int(r[3]) for r in rows], dtype=np.int64)
    return Dendrogram(k, left, right, heights, sizes)


def parse_code_table(text: str, population_ids: tuple[str, ...]) -> CodeTable:
    """Inverse of render_code_table for a known population order."""
    at = {p: i for i, p in enumerate(population_ids)}
    codes = [""] * len(population_ids)
    seen = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        label, code = line.split("\t")
        codes[at[label]] = code
        seen += 1
    if seen != len(population_ids):
        raise ValueError("code table does not cover every population")
    return CodeTable(tuple(codes))


# ---------------------------------------------------------------------------
# Output directories

def render_proportions_csv(pm: ProportionMatrix) -> str:
    rows = [["population", "N", *pm.category_names]]
    for k, label in enumerate(pm.population_ids):
        rows.append([label, str(int(pm.row_sums[k])),
                     *(repr(float(v)) for v in pm.props[k])])
    return csv_text(rows)


def parse_proportions_csv(text: str) -> ProportionMatrix:
    recs = [r for r in csv.reader(io.StringIO(text)) if r]
    if not recs or recs[0][:2] != ["population", "N"]:
        raise ValueError("malformed proportions header")
    categories = tuple(recs[0][2:])
    labels = []
    sums = []
    rows = []
    for parts in recs[1:]:
        labels.append(parts[0])
        sums.append(int(parts[1]))
        rows.append([float(x) for x in parts[2:]])
    return ProportionMatrix(tuple(labels), categories, np.array(rows), np.array(sums))


def write_heatmap_dir(outdir: Path, bundle: HeatmapBundle, pm: ProportionMatrix, newick: str) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = [["population", *pm.category_names]]
    for pos, leaf in enumerate(bundle.row_order):
        rows.append([pm.population_ids[int(leaf)],
                     *(repr(float(v)) for v in bundle.ordered_props[pos])])
    _write(outdir / "ordered_matrix.csv", csv_text(rows))
    _write(outdir / "boundaries.txt", "\n".join(str(b) for b in bundle.boundaries) + "\n")
    _write(outdir / "tree.newick", newick)
    doc = {
        "format_version": FORMAT_VERSION,
        "boundaries": list(bundle.boundaries),
        "column_bounds": [[lo, hi] for lo, hi in bundle.column_bounds],
        "row_order": [int(i) for i in bundle.row_order],
        "labels_in_order": [pm.population_ids[int(i)] for i in bundle.row_order],
    }
    _write(outdir / "heatmap.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_tree_artifacts(
    outdir: Path,
    pm: ProportionMatrix,
    dm: DistanceMatrix,
    dend: Dendrogram,
    ct: CodeTable,
    bundle: HeatmapBundle,
) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write(outdir / "proportions.csv", render_proportions_csv(pm))
    _write(outdir / "distance.csv", render_distance_csv(dm))
    _write(outdir / "distance_meta.txt", render_distance_meta(dm))
    _write(outdir / "dendrogram.txt", render_dendrogram(dend))
    newick = to_newick(dend, pm.population_ids)
    _write(outdir / "tree.newick", newick)
    _write(outdir / "codes.tsv", render_code_table(ct, pm.population_ids))
    write_heatmap_dir(outdir / "heatmap", bundle, pm, newick)


def render_ensemble_codes(code_tables, population_ids: tuple[str, ...]) -> str:
    """All replicate code tables as one record stream.

    Three tab-separated columns: replicate index, population label, code;
    replicates appear in index order, leaves in original row order.
    """
    lines = []
    for b, ct in enumerate(code_tables):
        for i, label in enumerate(population_ids):
            lines.append(f"{b}\t{label}\t{ct.codes[i]}")
    return "\n".join(lines) + "\n"


def parse_ensemble_codes(text: str, population_ids: tuple[str, ...]) -> tuple[CodeTable, ...]:
    at = {p: i for i, p in enumerate(population_ids)}
    tables: list[list[str]] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rep, label, code = line.split("\t")
        b = int(rep)
        while len(tables) <= b:
            tables.append([""] * len(population_ids))
        tables[b][at[label]] = code
    return tuple(CodeTable(tuple(codes)) for codes in tables)


def ensemble_meta(ensemble) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "scheme": ensemble.scheme,
        "B": ensemble.n_replicates,
        "master_seed": ensemble.master_seed,
        "measure": ensemble.config.measure,
        "variance_source": ensemble.config.variance_source,
        "floor": ensemble.config.floor,
    }


def write_ensemble_artifacts(outdir: Path, ensemble) -> None:
    """Ensemble records: meta, concatenated code tables, variance summary."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    meta = ensemble_meta(ensemble)
    _write(outdir / "ensemble_meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if ensemble.code_tables is not None:
        _write(
            outdir / "codetables.tsv",
            render_ensemble_codes(ensemble.code_tables, ensemble.population_ids),
        )
    rows = [["population", *ensemble.category_names]]
    emp = ensemble.dev_sq_sum / ensemble.n_replicates
    for k, label in enumerate(ensemble.population_ids):
        rows.append([label, *(repr(float(v)) for v in emp[k])])
    _write(outdir / "empirical_variance.csv", csv_text(rows))


# ---------------------------------------------------------------------------
# Session loading (for serve)

@dataclass(frozen=True, eq=False)
class SessionState:
    """Artifacts loaded from one output directory, immutable after load."""

    proportions: ProportionMatrix
    dendrogram: Dendrogram
    code_table: CodeTable
    heatmap: dict
    newick: str
    ensemble_meta: dict | None
    ensemble_tables: tuple[CodeTable, ...] | None

    @property
    def population_ids(self) -> tuple[str, ...]:
        return self.proportions.population_ids


def load_session(artifacts_dir: Path) -> SessionState:
    """Load observed artifacts and, when present, the ensemble tables."""
    root = Path(artifacts_dir)
    if not (root / "manifest.json").exists():
        raise FileNotFoundError(f"no manifest.json under {root}")
    read_manifest(root)  # validates the format version
    pm = parse_proportions_csv((root / "proportions.csv").read_text(encoding="utf-8"))
    dend = parse_dendrogram((root / "dendrogram.txt").read_text(encoding="utf-8"))
    ct = parse_code_table((root / "codes.tsv").read_text(encoding="utf-8"), pm.population_ids)
    heatmap = json.loads((root / "heatmap" / "heatmap.json").read_text(encoding="utf-8"))
    newick = (root / "tree.newick").read_text(encoding="utf-8")
    if dend.n_leaves != pm.n_populations:
        raise ValueError("artifacts disagree on population count")

    meta = None
    tables = None
    meta_path = root / "ensemble_meta.json"
    codes_path = root / "codetables.tsv"
    if meta_path.exists() and codes_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        tables = parse_ensemble_codes(
            codes_path.read_text(encoding="utf-8"), pm.population_ids
        )
        if len(tables) != meta["B"]:
            raise ValueError("codetables.tsv does not match the ensemble size")
    return SessionState(
        proportions=pm,
        dendrogram=dend,
        code_table=ct,
        heatmap=heatmap,
        newick=newick,
        ensemble_meta=meta,
        ensemble_tables=tables,
    )
