"""Command-line pipeline: gen / ingest / tree / mimic / reliability / heatmap / serve.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 internal error.
Commands only ever write into their --out directory; inputs are never
touched, and outputs carry a manifest.json embedding the full run
configuration so a directory can be reproduced from its manifest.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__, datasets
from .artifacts import (
    load_session,
    render_proportions_csv,
    to_newick,
    write_ensemble_artifacts,
    write_heatmap_dir,
    write_manifest,
    write_tree_artifacts,
)
from .codes import encode
from .errors import ParseError
from .hclust import ward_d2
from .matrix import (
    read_blocked_counts,
    read_counts,
    to_proportions,
    write_counts,
)
from .mimicry import MeasureConfig, build_ensemble, observed_distance, resolve_weights
from .reliability import PatternQuery, evaluate_query, report_document
from .report import heatmap_export

_MEASURES = click.Choice(["d0", "dstar"])
_VARIANCES = click.Choice(["theoretical", "empirical"])


@click.group()
@click.version_option(version=__version__)
def cli() -> None:
    """Population clustering trees with mimicry-based reliability."""


def _load_data(path: str, blocked: bool):
    return read_blocked_counts(path) if blocked else read_counts(path)


def _measure_options(fn):
    fn = click.option("--measure", type=_MEASURES, default="dstar", show_default=True,
                      help="Distance between proportion rows.")(fn)
    fn = click.option("--variance", type=_VARIANCES, default="theoretical",
                      show_default=True, help="Variance source for dstar weights.")(fn)
    fn = click.option("--floor", type=float, default=1e-9, show_default=True,
                      help="Lower clamp for dstar denominators.")(fn)
    return fn


def _tree_parts(data, config: MeasureConfig, master_seed: int, empirical_b: int):
    """Observed proportions, distance, tree, and codes under one config."""
    pm = to_proportions(data.aggregate() if hasattr(data, "aggregate") else data)
    if config.measure == "dstar" and config.variance_source == "empirical":
        scheme = "blocked" if hasattr(data, "aggregate") else "homogeneous"
        ens = build_ensemble(
            data, scheme, empirical_b, master_seed, config, build_trees=False
        )
        weights = resolve_weights(pm, config, ens)
    else:
        weights = resolve_weights(pm, config)
    dm = observed_distance(pm, config, weights)
    dend = ward_d2(dm)
    return pm, dm, dend, encode(dend)


@cli.command()
@click.option("--name", type=click.Choice(sorted(datasets.GENERATORS)), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def gen(name: str, seed: int, out: str) -> None:
    """Write a bundled synthetic dataset and its planted truth."""
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    data, truth = datasets.GENERATORS[name](seed=seed)
    fname = "blocked_counts.csv" if hasattr(data, "block_ids") else "counts.csv"
    write_counts(outdir / fname, data)
    (outdir / "truth.json").write_text(
        json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    write_manifest(outdir, "gen", {"name": name, "seed": seed, "file": fname})
    click.echo(f"wrote {outdir / fname}")


@cli.command()
@click.option("--input", "input_", type=click.Path(exists=True), required=True)
@click.option("--blocked", is_flag=True, help="Input uses the population,block layout.")
@click.option("--out", type=click.Path(), required=True)
def ingest(input_: str, blocked: bool, out: str) -> None:
    """Validate a counts file and write its proportion matrix."""
    data = _load_data(input_, blocked)
    pm = to_proportions(data.aggregate() if blocked else data)
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "proportions.csv").write_text(render_proportions_csv(pm), encoding="utf-8")
    write_manifest(outdir, "ingest", {"input": input_, "blocked": blocked})
    click.echo(f"{pm.n_populations} populations x {pm.n_categories} categories")


@cli.command()
@click.option("--input", "input_", type=click.Path(exists=True), required=True)
@click.option("--blocked", is_flag=True)
@_measure_options
@click.option("--cut", "cut_g", type=int, default=None,
              help="Cluster count for heatmap boundaries [default: min(6, K)].")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Master seed (used only for empirical variance weights).")
@click.option("--empirical-b", type=int, default=1000, show_default=True,
              help="Ensemble size behind empirical variance weights.")
@click.option("--out", type=click.Path(), required=True)
def tree(input_, blocked, measure, variance, floor, cut_g, seed, empirical_b, out) -> None:
    """Distance matrix, Ward.D2 tree, codes, and heatmap bundle."""
    data = _load_data(input_, blocked)
    config = MeasureConfig(measure, variance, floor)
    pm, dm, dend, ct = _tree_parts(data, config, seed, empirical_b)
    g = min(6, pm.n_populations) if cut_g is None else cut_g
    bundle = heatmap_export(pm, dend, g)
    outdir = Path(out)
    write_tree_artifacts(outdir, pm, dm, dend, ct, bundle)
    write_manifest(outdir, "tree", {
        "input": input_, "blocked": blocked, "measure": measure,
        "variance": variance, "floor": floor, "cut": g,
        "seed": seed, "empirical_b": empirical_b,
    })
    click.echo(f"tree over {pm.n_populations} populations written to {outdir}")


@cli.command()
@click.option("--input", "input_", type=click.Path(exists=True), required=True)
@click.option("--blocked", is_flag=True)
@click.option("--scheme", type=click.Choice(["homogeneous", "blocked"]),
              default="homogeneous", show_default=True)
@click.option("-B", "--replicates", "b_count", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_measure_options
@click.option("--cut", "cut_g", type=int, default=None)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def mimic(input_, blocked, scheme, b_count, seed, measure, variance, floor,
          cut_g, workers, out) -> None:
    """Build a mimicry ensemble plus the observed tree it is scored against."""
    data = _load_data(input_, blocked)
    config = MeasureConfig(measure, variance, floor)
    ens = build_ensemble(data, scheme, b_count, seed, config, workers=workers)
    pm = ens.observed
    dm = observed_distance(pm, config, ens.weights)
    dend = ward_d2(dm)
    ct = encode(dend)
    g = min(6, pm.n_populations) if cut_g is None else cut_g
    bundle = heatmap_export(pm, dend, g)
    outdir = Path(out)
    write_tree_artifacts(outdir, pm, dm, dend, ct, bundle)
    write_ensemble_artifacts(outdir, ens)
    write_manifest(outdir, "mimic", {
        "input": input_, "blocked": blocked, "scheme": scheme, "B": b_count,
        "seed": seed, "measure": measure, "variance": variance, "floor": floor,
        "cut": g, "workers": workers,
    })
    click.echo(f"ensemble of {b_count} mimicries written to {outdir}")


def _parse_queries(path: str) -> list[PatternQuery]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ValueError("query file must hold a JSON array of queries")
    out = []
    for item in raw:
        out.append(PatternQuery(
            item.get("kind", "group"),
            tuple(item.get("group", ())),
            tuple(item["group2"]) if "group2" in item else None,
        ))
    return out


@cli.command()
@click.option("--ensemble", "ensemble_dir", type=click.Path(exists=True), required=True,
              help="Directory written by the mimic command.")
@click.option("--queries", type=click.Path(exists=True), required=True,
              help="JSON array of {kind, group[, group2]} queries.")
@click.option("--out", type=click.Path(), required=True)
def reliability(ensemble_dir: str, queries: str, out: str) -> None:
    """Score pattern queries against a stored ensemble."""
    session = load_session(ensemble_dir)
    if session.ensemble_tables is None:
        raise ValueError(f"{ensemble_dir} holds no ensemble code tables")
    parsed = _parse_queries(queries)
    docs = []
    for query in parsed:
        rep = evaluate_query(
            session.ensemble_tables, session.code_table, query, session.population_ids
        )
        docs.append(report_document(rep))
        members = ",".join(query.group)
        if query.group2:
            members += " | " + ",".join(query.group2)
        click.echo(
            f"{query.kind} [{members}]: rate={rep.recurrence_rate:.4f} "
            f"observed=(depth {rep.observed_depth}, size {rep.observed_size})"
        )
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "reports.json").write_text(
        json.dumps(docs, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    write_manifest(outdir, "reliability", {
        "ensemble": ensemble_dir, "queries": queries, "count": len(docs),
    })


@cli.command()
@click.option("--input", "input_", type=click.Path(exists=True), required=True)
@click.option("--blocked", is_flag=True)
@_measure_options
@click.option("--cut", "cut_g", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--empirical-b", type=int, default=1000, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def heatmap(input_, blocked, measure, variance, floor, cut_g, seed, empirical_b, out) -> None:
    """Standalone heatmap bundle: ordered matrix, boundaries, Newick tree."""
    data = _load_data(input_, blocked)
    config = MeasureConfig(measure, variance, floor)
    pm, _, dend, _ = _tree_parts(data, config, seed, empirical_b)
    g = min(6, pm.n_populations) if cut_g is None else cut_g
    bundle = heatmap_export(pm, dend, g)
    outdir = Path(out)
    write_heatmap_dir(outdir, bundle, pm, to_newick(dend, pm.population_ids))
    write_manifest(outdir, "heatmap", {
        "input": input_, "blocked": blocked, "measure": measure,
        "variance": variance, "floor": floor, "cut": g,
        "seed": seed, "empirical_b": empirical_b,
    })
    click.echo(f"heatmap bundle written to {outdir}")


@cli.command()
@click.option("--artifacts", type=click.Path(exists=True), required=True,
              help="Directory written by the tree or mimic command.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8765, show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(), default=None,
              help="Static frontend bundle to serve at /.")
def serve(artifacts: str, host: str, port: int, ui_dir: str | None) -> None:
    """Serve the explorer HTTP API (and the UI, when provided)."""
    import uvicorn

    from .server import create_app

    session = load_session(artifacts)
    app = create_app(session, ui_dir=Path(ui_dir) if ui_dir else None)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except (ParseError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return 2
    except Exception as exc:  # pragma: no cover - last-resort guard
        click.echo(f"internal error: {exc!r}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
