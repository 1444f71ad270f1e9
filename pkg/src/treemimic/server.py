"""HTTP interface for the explorer UI.

Serves the observed tree/heatmap/codes and evaluates reliability queries
against the precomputed ensemble's code tables. The server never samples:
everything is a pure function of the loaded session, so identical requests
always return identical bodies.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .artifacts import FORMAT_VERSION, SessionState, load_session
from .reliability import PatternQuery, evaluate_query, report_document

__all__ = ["create_app", "app_from_dir"]


class ReliabilityRequest(BaseModel):
    kind: str
    group: list[str]
    group2: list[str] | None = None


def _tree_document(session: SessionState) -> dict:
    d = session.dendrogram
    return {
        "format_version": FORMAT_VERSION,
        "n_leaves": d.n_leaves,
        "labels": list(session.population_ids),
        "merges": [
            {
                "left": int(d.left[t]),
                "right": int(d.right[t]),
                "height": float(d.heights[t]),
                "size": int(d.sizes[t]),
            }
            for t in range(d.n_leaves - 1)
        ],
        "newick": session.newick,
    }


def _heatmap_document(session: SessionState) -> dict:
    doc = dict(session.heatmap)
    order = doc["row_order"]
    doc["category_names"] = list(session.proportions.category_names)
    doc["values"] = [
        [float(v) for v in session.proportions.props[int(i)]] for i in order
    ]
    doc["row_sums"] = [int(session.proportions.row_sums[int(i)]) for i in order]
    return doc


def _evaluate(session: SessionState, req: ReliabilityRequest) -> dict:
    try:
        query = PatternQuery(req.kind, tuple(req.group), tuple(req.group2 or ()) or None)
        assert session.ensemble_tables is not None
        report = evaluate_query(
            session.ensemble_tables, session.code_table, query, session.population_ids
        )
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return report_document(report)


def create_app(session: SessionState, ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="treemimic explorer API")

    @app.get("/health")
    def health() -> dict:
        return {"format_version": FORMAT_VERSION, "status": "ok"}

    @app.get("/tree")
    def tree() -> dict:
        return _tree_document(session)

    @app.get("/heatmap")
    def heatmap() -> dict:
        return _heatmap_document(session)

    @app.get("/codes")
    def codes() -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "codes": {
                label: session.code_table.codes[i]
                for i, label in enumerate(session.population_ids)
            },
        }

    @app.get("/ensemble/meta")
    def ensemble_meta() -> JSONResponse:
        if session.ensemble_meta is None:
            raise HTTPException(status_code=503, detail="no ensemble loaded")
        return JSONResponse(session.ensemble_meta)

    @app.post("/reliability")
    def reliability(req: ReliabilityRequest) -> dict:
        if session.ensemble_tables is None:
            raise HTTPException(status_code=503, detail="no ensemble loaded")
        return _evaluate(session, req)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/")
        def index() -> dict:
            return {
                "format_version": FORMAT_VERSION,
                "endpoints": ["/health", "/tree", "/heatmap", "/codes",
                              "/ensemble/meta", "/reliability"],
            }

    return app


def app_from_dir(artifacts_dir: Path, ui_dir: Path | None = None) -> FastAPI:
    return create_app(load_session(artifacts_dir), ui_dir=ui_dir)
