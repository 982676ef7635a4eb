"""HTTP service: scoring runs, alert triage and metrics, JSON over HTTP/1.1.

Request bodies reject unknown fields; alert mutations use optimistic
concurrency through the per-alert revision number (409 on mismatch).
Scoring runs execute on a worker thread so handlers never block; clients
poll GET /runs/{id}.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException, Query
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .config import Settings
from .errors import CohortMissing, IllegalTransition, ModelMissing, StaleRevision
from .pipeline import default_provider, ensure_knowledge_base
from .scoring import load_artifacts, score_cohort
from .store import EVENT_TYPES, AlertStore


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    cohort: str = "augmented"
    model: str = "triad"
    threshold: float = Field(default=0.5, ge=0.0)


class AlertEventRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: str
    revision: int
    now_days: float | None = None
    by: str | None = None
    note: str | None = None


def create_app(settings: Settings, inline_runs: bool = False) -> FastAPI:
    app = FastAPI(title="dropout-early-warning", version=__version__)
    data_dir = Path(settings.data_dir)
    store = AlertStore.open(data_dir / "store")
    lock = threading.Lock()

    def require_auth(authorization: str | None = Header(default=None)) -> None:
        if settings.auth_token and authorization != f"Bearer {settings.auth_token}":
            raise HTTPException(status_code=401, detail="invalid or missing bearer token")

    def execute_run(run_id: str, request: RunRequest) -> None:
        try:
            cohort, trained = load_artifacts(data_dir, request.model)
            provider = default_provider(settings.seed)
            kb = ensure_knowledge_base(data_dir, provider)
            with lock:
                score_cohort(store, cohort, trained, request.threshold,
                             provider, kb, run_id=run_id,
                             term_length_days=settings.term_length_days)
        except Exception as exc:  # recorded on the run, surfaced via polling
            with lock:
                store.append("run_updated", {
                    "run_id": run_id, "status": "failed",
                    "summary": {"error": type(exc).__name__, "detail": str(exc)},
                })
                store.snapshot()

    @app.post("/runs", status_code=202, dependencies=[Depends(require_auth)])
    def create_run(request: RunRequest):
        bundle = data_dir / "models" / f"{request.model}.bundle"
        if not bundle.exists():
            raise HTTPException(status_code=404, detail=f"ModelMissing: {bundle}")
        if not (data_dir / "augmented.jsonl").exists() and not (data_dir / "cohort.jsonl").exists():
            raise HTTPException(status_code=404, detail="CohortMissing: no ingested cohort")
        run_id = uuid.uuid4().hex[:12]
        with lock:
            store.append("run_created", {"run_id": run_id, "cohort": request.cohort,
                                         "model": request.model, "threshold": request.threshold})
        if inline_runs:
            execute_run(run_id, request)
        else:
            worker = threading.Thread(target=execute_run, args=(run_id, request), daemon=True)
            worker.start()
        return {"run_id": run_id, "status": "accepted"}

    @app.get("/runs/{run_id}", dependencies=[Depends(require_auth)])
    def get_run(run_id: str):
        with lock:
            run = store.state["runs"].get(run_id)
        if run is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id}")
        return run

    @app.get("/alerts", dependencies=[Depends(require_auth)])
    def list_alerts(min_risk: float = Query(default=0.0),
                    state: str | None = Query(default=None),
                    page: int = Query(default=1, ge=1),
                    page_size: int = Query(default=50, ge=1, le=500)):
        with lock:
            alerts = store.list_alerts(min_risk=min_risk, state=state)
        start = (page - 1) * page_size
        return {
            "total": len(alerts),
            "page": page,
            "page_size": page_size,
            "alerts": alerts[start : start + page_size],
        }

    @app.get("/alerts/{alert_id}", dependencies=[Depends(require_auth)])
    def get_alert(alert_id: str):
        with lock:
            alert = store.get_alert(alert_id)
        if alert is None:
            raise HTTPException(status_code=404, detail=f"unknown alert {alert_id}")
        return alert

    @app.post("/alerts/{alert_id}/events", dependencies=[Depends(require_auth)])
    def post_alert_event(alert_id: str, request: AlertEventRequest):
        if request.type not in EVENT_TYPES:
            raise HTTPException(status_code=422,
                                detail=f"unknown event type {request.type!r}")
        try:
            with lock:
                alert = store.apply_alert_event(alert_id, request.type, request.revision,
                                                now_days=request.now_days, by=request.by)
                store.snapshot()
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown alert {alert_id}")
        except StaleRevision as exc:
            raise HTTPException(status_code=409, detail=exc.one_liner())
        except IllegalTransition as exc:
            raise HTTPException(status_code=422, detail=exc.one_liner())
        return alert

    @app.get("/metrics/latest", dependencies=[Depends(require_auth)])
    def latest_metrics():
        path = data_dir / "metrics" / "latest.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail="no evaluation report yet")
        return json.loads(path.read_text(encoding="utf-8"))

    @app.get("/health")
    def health():
        with lock:
            meta = dict(store.state["meta"])
        return {
            "service": "dropout-early-warning",
            "version": __version__,
            "model_version": meta.get("model_version"),
            "dataset_version": meta.get("cohort_version"),
            "time": {"logical_now_days": meta.get("logical_now_days", 0.0)},
        }

    app.state.store = store
    return app
