"""Cohort scoring runs: turn model outputs into persisted, explained alerts.

Alert identity is the digest of (cohort version, model version, student id),
which makes re-scoring idempotent: the same run inputs update the existing
alerts in place instead of duplicating them.
"""

from __future__ import annotations

import uuid
from pathlib import Path

import numpy as np

from .dataset import CleanCohort, read_cohort
from .errors import CohortMissing, ModelMissing
from .explain import compose_rationale, map_intervention, week_index
from .features import SILENT_COMMENT_AGE
from .pipeline import (
    TrainedPipeline,
    best_comment_for_tag,
    build_text_cache,
    load_pipeline,
    score_records,
    text_vector_for,
)
from .store import AlertStore, alert_id_for

TABULAR_FACTOR_NAMES = None  # filled lazily from dataset constants


def _display_value(value: float) -> str:
    return f"{value:g}"


def top_tabular_factor(trained: TrainedPipeline, record, text_cache, medians) -> tuple:
    """Single-column replacement attribution: the column whose reset to the
    training-fold median/mode drops the Dropout risk the most."""
    from .dataset import CATEGORICAL_FIELDS, NUMERIC_FIELDS

    entry = text_cache[record.student_id]
    x_txt = text_vector_for(record, entry, trained.pca, trained.spec)[None, :]
    base = trained.predict(trained.encoder.encode(record)[None, :], x_txt)[0, 1]

    candidates = []
    for j, name in enumerate(NUMERIC_FIELDS):
        probe = _clone(record)
        probe.numeric_features[j] = medians["numeric"][j]
        risk = trained.predict(trained.encoder.encode(probe)[None, :], x_txt)[0, 1]
        candidates.append((base - risk, name, _display_value(record.numeric_features[j])))
    for j, name in enumerate(CATEGORICAL_FIELDS):
        probe = _clone(record)
        probe.categorical_codes[j] = medians["categorical"][j]
        risk = trained.predict(trained.encoder.encode(probe)[None, :], x_txt)[0, 1]
        candidates.append((base - risk, name, str(record.categorical_codes[j])))
    probe = _clone(record)
    probe.days_since_last_grade = medians["days_since_last_grade"]
    risk = trained.predict(trained.encoder.encode(probe)[None, :], x_txt)[0, 1]
    candidates.append((base - risk, "days_since_last_grade", str(record.days_since_last_grade)))

    drop, name, shown = max(candidates, key=lambda c: c[0])
    if drop <= 0:
        return None, None
    return name, shown


def _clone(record):
    from copy import deepcopy

    return deepcopy(record)


def cohort_medians(rows: list) -> dict:
    numeric = np.array([r.numeric_features for r in rows], dtype=float)
    categorical = np.array([r.categorical_codes for r in rows])
    modes = []
    for j in range(categorical.shape[1]):
        values, counts = np.unique(categorical[:, j], return_counts=True)
        modes.append(int(values[np.argmax(counts)]))
    return {
        "numeric": np.median(numeric, axis=0).tolist(),
        "categorical": modes,
        "days_since_last_grade": int(np.median([r.days_since_last_grade for r in rows])),
    }


def score_cohort(store: AlertStore, cohort: CleanCohort, trained: TrainedPipeline,
                 threshold: float, provider, kb, text_cache: dict | None = None,
                 run_id: str | None = None, term_length_days: int = 98,
                 with_rationales: bool = True) -> dict:
    """Score every student; create or update one alert per at-risk learner."""
    run_id = run_id or uuid.uuid4().hex[:12]
    cohort_ver = trained.meta.get("cohort_version", "unversioned")
    model_ver = trained.meta.get("model_version") or "unversioned"

    if run_id not in store.state["runs"]:
        store.append("run_created", {"run_id": run_id, "cohort": cohort_ver,
                                     "model": model_ver, "threshold": threshold})
    store.append("run_updated", {"run_id": run_id, "status": "running"})

    if text_cache is None:
        text_cache = build_text_cache(cohort.rows, provider, kb)
    scored = score_records(trained, cohort.rows, text_cache)
    medians = cohort_medians(cohort.rows) if with_rationales else None

    created = updated = 0
    by_id = {r.student_id: r for r in cohort.rows}
    for s in scored:
        if s.risk < threshold:
            continue
        record = by_id[s.student_id]
        alert_id = alert_id_for(cohort_ver, model_ver, s.student_id)
        entry = text_cache[s.student_id]
        stress = entry.stress_grounded if trained.spec.ground_affect else entry.stress_plain
        sentiment = entry.sentiment_grounded if trained.spec.ground_affect else entry.sentiment_plain

        comment, retrieval = (None, None)
        if with_rationales:
            comment, retrieval = best_comment_for_tag(record, stress, provider, kb)
        cited = retrieval.top() if retrieval is not None else None
        week = week_index(
            comment.age_days if comment else record.latest_comment_age(SILENT_COMMENT_AGE),
            term_length_days,
        )
        factor, factor_value = (None, None)
        if with_rationales:
            factor, factor_value = top_tabular_factor(trained, record, text_cache, medians)
        plan = map_intervention(stress)
        rationale = compose_rationale(
            comment.text if comment else None, cited, sentiment, stress,
            risk=s.risk, week=week, top_factor=factor, top_factor_value=factor_value,
            suggested_step=plan.default_action,
        )

        existing = store.get_alert(alert_id)
        alert = {
            "alert_id": alert_id,
            "student_id": s.student_id,
            "risk": round(s.risk, 6),
            "cohort_version": cohort_ver,
            "model_version": model_ver,
            "run_id": run_id,
            "gate": s.gate,
            "rationale": rationale.to_json(),
            "plan": plan.to_json(),
            "state": plan.state,
            "acknowledged_by": None,
        }
        if existing is None:
            created += 1
        else:
            updated += 1
            alert["plan"] = existing["plan"]
            alert["state"] = existing["state"]
        store.append("alert_upserted", {"alert": alert})

    summary = {
        "run_id": run_id,
        "scored": len(scored),
        "alerts_created": created,
        "alerts_updated": updated,
        "threshold": threshold,
        "cohort_version": cohort_ver,
        "model_version": model_ver,
    }
    store.append("run_updated", {"run_id": run_id, "status": "done", "summary": summary})
    store.append("meta_updated", {"model_version": model_ver, "cohort_version": cohort_ver})
    store.snapshot()
    return summary


def load_artifacts(data_dir: str | Path, model_name: str):
    """Resolve the augmented cohort and a trained bundle from the data dir."""
    data_dir = Path(data_dir)
    cohort_path = data_dir / "augmented.jsonl"
    if not cohort_path.exists():
        cohort_path = data_dir / "cohort.jsonl"
    if not cohort_path.exists():
        raise CohortMissing(str(data_dir / "augmented.jsonl"))
    bundle_path = data_dir / "models" / f"{model_name}.bundle"
    if not bundle_path.exists():
        raise ModelMissing(str(bundle_path))
    return read_cohort(cohort_path), load_pipeline(bundle_path)
