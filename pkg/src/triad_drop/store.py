"""Alert persistence: append-only event log with periodic snapshots.

Every mutation is appended to the log before it is applied in memory, so a
crash between append and snapshot loses nothing: reopening folds the
snapshot (if any) with the log tail and reconstructs the identical state.
State comparisons are made on the canonical JSON serialization.

Escalation timing uses an injected logical clock measured in fractional
days; events may carry ``now_days`` to advance it.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

from .errors import StaleRevision
from .explain import InterventionPlan, advance

LOG_FORMAT_VERSION = 1

EVENT_TYPES = ("acknowledged", "intervention_sent", "responded", "escalate_check")


def alert_id_for(cohort_version: str, model_version: str, student_id: str) -> str:
    digest = hashlib.blake2b(
        f"{cohort_version}:{model_version}:{student_id}".encode(), digest_size=8
    )
    return digest.hexdigest()


def _empty_state() -> dict:
    return {"alerts": {}, "runs": {}, "meta": {"logical_now_days": 0.0,
                                               "model_version": None,
                                               "cohort_version": None}}


class AlertStore:
    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.log_path = self.directory / "events.log"
        self.snapshot_path = self.directory / "snapshot.json"
        self.state = _empty_state()
        self.seq = 0

    # -- lifecycle ----------------------------------------------------------

    @classmethod
    def open(cls, directory: str | Path) -> "AlertStore":
        store = cls(directory)
        last_seq = 0
        if store.snapshot_path.exists():
            snap = json.loads(store.snapshot_path.read_text(encoding="utf-8"))
            store.state = snap["state"]
            last_seq = snap["last_seq"]
            store.seq = last_seq
        if store.log_path.exists():
            with open(store.log_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    event = json.loads(line)
                    if event["seq"] <= last_seq:
                        continue
                    store._apply(event)
                    store.seq = event["seq"]
        return store

    def snapshot(self) -> None:
        payload = {"v": LOG_FORMAT_VERSION, "last_seq": self.seq, "state": self.state}
        tmp = self.snapshot_path.with_suffix(".tmp")
        tmp.write_text(canonical_json(payload), encoding="utf-8")
        tmp.replace(self.snapshot_path)

    def append(self, kind: str, payload: dict) -> dict:
        """Write-ahead: the event hits the log before memory."""
        event = {"v": LOG_FORMAT_VERSION, "seq": self.seq + 1, "kind": kind,
                 "wall_time": time.time(), "payload": payload}
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
        self._apply(event)
        self.seq = event["seq"]
        return event

    # -- event application ---------------------------------------------------

    def _apply(self, event: dict) -> None:
        kind = event["kind"]
        payload = event["payload"]
        if kind == "run_created":
            self.state["runs"][payload["run_id"]] = {
                "run_id": payload["run_id"],
                "cohort": payload["cohort"],
                "model": payload["model"],
                "threshold": payload["threshold"],
                "status": "pending",
                "summary": None,
                "wall_time": event["wall_time"],
            }
        elif kind == "run_updated":
            run = self.state["runs"][payload["run_id"]]
            run["status"] = payload["status"]
            if payload.get("summary") is not None:
                run["summary"] = payload["summary"]
        elif kind == "alert_upserted":
            alert = payload["alert"]
            existing = self.state["alerts"].get(alert["alert_id"])
            if existing is None:
                alert = dict(alert)
                alert.setdefault("revision", 1)
                alert.setdefault("events", [])
                self.state["alerts"][alert["alert_id"]] = alert
            else:
                # idempotent re-scoring refreshes the risk and rationale but
                # keeps identity, history and the event trail
                existing["risk"] = alert["risk"]
                existing["rationale"] = alert["rationale"]
                existing["run_id"] = alert.get("run_id", existing.get("run_id"))
                existing["revision"] += 1
        elif kind == "alert_event":
            self._apply_alert_event(payload)
        elif kind == "clock_advanced":
            self.state["meta"]["logical_now_days"] = payload["now_days"]
        elif kind == "meta_updated":
            self.state["meta"].update(payload)
        else:
            raise ValueError(f"unknown event kind {kind!r}")

    def _apply_alert_event(self, payload: dict) -> None:
        alert = self.state["alerts"][payload["alert_id"]]
        event_type = payload["type"]
        now_days = payload.get("now_days")
        if now_days is None:
            now_days = self.state["meta"]["logical_now_days"]
        else:
            self.state["meta"]["logical_now_days"] = now_days

        plan = InterventionPlan.from_json(alert["plan"])
        changed = True
        if event_type == "acknowledged":
            alert["acknowledged_by"] = payload.get("by", "tutor")
        elif event_type == "intervention_sent":
            advance(plan, "deliver", now_days)
        elif event_type == "responded":
            advance(plan, "respond", now_days)
            advance(plan, "close", now_days)
        elif event_type == "escalate_check":
            before = plan.state
            advance(plan, "escalate_check", now_days)
            changed = plan.state != before
        else:
            raise ValueError(f"unknown alert event type {event_type!r}")

        alert["plan"] = plan.to_json()
        alert["state"] = plan.state
        if changed:
            alert["revision"] += 1
        alert["events"].append({"type": event_type, "now_days": now_days,
                                "by": payload.get("by")})

    # -- queries and commands -------------------------------------------------

    def get_alert(self, alert_id: str) -> dict | None:
        return self.state["alerts"].get(alert_id)

    def list_alerts(self, min_risk: float = 0.0, state: str | None = None) -> list:
        alerts = [
            a for a in self.state["alerts"].values()
            if a["risk"] >= min_risk and (state is None or a["state"] == state)
        ]
        # risk descending, ties by student id for a stable ordering
        return sorted(alerts, key=lambda a: (-a["risk"], a["student_id"]))

    def apply_alert_event(self, alert_id: str, event_type: str, revision: int,
                          now_days: float | None = None, by: str | None = None) -> dict:
        alert = self.state["alerts"].get(alert_id)
        if alert is None:
            raise KeyError(alert_id)
        if revision != alert["revision"]:
            raise StaleRevision(f"alert {alert_id} is at revision {alert['revision']}")
        if event_type not in EVENT_TYPES:
            raise ValueError(f"unknown event type {event_type!r}")
        # validate the transition before logging anything
        plan = InterventionPlan.from_json(alert["plan"])
        probe_now = now_days if now_days is not None else self.state["meta"]["logical_now_days"]
        if event_type == "intervention_sent":
            advance(InterventionPlan.from_json(alert["plan"]), "deliver", probe_now)
        elif event_type == "responded":
            probe = InterventionPlan.from_json(alert["plan"])
            advance(probe, "respond", probe_now)
            advance(probe, "close", probe_now)
        del plan

        payload = {"alert_id": alert_id, "type": event_type, "revision": revision}
        if now_days is not None:
            payload["now_days"] = now_days
        if by is not None:
            payload["by"] = by
        self.append("alert_event", payload)
        return self.state["alerts"][alert_id]

    def serialized_state(self) -> str:
        return canonical_json(self.state)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
