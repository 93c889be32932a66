"""Task lifecycle for the asynchronous linkage service.

Tasks move QUEUED -> RUNNING -> {SUCCEEDED, FAILED}, and a SUCCEEDED
task expires to EXPIRED once its seven-day retention window closes; no
other edge exists, and the store itself rejects anything else so no
interleaving of workers and sweepers can corrupt a record. Metadata is
persisted to a JSON file through atomic rewrite, which lets a restarted
service pick up its history (RUNNING tasks found at startup go back to
QUEUED; linkage is deterministic, so re-running is safe).
"""

from __future__ import annotations

import json
import os
import queue
import secrets
import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

QUEUED = "QUEUED"
RUNNING = "RUNNING"
SUCCEEDED = "SUCCEEDED"
FAILED = "FAILED"
EXPIRED = "EXPIRED"

TASK_STATUSES = (QUEUED, RUNNING, SUCCEEDED, FAILED, EXPIRED)

ALLOWED_TRANSITIONS: dict[str, frozenset[str]] = {
    QUEUED: frozenset({RUNNING}),
    RUNNING: frozenset({SUCCEEDED, FAILED}),
    SUCCEEDED: frozenset({EXPIRED}),
    FAILED: frozenset(),
    EXPIRED: frozenset(),
}

# Results stay downloadable this long after completion, then are
# permanently deleted.
RETENTION = timedelta(days=7)


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def new_task_id() -> str:
    return secrets.token_hex(16)  # 128 bits, 32 hex chars


class IllegalTransition(Exception):
    def __init__(self, task_id: str, current: str, requested: str):
        super().__init__(f"task {task_id}: {current} -> {requested} is not a legal edge")
        self.current = current
        self.requested = requested


def _iso(ts: datetime | None) -> str | None:
    return ts.isoformat() if ts else None


def _from_iso(text: str | None) -> datetime | None:
    return datetime.fromisoformat(text) if text else None


@dataclass
class TaskRecord:
    task_id: str
    owner: str
    filename: str
    selection: dict
    status: str = QUEUED
    created_at: datetime = field(default_factory=utcnow)
    updated_at: datetime = field(default_factory=utcnow)
    expires_at: datetime | None = None
    failure_reason: str | None = None
    result_path: str | None = None
    upload_path: str | None = None

    def dataset_ids(self) -> list[str]:
        return [e.get("dataset_id", "?") for e in self.selection.get("entries", [])]

    def to_json_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "owner": self.owner,
            "filename": self.filename,
            "selection": self.selection,
            "status": self.status,
            "created_at": _iso(self.created_at),
            "updated_at": _iso(self.updated_at),
            "expires_at": _iso(self.expires_at),
            "failure_reason": self.failure_reason,
            "result_path": self.result_path,
            "upload_path": self.upload_path,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TaskRecord":
        return cls(
            task_id=doc["task_id"],
            owner=doc["owner"],
            filename=doc["filename"],
            selection=doc["selection"],
            status=doc["status"],
            created_at=_from_iso(doc["created_at"]),
            updated_at=_from_iso(doc["updated_at"]),
            expires_at=_from_iso(doc.get("expires_at")),
            failure_reason=doc.get("failure_reason"),
            result_path=doc.get("result_path"),
            upload_path=doc.get("upload_path"),
        )


class TaskStore:
    """Serialized-writer persistent map of task records."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.RLock()  # reentrant: callers may wrap compound ops
        self._tasks: dict[str, TaskRecord] = {}
        if self.path.is_file():
            doc = json.loads(self.path.read_text(encoding="utf-8"))
            self._tasks = {t["task_id"]: TaskRecord.from_json_dict(t) for t in doc["tasks"]}

    def _persist(self):
        doc = {"tasks": [t.to_json_dict() for t in self._tasks.values()]}
        tmp = self.path.with_name(self.path.name + ".tmp")
        tmp.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_text(json.dumps(doc, indent=2), encoding="utf-8")
        os.replace(tmp, self.path)

    def create(self, record: TaskRecord) -> TaskRecord:
        with self._lock:
            if record.task_id in self._tasks:
                raise ValueError(f"duplicate task id {record.task_id}")
            self._tasks[record.task_id] = record
            self._persist()
        return record

    def get(self, task_id: str) -> TaskRecord | None:
        with self._lock:
            return self._tasks.get(task_id)

    def list_for_owner(self, owner: str) -> list[TaskRecord]:
        with self._lock:
            records = [t for t in self._tasks.values() if t.owner == owner]
        records.sort(key=lambda t: (t.created_at, t.task_id), reverse=True)
        return records

    def all_tasks(self) -> list[TaskRecord]:
        with self._lock:
            return list(self._tasks.values())

    def transition(self, task_id: str, new_status: str, now: datetime, **fields) -> TaskRecord:
        """Move a task along a declared edge; anything else raises."""
        with self._lock:
            record = self._tasks[task_id]
            if new_status not in ALLOWED_TRANSITIONS[record.status]:
                raise IllegalTransition(task_id, record.status, new_status)
            record.status = new_status
            record.updated_at = now
            for name, value in fields.items():
                setattr(record, name, value)
            self._persist()
            return record

    def reset_running_to_queued(self) -> list[str]:
        """Startup-only crash recovery; not part of the runtime state machine."""
        with self._lock:
            requeued = []
            for record in self._tasks.values():
                if record.status == RUNNING:
                    record.status = QUEUED
                    record.updated_at = utcnow()
                    requeued.append(record.task_id)
            if requeued:
                self._persist()
        return requeued


class TaskQueue:
    """In-process FIFO of task ids."""

    def __init__(self):
        self._q: queue.Queue[str] = queue.Queue()

    def put(self, task_id: str):
        self._q.put(task_id)

    def get(self, timeout: float | None = None) -> str | None:
        try:
            return self._q.get(timeout=timeout) if timeout else self._q.get_nowait()
        except queue.Empty:
            return None
