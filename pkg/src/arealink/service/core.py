"""Service core: submission, worker execution, retention sweeps, downloads.

Everything here is transport-agnostic; the HTTP layer in app.py is a
thin adapter. The wall clock is injected so the seven-day retention
rule is testable in milliseconds, and all task mutations go through the
TaskStore's validated transitions.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable

from ..catalog import CatalogStore
from ..errors import CodedError, CohortError, LinkageError
from ..linkage import LinkSelection, ResolverContext, link, parse_cohort, write_output
from .notify import LogNotifier, NotificationAttempt
from .tasks import (
    EXPIRED,
    FAILED,
    QUEUED,
    RETENTION,
    RUNNING,
    SUCCEEDED,
    TaskQueue,
    TaskRecord,
    TaskStore,
    new_task_id,
    utcnow,
)

DEFAULT_MAX_UPLOAD = 512 * 1024 * 1024  # bytes


class ServiceError(CodedError):
    """Request-level failure carrying the HTTP status it maps to."""

    def __init__(self, code: str, message: str, http_status: int):
        super().__init__(code, message)
        self.http_status = http_status


@dataclass
class LinkageService:
    catalog: CatalogStore
    task_store: TaskStore
    data_dir: Path
    context: ResolverContext = field(default_factory=ResolverContext)
    clock: Callable[[], datetime] = utcnow
    notifier: object = field(default_factory=LogNotifier)
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD
    worker_count: int = 1

    def __post_init__(self):
        self.data_dir = Path(self.data_dir)
        (self.data_dir / "uploads").mkdir(parents=True, exist_ok=True)
        (self.data_dir / "results").mkdir(parents=True, exist_ok=True)
        self.queue = TaskQueue()
        self.attempts: list[NotificationAttempt] = []
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()
        for task_id in self.task_store.reset_running_to_queued():
            self.queue.put(task_id)
        for record in self.task_store.all_tasks():
            if record.status == QUEUED:
                self.queue.put(record.task_id)

    # -- lifecycle --------------------------------------------------------

    def start_workers(self):
        for i in range(self.worker_count):
            t = threading.Thread(target=self._worker_loop, name=f"linkage-worker-{i}", daemon=True)
            t.start()
            self._threads.append(t)

    def stop_workers(self):
        self._stop.set()
        for t in self._threads:
            t.join(timeout=5)
        self._threads.clear()
        self._stop.clear()

    def _worker_loop(self):
        while not self._stop.is_set():
            task_id = self.queue.get(timeout=0.2)
            if task_id is not None:
                self.process_task(task_id)

    # -- submission ---------------------------------------------------------

    def submit_task(self, owner: str, upload: bytes, filename: str, selection: LinkSelection) -> str:
        """Validate fail-fast, persist the upload, enqueue, return the id."""
        if len(upload) > self.max_upload_bytes:
            raise ServiceError(
                "PayloadTooLarge", f"upload exceeds {self.max_upload_bytes} bytes", 413
            )
        if not upload:
            raise ServiceError("MalformedUpload", "upload is empty", 400)
        if upload[:4] == b"PK\x03\x04":
            # cheap structural check now; full parsing happens in the worker
            from ..linkage import extract_csv_from_zip

            try:
                extract_csv_from_zip(upload)
            except CohortError as exc:
                raise ServiceError("MalformedUpload", exc.message, 400) from exc
        try:
            self._validate_selection(selection)
        except LinkageError as exc:
            raise ServiceError("InvalidSelection", exc.message, 422) from exc

        task_id = new_task_id()
        upload_path = self.data_dir / "uploads" / f"{task_id}.bin"
        upload_path.write_bytes(upload)
        now = self.clock()
        self.task_store.create(
            TaskRecord(
                task_id=task_id,
                owner=owner,
                filename=filename,
                selection=selection.to_json_dict(),
                status=QUEUED,
                created_at=now,
                updated_at=now,
                upload_path=str(upload_path),
            )
        )
        self.queue.put(task_id)
        return task_id

    def _validate_selection(self, selection: LinkSelection):
        if not selection.entries:
            raise LinkageError("InvalidSelection", "selection has no entries")
        for entry in selection.entries:
            try:
                descriptor = self.catalog.get_descriptor(entry.dataset_id)
            except Exception:
                raise LinkageError(
                    "UnknownDatasetYear", f"dataset {entry.dataset_id!r} is not registered"
                ) from None
            if entry.year not in descriptor.years:
                raise LinkageError(
                    "UnknownDatasetYear", f"{entry.dataset_id!r} has no year {entry.year}"
                )

    # -- execution ------------------------------------------------------------

    def process_task(self, task_id: str) -> bool:
        """Run one task to a terminal state; returns False if it was not QUEUED."""
        record = self.task_store.get(task_id)
        if record is None or record.status != QUEUED:
            return False
        try:
            record = self.task_store.transition(task_id, RUNNING, self.clock())
        except Exception:
            return False  # lost the race to another worker

        upload_path = Path(record.upload_path) if record.upload_path else None
        try:
            data = upload_path.read_bytes() if upload_path else b""
            cohort = parse_cohort(data)
            selection = LinkSelection.from_dict(record.selection)
            table, summary = link(cohort, selection, self.catalog, self.context)
            archive = write_output(table, summary, selection, self.catalog)
            result_path = self.data_dir / "results" / f"{task_id}.zip"
            result_path.write_bytes(archive)
            now = self.clock()
            self.task_store.transition(
                task_id,
                SUCCEEDED,
                now,
                expires_at=now + RETENTION,
                result_path=str(result_path),
            )
        except Exception as exc:
            reason = exc.message if isinstance(exc, CodedError) else str(exc)
            self.task_store.transition(task_id, FAILED, self.clock(), failure_reason=reason)
        finally:
            # uploads carry cohort data; remove them the moment they are consumed
            if upload_path and upload_path.exists():
                upload_path.unlink()
            final = self.task_store.get(task_id)
            if final is not None:
                self.attempts.append(self.notifier.notify(final))
        return True

    def run_once(self) -> bool:
        """Process a single queued task on the calling thread (test hook)."""
        task_id = self.queue.get()
        if task_id is None:
            return False
        return self.process_task(task_id)

    # -- retention --------------------------------------------------------------

    def sweep_expired(self, now: datetime | None = None) -> int:
        """Expire every SUCCEEDED task whose window has closed; idempotent."""
        now = now or self.clock()
        expired = 0
        for record in self.task_store.all_tasks():
            if record.status == SUCCEEDED and record.expires_at and record.expires_at <= now:
                result_path = record.result_path
                try:
                    self.task_store.transition(record.task_id, EXPIRED, now, result_path=None)
                except Exception:
                    continue  # someone else expired it first
                if result_path:
                    Path(result_path).unlink(missing_ok=True)
                expired += 1
        return expired

    # -- queries ------------------------------------------------------------------

    def get_tasks(self, owner: str) -> list[TaskRecord]:
        return self.task_store.list_for_owner(owner)

    def get_task(self, owner: str, task_id: str) -> TaskRecord:
        record = self.task_store.get(task_id)
        if record is None or record.owner != owner:
            # foreign tasks are indistinguishable from missing ones
            raise ServiceError("NotFound", f"no task {task_id}", 404)
        return record

    def download(self, owner: str, task_id: str) -> bytes:
        record = self.get_task(owner, task_id)
        now = self.clock()
        if record.status in (QUEUED, RUNNING):
            raise ServiceError("NotReady", f"task is {record.status}", 409)
        if record.status == FAILED:
            raise ServiceError("NotReady", f"task failed: {record.failure_reason}", 409)
        if record.status == EXPIRED or (record.expires_at and record.expires_at <= now):
            self.sweep_expired(now)  # lazy enforcement keeps disk and state in step
            raise ServiceError("Gone", "result expired and was permanently deleted", 410)
        if not record.result_path or not Path(record.result_path).is_file():
            raise ServiceError("NotFound", "result file missing", 404)
        return Path(record.result_path).read_bytes()
