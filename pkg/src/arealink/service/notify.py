"""Completion notifications.

The notification channel is pluggable: the default writes a structured
log line, and deployments wanting a push can point a webhook at any
HTTP collector. Delivery failures are recorded on the attempt and never
touch task state.
"""

from __future__ import annotations

import json
import logging
import urllib.request
from dataclasses import dataclass
from datetime import datetime

from .tasks import TaskRecord, utcnow

log = logging.getLogger("arealink.service")


@dataclass
class NotificationAttempt:
    task_id: str
    status: str
    channel: str
    ok: bool
    detail: str
    at: datetime


class LogNotifier:
    """Default channel: one structured log record per terminal task."""

    def notify(self, task: TaskRecord) -> NotificationAttempt:
        payload = {
            "event": "task_finished",
            "task_id": task.task_id,
            "status": task.status,
            "failure_reason": task.failure_reason,
        }
        log.info("task_finished %s", json.dumps(payload, sort_keys=True))
        return NotificationAttempt(
            task_id=task.task_id,
            status=task.status,
            channel="log",
            ok=True,
            detail="logged",
            at=utcnow(),
        )


class WebhookNotifier:
    """POSTs {task_id, status, failure_reason} JSON to a fixed URL."""

    def __init__(self, url: str, timeout: float = 5.0):
        self.url = url
        self.timeout = timeout

    def notify(self, task: TaskRecord) -> NotificationAttempt:
        body = json.dumps(
            {
                "task_id": task.task_id,
                "status": task.status,
                "failure_reason": task.failure_reason,
            }
        ).encode("utf-8")
        request = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                ok = 200 <= response.status < 300
                detail = f"HTTP {response.status}"
        except Exception as exc:  # delivery failure must not surface
            ok = False
            detail = str(exc)
        return NotificationAttempt(
            task_id=task.task_id,
            status=task.status,
            channel="webhook",
            ok=ok,
            detail=detail,
            at=utcnow(),
        )
