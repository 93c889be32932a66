from .app import build_from_config, create_app
from .config import ServiceConfig
from .core import LinkageService, ServiceError
from .notify import LogNotifier, NotificationAttempt, WebhookNotifier
from .tasks import (
    ALLOWED_TRANSITIONS,
    EXPIRED,
    FAILED,
    QUEUED,
    RETENTION,
    RUNNING,
    SUCCEEDED,
    TASK_STATUSES,
    IllegalTransition,
    TaskRecord,
    TaskStore,
    new_task_id,
    utcnow,
)

__all__ = [
    "ALLOWED_TRANSITIONS",
    "EXPIRED",
    "FAILED",
    "QUEUED",
    "RETENTION",
    "RUNNING",
    "SUCCEEDED",
    "TASK_STATUSES",
    "IllegalTransition",
    "LinkageService",
    "LogNotifier",
    "NotificationAttempt",
    "ServiceConfig",
    "ServiceError",
    "TaskRecord",
    "TaskStore",
    "WebhookNotifier",
    "build_from_config",
    "create_app",
    "new_task_id",
    "utcnow",
]
