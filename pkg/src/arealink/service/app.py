"""HTTP surface of the linkage service.

JSON API, bearer-token auth, multipart upload. Errors always come back
as ``{"code": ..., "message": ...}`` with the matching HTTP status.
TLS termination and account management live outside this process.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import Depends, FastAPI, File, Form, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from ..catalog import CatalogStore, scale_from_name
from ..errors import CodedError, LinkageError
from ..linkage import LinkSelection
from .core import LinkageService, ServiceError
from .notify import LogNotifier, WebhookNotifier
from .tasks import SUCCEEDED, TaskRecord, TaskStore, utcnow


def task_view(record: TaskRecord, now) -> dict:
    """The task-table row: filename, create/update times, status, datasets,
    id, and whether the result is currently downloadable."""
    return {
        "task_id": record.task_id,
        "filename": record.filename,
        "created_at": record.created_at.isoformat(),
        "updated_at": record.updated_at.isoformat(),
        "status": record.status,
        "datasets": record.dataset_ids(),
        "selection": record.selection,
        "failure_reason": record.failure_reason,
        "expires_at": record.expires_at.isoformat() if record.expires_at else None,
        "download_available": (
            record.status == SUCCEEDED
            and record.expires_at is not None
            and now < record.expires_at
        ),
    }


def create_app(
    catalog: CatalogStore,
    service: LinkageService,
    tokens: dict[str, str],
) -> FastAPI:
    app = FastAPI(title="arealink service", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.service = service

    def authenticate(request: Request) -> str:
        header = request.headers.get("authorization", "")
        if header.lower().startswith("bearer "):
            token = header[7:].strip()
            owner = tokens.get(token)
            if owner:
                return owner
        raise ServiceError("Unauthorized", "missing or unknown bearer token", 401)

    @app.exception_handler(ServiceError)
    async def service_error_handler(_request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.http_status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(CodedError)
    async def coded_error_handler(_request, exc: CodedError):
        return JSONResponse(status_code=400, content={"code": exc.code, "message": exc.message})

    @app.get("/api/catalog")
    def list_catalog(scale: str | None = None, year: int | None = None, domain: str | None = None):
        parsed_scale = scale_from_name(scale) if scale else None
        descriptors = catalog.list_catalog(scale=parsed_scale, year=year, domain=domain)
        return [d.to_json_dict() for d in descriptors]

    @app.get("/api/catalog/{dataset_id}/variables")
    def list_variables(dataset_id: str):
        try:
            variables = catalog.get_variables(dataset_id)
        except CodedError as exc:
            raise ServiceError("NotFound", exc.message, 404) from exc
        return [
            {
                "name": v.name,
                "description": v.description,
                "unit": v.unit,
                "value_kind": v.value_kind,
                "concept_code": v.concept_code,
            }
            for v in variables
        ]

    @app.post("/api/tasks")
    async def submit_task(
        owner: str = Depends(authenticate),
        file: UploadFile = File(...),
        selection: str = Form(...),
    ):
        data = await file.read(service.max_upload_bytes + 1)
        if len(data) > service.max_upload_bytes:
            raise ServiceError(
                "PayloadTooLarge", f"upload exceeds {service.max_upload_bytes} bytes", 413
            )
        try:
            parsed = LinkSelection.from_json(selection)
        except LinkageError as exc:
            raise ServiceError("InvalidSelection", exc.message, 422) from exc
        task_id = service.submit_task(owner, data, file.filename or "upload.csv", parsed)
        return {"task_id": task_id}

    @app.get("/api/tasks")
    def get_tasks(owner: str = Depends(authenticate)):
        now = service.clock()
        return [task_view(t, now) for t in service.get_tasks(owner)]

    @app.get("/api/tasks/{task_id}")
    def get_task(task_id: str, owner: str = Depends(authenticate)):
        return task_view(service.get_task(owner, task_id), service.clock())

    @app.get("/api/tasks/{task_id}/download")
    def download(task_id: str, owner: str = Depends(authenticate)):
        data = service.download(owner, task_id)
        return Response(
            content=data,
            media_type="application/zip",
            headers={"Content-Disposition": f'attachment; filename="{task_id}.zip"'},
        )

    return app


def build_from_config(config) -> FastAPI:
    """Wire a full service from a ServiceConfig (used by the CLI)."""
    catalog = CatalogStore(config.catalog_dir)
    task_store = TaskStore(Path(config.data_dir) / "tasks.json")
    notifier = WebhookNotifier(config.webhook_url) if config.webhook_url else LogNotifier()
    service = LinkageService(
        catalog=catalog,
        task_store=task_store,
        data_dir=Path(config.data_dir),
        context=config.load_context(),
        clock=utcnow,
        notifier=notifier,
        max_upload_bytes=config.max_upload_mb * 1024 * 1024,
        worker_count=config.worker_count,
    )
    service.start_workers()
    return create_app(catalog, service, config.load_tokens())
