"""Service configuration loaded from a JSON file.

Example:

    {
      "bind_host": "127.0.0.1",
      "bind_port": 8800,
      "data_dir": "/var/lib/arealink/service",
      "catalog_dir": "/var/lib/arealink/catalog",
      "index_dir": "/var/lib/arealink/boundaries",
      "crosswalks": [{"file": "tract_zcta.csv", "from": "tract", "to": "zcta"}],
      "token_file": "/etc/arealink/tokens.json",
      "worker_count": 2,
      "max_upload_mb": 512,
      "webhook_url": null
    }

The token file maps bearer tokens to owner identities:
``{"s3cret-token": "alice"}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import CodedError
from ..geo import GeoLevel, level_from_name
from ..linkage import ResolverContext
from ..spatial import SpatialIndex, load_crosswalk_csv


@dataclass
class ServiceConfig:
    data_dir: Path
    catalog_dir: Path
    token_file: Path
    bind_host: str = "127.0.0.1"
    bind_port: int = 8800
    index_dir: Path | None = None
    crosswalks: list[dict] = field(default_factory=list)
    worker_count: int = 2
    max_upload_mb: int = 512
    webhook_url: str | None = None

    @classmethod
    def load(cls, path: str | Path) -> "ServiceConfig":
        path = Path(path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        base = path.parent

        def resolve(p):
            return (base / p).resolve() if p and not Path(p).is_absolute() else Path(p)

        missing = [k for k in ("data_dir", "catalog_dir", "token_file") if k not in doc]
        if missing:
            raise CodedError("BadConfig", f"config missing keys: {missing}")
        return cls(
            data_dir=resolve(doc["data_dir"]),
            catalog_dir=resolve(doc["catalog_dir"]),
            token_file=resolve(doc["token_file"]),
            bind_host=doc.get("bind_host", "127.0.0.1"),
            bind_port=int(doc.get("bind_port", 8800)),
            index_dir=resolve(doc["index_dir"]) if doc.get("index_dir") else None,
            crosswalks=doc.get("crosswalks", []),
            worker_count=int(doc.get("worker_count", 2)),
            max_upload_mb=int(doc.get("max_upload_mb", 512)),
            webhook_url=doc.get("webhook_url"),
        )

    def load_tokens(self) -> dict[str, str]:
        return json.loads(self.token_file.read_text(encoding="utf-8"))

    def load_context(self) -> ResolverContext:
        """Load the tract index and any crosswalk files named in the config."""
        tract_index = None
        if self.index_dir:
            idx_path = Path(self.index_dir) / "tract.idx"
            if idx_path.is_file():
                tract_index = SpatialIndex.from_bytes(idx_path.read_bytes())
        crosswalks: dict[GeoLevel, object] = {}
        for spec in self.crosswalks:
            from_level = level_from_name(spec["from"])
            to_level = level_from_name(spec["to"])
            file_path = Path(spec["file"])
            if not file_path.is_absolute():
                file_path = self.token_file.parent / file_path
            xw = load_crosswalk_csv(file_path.read_text(encoding="utf-8"), from_level, to_level)
            crosswalks[to_level] = xw
        return ResolverContext(tract_index=tract_index, crosswalks=crosswalks)
