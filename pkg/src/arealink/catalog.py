"""File-backed catalog of area-level datasets.

Layout is one directory per dataset under the store root:

    <root>/<dataset_id>/
        manifest.json        dataset descriptor
        variables.csv        name,description,unit,value_kind,concept_code
        values/<year>.csv    geo_code,variable,value,quality_flag  (long form)

Values are kept as verbatim strings so heterogeneous sources round-trip
losslessly; typing happens at egress. Cells are immutable once written:
corrections mean a new dataset id, which keeps past linkage outputs
reproducible. Every batch commits through write-to-temp-then-rename.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import CatalogError
from .geo import GeoKey, GeoLevel, level_from_name

# Datasets keyed by monitor coordinates rather than an areal unit carry
# this sentinel instead of a GeoLevel; they are cataloged but cannot be
# joined by geographic key.
POINT_SCALE = "point"

SpatialScale = GeoLevel | str

DOMAINS = ("SDoH", "Environment")

_ID_RE = re.compile(r"^[a-z0-9][a-z0-9_\-]*$")

VARIABLES_HEADER = ["name", "description", "unit", "value_kind", "concept_code"]
VALUES_HEADER = ["geo_code", "variable", "value", "quality_flag"]
VALUE_KINDS = ("numeric", "categorical", "text")


def scale_from_name(name: str) -> SpatialScale:
    if name.strip().lower() == POINT_SCALE:
        return POINT_SCALE
    return level_from_name(name)


def scale_name(scale: SpatialScale) -> str:
    return scale.value if isinstance(scale, GeoLevel) else str(scale)


@dataclass
class DatasetDescriptor:
    id: str
    display_name: str
    source_org: str
    variable_count: int
    spatial_scale: SpatialScale
    domain: str
    years: list[int] = field(default_factory=list)
    vintage: str = ""
    access_note: str = ""
    source_url: str = ""

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "display_name": self.display_name,
            "source_org": self.source_org,
            "variable_count": self.variable_count,
            "spatial_scale": scale_name(self.spatial_scale),
            "domain": self.domain,
            "years": list(self.years),
            "vintage": self.vintage,
            "access_note": self.access_note,
            "source_url": self.source_url,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "DatasetDescriptor":
        return cls(
            id=doc["id"],
            display_name=doc["display_name"],
            source_org=doc["source_org"],
            variable_count=int(doc["variable_count"]),
            spatial_scale=scale_from_name(doc["spatial_scale"]),
            domain=doc["domain"],
            years=[int(y) for y in doc.get("years", [])],
            vintage=doc.get("vintage", ""),
            access_note=doc.get("access_note", ""),
            source_url=doc.get("source_url", ""),
        )


@dataclass
class VariableDescriptor:
    dataset_id: str
    name: str
    description: str = ""
    unit: str | None = None
    value_kind: str = "text"
    concept_code: str | None = None


@dataclass
class ValueRecord:
    dataset_id: str
    variable_name: str
    geo_key: GeoKey
    year: int
    value: str
    quality_flag: str | None = None


@dataclass
class WideTable:
    """query_values result: rows follow the requested geo order, columns the
    variable registration order; ``present[i]`` says whether geo i had any
    stored value for the year at all (missing cells stay empty strings)."""

    geo_codes: list[str]
    columns: list[str]
    cells: list[list[str]]
    present: list[bool]

    def cell(self, geo_code: str, column: str) -> str:
        return self.cells[self.geo_codes.index(geo_code)][self.columns.index(column)]


def _atomic_write(path: Path, data: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8", newline="")
    os.replace(tmp, path)


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")  # RFC 4180 line endings
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


class CatalogStore:
    """Single-writer, multi-reader catalog rooted at a directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    # -- paths ------------------------------------------------------------

    def _dataset_dir(self, dataset_id: str) -> Path:
        return self.root / dataset_id

    def _manifest_path(self, dataset_id: str) -> Path:
        return self._dataset_dir(dataset_id) / "manifest.json"

    def _variables_path(self, dataset_id: str) -> Path:
        return self._dataset_dir(dataset_id) / "variables.csv"

    def _values_path(self, dataset_id: str, year: int) -> Path:
        return self._dataset_dir(dataset_id) / "values" / f"{year}.csv"

    # -- registry ---------------------------------------------------------

    def dataset_ids(self) -> list[str]:
        if not self.root.is_dir():
            return []
        return sorted(
            p.name for p in self.root.iterdir() if (p / "manifest.json").is_file()
        )

    def has_dataset(self, dataset_id: str) -> bool:
        return self._manifest_path(dataset_id).is_file()

    def register_source(self, descriptor: DatasetDescriptor) -> str:
        if not _ID_RE.match(descriptor.id or ""):
            raise CatalogError(
                "InvalidDescriptor", f"dataset id {descriptor.id!r} is not a valid slug"
            )
        if not descriptor.display_name.strip() or not descriptor.source_org.strip():
            raise CatalogError("InvalidDescriptor", "display_name and source_org are required")
        if descriptor.domain not in DOMAINS:
            raise CatalogError("InvalidDescriptor", f"domain must be one of {DOMAINS}")
        if descriptor.variable_count < 0:
            raise CatalogError("InvalidDescriptor", "variable_count must be non-negative")
        with self._write_lock:
            if self.has_dataset(descriptor.id):
                raise CatalogError("DuplicateId", f"dataset {descriptor.id!r} already registered")
            ddir = self._dataset_dir(descriptor.id)
            (ddir / "values").mkdir(parents=True, exist_ok=True)
            _atomic_write(
                self._manifest_path(descriptor.id),
                json.dumps(descriptor.to_json_dict(), indent=2, sort_keys=True) + "\n",
            )
            if not self._variables_path(descriptor.id).exists():
                _atomic_write(self._variables_path(descriptor.id), _csv_text(VARIABLES_HEADER, []))
        return descriptor.id

    def get_descriptor(self, dataset_id: str) -> DatasetDescriptor:
        path = self._manifest_path(dataset_id)
        if not path.is_file():
            raise CatalogError("UnknownDataset", f"no dataset {dataset_id!r}")
        return DatasetDescriptor.from_json_dict(json.loads(path.read_text(encoding="utf-8")))

    def _save_descriptor(self, descriptor: DatasetDescriptor):
        _atomic_write(
            self._manifest_path(descriptor.id),
            json.dumps(descriptor.to_json_dict(), indent=2, sort_keys=True) + "\n",
        )

    # -- variables ----------------------------------------------------------

    def get_variables(self, dataset_id: str) -> list[VariableDescriptor]:
        path = self._variables_path(dataset_id)
        if not path.is_file():
            raise CatalogError("UnknownDataset", f"no dataset {dataset_id!r}")
        out = []
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                out.append(
                    VariableDescriptor(
                        dataset_id=dataset_id,
                        name=row["name"],
                        description=row["description"],
                        unit=row["unit"] or None,
                        value_kind=row["value_kind"],
                        concept_code=row["concept_code"] or None,
                    )
                )
        return out

    def add_variables(self, dataset_id: str, variables: list[VariableDescriptor]) -> int:
        """Register variables; all-or-nothing within one call."""
        with self._write_lock:
            existing = self.get_variables(dataset_id)  # raises UnknownDataset
            seen = {v.name for v in existing}
            for var in variables:
                if var.value_kind not in VALUE_KINDS:
                    raise CatalogError(
                        "InvalidDescriptor", f"value_kind {var.value_kind!r} for {var.name!r}"
                    )
                if var.name in seen:
                    raise CatalogError(
                        "DuplicateVariable", f"variable {var.name!r} already registered"
                    )
                seen.add(var.name)
            rows = [
                [v.name, v.description, v.unit or "", v.value_kind, v.concept_code or ""]
                for v in existing + list(variables)
            ]
            _atomic_write(self._variables_path(dataset_id), _csv_text(VARIABLES_HEADER, rows))
            # variable_count tracks what is actually registered from now on.
            descriptor = self.get_descriptor(dataset_id)
            self._save_descriptor(replace(descriptor, variable_count=len(rows)))
        return len(variables)

    # -- values ------------------------------------------------------------

    def store_values(self, dataset_id: str, year: int, records: list[ValueRecord]) -> int:
        """Persist a batch of cells; validates everything before writing."""
        with self._write_lock:
            descriptor = self.get_descriptor(dataset_id)
            known = {v.name for v in self.get_variables(dataset_id)}
            scale = descriptor.spatial_scale
            if scale == POINT_SCALE:
                raise CatalogError(
                    "LevelMismatch", f"dataset {dataset_id!r} is point-scale, not areal"
                )

            path = self._values_path(dataset_id, year)
            existing_rows: list[list[str]] = []
            existing_cells: set[tuple[str, str]] = set()
            if path.is_file():
                with path.open(newline="", encoding="utf-8") as fh:
                    reader = csv.reader(fh)
                    next(reader, None)
                    for row in reader:
                        existing_rows.append(row)
                        existing_cells.add((row[0], row[1]))

            batch: list[list[str]] = []
            batch_cells: set[tuple[str, str]] = set()
            for rec in records:
                if rec.variable_name not in known:
                    raise CatalogError(
                        "UnknownVariable", f"variable {rec.variable_name!r} not registered"
                    )
                if rec.geo_key.level is not scale:
                    raise CatalogError(
                        "LevelMismatch",
                        f"{rec.geo_key.level} key in {scale_name(scale)}-scale dataset",
                    )
                cell = (rec.geo_key.code, rec.variable_name)
                if cell in existing_cells or cell in batch_cells:
                    raise CatalogError(
                        "DuplicateCell",
                        f"cell ({rec.variable_name}, {rec.geo_key.code}, {year}) already stored",
                    )
                batch_cells.add(cell)
                batch.append(
                    [rec.geo_key.code, rec.variable_name, rec.value, rec.quality_flag or ""]
                )

            path.parent.mkdir(parents=True, exist_ok=True)
            _atomic_write(path, _csv_text(VALUES_HEADER, existing_rows + batch))
            if year not in descriptor.years:
                self._save_descriptor(
                    replace(descriptor, years=sorted(descriptor.years + [year]))
                )
        return len(batch)

    def query_values(
        self,
        dataset_id: str,
        year: int,
        geo_keys: list[GeoKey],
        variable_names: list[str] | None = None,
    ) -> WideTable:
        """Pivot stored long-form cells into a wide table.

        ``variable_names=None`` means every registered variable. Missing
        cells come back as empty strings, never fabricated values.
        """
        descriptor = self.get_descriptor(dataset_id)
        if year not in descriptor.years:
            raise CatalogError("UnknownYear", f"dataset {dataset_id!r} has no year {year}")
        registered = [v.name for v in self.get_variables(dataset_id)]
        if variable_names is None:
            columns = registered
        else:
            wanted = set(variable_names)
            unknown = wanted - set(registered)
            if unknown:
                raise CatalogError("UnknownVariable", f"unknown variables {sorted(unknown)}")
            columns = [name for name in registered if name in wanted]

        col_index = {name: i for i, name in enumerate(columns)}
        geo_codes = [k.code for k in geo_keys]
        row_index: dict[str, int] = {}
        for i, code in enumerate(geo_codes):
            row_index.setdefault(code, i)
        cells = [[""] * len(columns) for _ in geo_codes]
        present = [False] * len(geo_codes)

        with self._values_path(dataset_id, year).open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader, None)
            for row in reader:
                i = row_index.get(row[0])
                if i is None:
                    continue
                present[i] = True
                j = col_index.get(row[1])
                if j is not None:
                    cells[i][j] = row[2]
        # Duplicate geo_keys in the request share one parse of the file.
        for i, code in enumerate(geo_codes):
            first = row_index[code]
            if first != i:
                cells[i] = list(cells[first])
                present[i] = present[first]
        return WideTable(geo_codes=geo_codes, columns=columns, cells=cells, present=present)

    def geo_codes_with_values(self, dataset_id: str, year: int) -> set[str]:
        descriptor = self.get_descriptor(dataset_id)
        if year not in descriptor.years:
            raise CatalogError("UnknownYear", f"dataset {dataset_id!r} has no year {year}")
        path = self._values_path(dataset_id, year)
        codes: set[str] = set()
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader, None)
            for row in reader:
                codes.add(row[0])
        return codes

    # -- listing -------------------------------------------------------------

    def list_catalog(
        self,
        scale: SpatialScale | None = None,
        year: int | None = None,
        domain: str | None = None,
    ) -> list[DatasetDescriptor]:
        """Conjunctive filter over all descriptors, ordered by display name."""
        out = []
        for dataset_id in self.dataset_ids():
            d = self.get_descriptor(dataset_id)
            if scale is not None and d.spatial_scale != scale:
                continue
            if year is not None and year not in d.years:
                continue
            if domain is not None and d.domain != domain:
                continue
            out.append(d)
        out.sort(key=lambda d: (d.display_name, d.id))
        return out
