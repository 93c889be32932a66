"""CSV-to-catalog ingest: register, infer variable kinds, load values.

Sources arrive as wide CSVs (one row per geography). Each included
column becomes a registered variable whose kind is inferred from its
cells: numeric if every non-missing cell parses as a decimal number,
categorical if it has at most 20 distinct values, text otherwise. Rows
whose geographic code will not parse (even leniently) are skipped and
counted, never half-stored.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .catalog import (
    POINT_SCALE,
    CatalogStore,
    DatasetDescriptor,
    ValueRecord,
    VariableDescriptor,
)
from .errors import CatalogError, GeoKeyError, IngestError
from .geo import GeoKey, clean_code, parse_geo_key

DEFAULT_NA_TOKENS = ("", "NA", "NULL", ".", "-999")

# Distinct-value ceiling below which a non-numeric column is treated as
# categorical rather than free text. Arbitrary but fixed; the inferred
# kind lands in the report so consumers can audit it.
CATEGORICAL_MAX_DISTINCT = 20


@dataclass
class IngestManifest:
    """Instructions for one source file: where the keys and years live."""

    descriptor: DatasetDescriptor
    geo_column: str
    year: int | None = None
    year_column: str | None = None
    include_columns: list[str] | None = None  # None = all non-key columns
    na_tokens: tuple[str, ...] = DEFAULT_NA_TOKENS

    def __post_init__(self):
        if (self.year is None) == (self.year_column is None):
            raise IngestError(
                "BadManifest", "exactly one of year / year_column must be given"
            )

    @classmethod
    def from_json(cls, text: str | bytes) -> "IngestManifest":
        doc = json.loads(text)
        return cls(
            descriptor=DatasetDescriptor.from_json_dict(doc["descriptor"]),
            geo_column=doc["geo_column"],
            year=doc.get("year"),
            year_column=doc.get("year_column"),
            include_columns=doc.get("include_columns"),
            na_tokens=tuple(doc.get("na_tokens", DEFAULT_NA_TOKENS)),
        )


@dataclass
class IngestReport:
    rows_read: int = 0
    values_stored: int = 0
    invalid_geo_rows: int = 0
    invalid_geo_samples: list[str] = field(default_factory=list)  # first 100 offenders
    padded_geo_rows: int = 0
    na_cells: int = 0
    inferred_kinds: dict[str, str] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "values_stored": self.values_stored,
            "invalid_geo_rows": self.invalid_geo_rows,
            "invalid_geo_samples": self.invalid_geo_samples,
            "padded_geo_rows": self.padded_geo_rows,
            "na_cells": self.na_cells,
            "inferred_kinds": self.inferred_kinds,
        }


def _is_decimal(text: str) -> bool:
    cleaned = text.strip()
    if not cleaned:
        return False
    try:
        float(cleaned)
    except ValueError:
        return False
    # float() also accepts inf/nan spellings; those are not data values.
    return not cleaned.lower().lstrip("+-").startswith(("inf", "nan"))


def infer_value_kind(cells: list[str]) -> str:
    """Kind of a column from its non-missing cells (order-insensitive)."""
    if cells and all(_is_decimal(c) for c in cells):
        return "numeric"
    if len(set(cells)) <= CATEGORICAL_MAX_DISTINCT:
        return "categorical"
    return "text"


def ingest_dataset(
    manifest: IngestManifest, csv_data: bytes | str, store: CatalogStore
) -> IngestReport:
    """Run the full extract-transform-load for one source CSV."""
    text = csv_data.decode("utf-8-sig") if isinstance(csv_data, bytes) else csv_data
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or not any(cell.strip() for cell in header):
        raise IngestError("HeaderlessCsv", "source CSV has no header row")
    if manifest.geo_column not in header:
        raise IngestError(
            "MissingGeoColumn", f"no column {manifest.geo_column!r} in header {header}"
        )
    if manifest.year_column is not None and manifest.year_column not in header:
        raise IngestError(
            "MissingGeoColumn", f"no year column {manifest.year_column!r} in header"
        )

    descriptor = manifest.descriptor
    scale = descriptor.spatial_scale
    if scale == POINT_SCALE:
        raise IngestError(
            "BadManifest", "point-scale sources cannot be ingested as areal values"
        )

    key_columns = {manifest.geo_column}
    if manifest.year_column:
        key_columns.add(manifest.year_column)
    if manifest.include_columns is None:
        columns = [c for c in header if c not in key_columns]
    else:
        missing = [c for c in manifest.include_columns if c not in header]
        if missing:
            raise IngestError("MissingColumn", f"include_columns not in header: {missing}")
        columns = list(manifest.include_columns)

    geo_idx = header.index(manifest.geo_column)
    year_idx = header.index(manifest.year_column) if manifest.year_column else None
    col_idx = [header.index(c) for c in columns]
    na_tokens = set(manifest.na_tokens)

    report = IngestReport()
    valid: list[tuple[GeoKey, int, list[str]]] = []  # (key, year, row cells)
    for row in reader:
        if not row or not any(cell.strip() for cell in row):
            continue
        report.rows_read += 1
        raw_geo = row[geo_idx] if geo_idx < len(row) else ""
        try:
            key = parse_geo_key(raw_geo, scale, lenient=True)
        except GeoKeyError:
            report.invalid_geo_rows += 1
            if len(report.invalid_geo_samples) < 100:
                report.invalid_geo_samples.append(raw_geo)
            continue
        if len(clean_code(raw_geo)) == scale.width - 1:
            report.padded_geo_rows += 1
        if year_idx is not None:
            raw_year = row[year_idx] if year_idx < len(row) else ""
            try:
                year = int(raw_year.strip())
            except ValueError:
                raise IngestError(
                    "BadYearValue", f"unparseable year {raw_year!r} for geo {key.code}"
                ) from None
        else:
            year = manifest.year  # type: ignore[assignment]
        cells = [row[i] if i < len(row) else "" for i in col_idx]
        valid.append((key, year, cells))

    if report.rows_read == 0:
        raise IngestError("AllRowsInvalid", "source CSV has no data rows")
    if not valid:
        raise IngestError(
            "AllRowsInvalid", f"all {report.rows_read} rows had unparseable geo codes"
        )

    # Kind inference sees every non-missing cell of nothing but the valid rows.
    for j, name in enumerate(columns):
        non_na = [cells[j] for _, _, cells in valid if cells[j] not in na_tokens]
        report.inferred_kinds[name] = infer_value_kind(non_na)

    # Assemble the full value batch (and catch in-source duplicates)
    # before touching the store, so a failed ingest registers nothing.
    by_year: dict[int, list[ValueRecord]] = {}
    seen_cells: set[tuple[int, str, str]] = set()
    for key, year, cells in valid:
        for name, cell in zip(columns, cells):
            if cell in na_tokens:
                report.na_cells += 1
                continue
            ident = (year, key.code, name)
            if ident in seen_cells:
                raise CatalogError(
                    "DuplicateCell", f"source repeats ({name}, {key.code}, {year})"
                )
            seen_cells.add(ident)
            by_year.setdefault(year, []).append(
                ValueRecord(
                    dataset_id=descriptor.id,
                    variable_name=name,
                    geo_key=key,
                    year=year,
                    value=cell,
                )
            )

    if store.has_dataset(descriptor.id):
        stored = store.get_descriptor(descriptor.id)
        if store.get_variables(descriptor.id):
            raise IngestError(
                "AlreadyIngested", f"dataset {descriptor.id!r} already has variables"
            )
        if stored.spatial_scale != scale:
            raise CatalogError(
                "LevelMismatch",
                f"registered scale differs from manifest for {descriptor.id!r}",
            )
    else:
        store.register_source(descriptor)

    store.add_variables(
        descriptor.id,
        [
            VariableDescriptor(
                dataset_id=descriptor.id, name=name, value_kind=report.inferred_kinds[name]
            )
            for name in columns
        ],
    )
    for year in sorted(by_year):
        report.values_stored += store.store_values(descriptor.id, year, by_year[year])
    return report
