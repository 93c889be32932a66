"""Batch linkage of geocoded cohort files to cataloged datasets.

A cohort row carries either an areal code (FIPS-style column) or a
coordinate pair. Each selected dataset is joined at its own spatial
scale: direct key match, prefix truncation up the hierarchy, or a
highest-weight crosswalk hop for ZCTA/CBSA targets. Rows are never
dropped -- every (row, dataset) pair gets exactly one link status --
and the whole engine works on local byte streams only; nothing here
imports or opens sockets.
"""

from __future__ import annotations

import csv
import io
import json
import time
import zipfile
from dataclasses import dataclass, field

from .catalog import POINT_SCALE, CatalogStore
from .errors import CohortError, GeoKeyError, LinkageError
from .geo import GeoKey, GeoLevel, LonLat, clean_code, parent, parse_geo_key
from .spatial import Crosswalk, SpatialIndex, crosswalk_lookup

MATCHED = "MATCHED"
NO_DATA_FOR_GEO = "NO_DATA_FOR_GEO"
UNMATCHED_GEOMETRY = "UNMATCHED_GEOMETRY"
BAD_KEY = "BAD_KEY"
LINK_STATUSES = (MATCHED, NO_DATA_FOR_GEO, UNMATCHED_GEOMETRY, BAD_KEY)

_FIPS_COLUMN_NAMES = ("fips", "geoid", "fips11", "tract_fips")
_LON_COLUMN_NAMES = ("lon", "lng", "longitude")
_LAT_COLUMN_NAMES = ("lat", "latitude")

_WIDTH_LEVELS = {
    2: GeoLevel.STATE,
    5: GeoLevel.COUNTY,
    11: GeoLevel.TRACT,
    12: GeoLevel.BLOCK_GROUP,
}


@dataclass(frozen=True)
class FipsColumn:
    name: str
    level: GeoLevel


@dataclass(frozen=True)
class LonLatColumns:
    lon_name: str
    lat_name: str


KeyMode = FipsColumn | LonLatColumns


@dataclass
class Cohort:
    columns: list[str]
    rows: list[list[str]]
    key_mode: KeyMode
    detection_note: str = ""


@dataclass(frozen=True)
class SelectionEntry:
    dataset_id: str
    year: int
    variables: tuple[str, ...] | None = None  # None = all registered


@dataclass
class LinkSelection:
    entries: list[SelectionEntry]

    @classmethod
    def from_json(cls, text: str | bytes) -> "LinkSelection":
        try:
            doc = json.loads(text)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise LinkageError("InvalidSelection", f"selection is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc) -> "LinkSelection":
        raw_entries = doc.get("entries") if isinstance(doc, dict) else None
        if not isinstance(raw_entries, list) or not raw_entries:
            raise LinkageError("InvalidSelection", 'selection needs a non-empty "entries" list')
        entries = []
        for raw in raw_entries:
            try:
                variables = raw.get("variables")
                entries.append(
                    SelectionEntry(
                        dataset_id=str(raw["dataset_id"]),
                        year=int(raw["year"]),
                        variables=tuple(variables) if variables else None,
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise LinkageError("InvalidSelection", f"bad selection entry {raw!r}") from exc
        return cls(entries=entries)

    def to_json_dict(self) -> dict:
        return {
            "entries": [
                {
                    "dataset_id": e.dataset_id,
                    "year": e.year,
                    "variables": list(e.variables) if e.variables else None,
                }
                for e in self.entries
            ]
        }


@dataclass
class LinkedTable:
    header: list[str]
    rows: list[list[str]]
    # (column name, dataset_id, variable name) for every emitted variable column
    variable_columns: list[tuple[str, str, str]] = field(default_factory=list)


@dataclass
class LinkSummary:
    total_rows: int
    per_dataset: dict[str, dict[str, int]]
    duration_seconds: float = 0.0

    def to_json_dict(self) -> dict:
        # duration deliberately excluded: the archive must be byte-reproducible
        return {"total_rows": self.total_rows, "per_dataset": self.per_dataset}


@dataclass
class ResolverContext:
    """Spatial machinery the engine may need: a tract-level index for
    coordinate cohorts and tract-to-{zcta,cbsa} crosswalks."""

    tract_index: SpatialIndex | None = None
    crosswalks: dict[GeoLevel, Crosswalk] = field(default_factory=dict)


# --- cohort parsing -----------------------------------------------------------


def extract_csv_from_zip(data: bytes) -> bytes:
    try:
        archive = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile as exc:
        raise CohortError("MalformedCsv", f"not a readable ZIP archive: {exc}") from exc
    csv_names = [
        n
        for n in archive.namelist()
        if n.lower().endswith(".csv") and not n.endswith("/") and not n.startswith("__MACOSX")
    ]
    if len(csv_names) > 1:
        raise CohortError("MultipleCsvInZip", f"archive holds {len(csv_names)} CSV entries")
    if not csv_names:
        raise CohortError("EmptyFile", "archive holds no CSV entry")
    return archive.read(csv_names[0])


def _implied_level(values: list[str]) -> GeoLevel:
    """Majority vote over value widths; exact width wins over the
    one-short (lost leading zero) reading, and stray garbage values
    cannot flip the result."""
    votes: dict[GeoLevel, int] = {}
    seen_any = False
    for v in values:
        cleaned = clean_code(v)
        if not cleaned:
            continue
        seen_any = True
        w = len(cleaned)
        level = _WIDTH_LEVELS.get(w) or _WIDTH_LEVELS.get(w + 1)
        if level is not None:
            votes[level] = votes.get(level, 0) + 1
    if not seen_any:
        raise CohortError("NoKeyColumns", "key column is entirely empty")
    if not votes:
        raise CohortError("BadKeyWidth", "no key value has a recognizable code width")
    return max(votes, key=lambda lvl: (votes[lvl], lvl.width))


def parse_cohort(data: bytes, key_mode: KeyMode | None = None) -> Cohort:
    """Read a CSV (or ZIP holding exactly one CSV) into a Cohort.

    With no declared key mode, columns are auto-detected: a FIPS-style
    name selects areal-key mode at the level its value widths imply, a
    lon/lat pair selects coordinate mode, and having both available is
    an error rather than a guess.
    """
    if not data:
        raise CohortError("EmptyFile", "upload is empty")
    if data[:4] == b"PK\x03\x04":
        data = extract_csv_from_zip(data)
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise CohortError("MalformedCsv", f"not UTF-8 text: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or not any(cell.strip() for cell in header):
        raise CohortError("EmptyFile", "cohort CSV has no header row")
    rows = [row + [""] * (len(header) - len(row)) for row in reader if any(c.strip() for c in row)]
    if not rows:
        raise CohortError("EmptyFile", "cohort CSV has no data rows")

    lowered = {name.strip().lower(): i for i, name in enumerate(header)}
    note = "declared key mode"
    if key_mode is None:
        fips_name = next((n for n in _FIPS_COLUMN_NAMES if n in lowered), None)
        lon_name = next((n for n in _LON_COLUMN_NAMES if n in lowered), None)
        lat_name = next((n for n in _LAT_COLUMN_NAMES if n in lowered), None)
        if fips_name and lon_name and lat_name:
            raise CohortError(
                "AmbiguousKeys", "both a FIPS column and lon/lat columns present; declare one"
            )
        if fips_name:
            idx = lowered[fips_name]
            level = _implied_level([row[idx] for row in rows])
            key_mode = FipsColumn(header[idx], level)
            note = f"auto: column {header[idx]!r} at level {level}"
        elif lon_name and lat_name:
            key_mode = LonLatColumns(header[lowered[lon_name]], header[lowered[lat_name]])
            note = f"auto: coordinates ({key_mode.lon_name}, {key_mode.lat_name})"
        else:
            raise CohortError("NoKeyColumns", f"no key columns found in header {header}")

    if isinstance(key_mode, FipsColumn):
        if key_mode.name not in header:
            raise CohortError("NoKeyColumns", f"declared column {key_mode.name!r} not in header")
    else:
        for name in (key_mode.lon_name, key_mode.lat_name):
            if name not in header:
                raise CohortError("NoKeyColumns", f"declared column {name!r} not in header")
    return Cohort(columns=header, rows=rows, key_mode=key_mode, detection_note=note)


# --- linking ------------------------------------------------------------------


_HIERARCHY_ORDER = [GeoLevel.STATE, GeoLevel.COUNTY, GeoLevel.TRACT, GeoLevel.BLOCK_GROUP]


def _base_level(cohort: Cohort) -> GeoLevel:
    if isinstance(cohort.key_mode, FipsColumn):
        return cohort.key_mode.level
    return GeoLevel.TRACT  # coordinates resolve through the tract layer


def _validate_selection(
    cohort: Cohort, selection: LinkSelection, store: CatalogStore, context: ResolverContext
):
    """Fail-fast checks; nothing row-level happens until these all pass."""
    if not selection.entries:
        raise LinkageError("InvalidSelection", "selection has no entries")
    base = _base_level(cohort)
    if isinstance(cohort.key_mode, LonLatColumns):
        if context.tract_index is None:
            raise LinkageError(
                "MissingIndex", "coordinate cohorts need a tract-level spatial index"
            )
        if context.tract_index.level is not GeoLevel.TRACT:
            raise LinkageError(
                "MissingIndex", f"index is {context.tract_index.level}-level, need tract"
            )
    for entry in selection.entries:
        try:
            descriptor = store.get_descriptor(entry.dataset_id)
        except Exception:
            raise LinkageError(
                "UnknownDatasetYear", f"dataset {entry.dataset_id!r} is not registered"
            ) from None
        if entry.year not in descriptor.years:
            raise LinkageError(
                "UnknownDatasetYear", f"{entry.dataset_id!r} has no year {entry.year}"
            )
        if entry.variables:
            known = {v.name for v in store.get_variables(entry.dataset_id)}
            unknown = set(entry.variables) - known
            if unknown:
                raise LinkageError(
                    "UnknownDatasetYear",
                    f"{entry.dataset_id!r} has no variables {sorted(unknown)}",
                )
        scale = descriptor.spatial_scale
        if scale == POINT_SCALE:
            raise LinkageError(
                "UnlinkableScale",
                f"{entry.dataset_id!r} is keyed by monitor coordinates, not areal units",
            )
        if scale == base:
            continue
        if scale in (GeoLevel.ZCTA, GeoLevel.CBSA):
            xw = context.crosswalks.get(scale)
            if xw is None or xw.from_level is not base or xw.to_level is not scale:
                raise LinkageError(
                    "MissingCrosswalk",
                    f"{entry.dataset_id!r} needs a {base}->{scale} crosswalk",
                )
            continue
        if scale.hierarchical and base.hierarchical:
            if _HIERARCHY_ORDER.index(scale) < _HIERARCHY_ORDER.index(base):
                continue  # ancestor scale, derivable via prefix truncation
        raise LinkageError(
            "UnlinkableScale", f"cannot derive {scale} keys from {base}-keyed rows"
        )


def _resolved_column_levels(base: GeoLevel) -> list[GeoLevel]:
    if not base.hierarchical:
        return []
    pos = _HIERARCHY_ORDER.index(base)
    wanted = [GeoLevel.TRACT, GeoLevel.COUNTY, GeoLevel.STATE]
    return [lvl for lvl in wanted if _HIERARCHY_ORDER.index(lvl) <= pos]


def link(
    cohort: Cohort,
    selection: LinkSelection,
    store: CatalogStore,
    context: ResolverContext | None = None,
) -> tuple[LinkedTable, LinkSummary]:
    """Join every cohort row against every selected dataset.

    Output preserves row count and order. Appended columns: resolved
    hierarchy keys, then per dataset one column per selected variable
    (named <dataset_id>.<variable>) plus <dataset_id>.link_status.
    """
    context = context or ResolverContext()
    started = time.perf_counter()
    _validate_selection(cohort, selection, store, context)
    base = _base_level(cohort)

    # Base key per row, memoized on the raw cell text.
    base_codes: list[str | None] = []  # code string, or None when unresolvable
    row_status: list[str] = []  # provisional status when base key is missing
    if isinstance(cohort.key_mode, FipsColumn):
        idx = cohort.columns.index(cohort.key_mode.name)
        cache: dict[str, str | None] = {}
        for row in cohort.rows:
            raw = row[idx]
            if raw in cache:
                code = cache[raw]
            else:
                try:
                    code = parse_geo_key(raw, base, lenient=True).code
                except GeoKeyError:
                    code = None
                cache[raw] = code
            base_codes.append(code)
            row_status.append("" if code is not None else BAD_KEY)
    else:
        lon_idx = cohort.columns.index(cohort.key_mode.lon_name)
        lat_idx = cohort.columns.index(cohort.key_mode.lat_name)
        index = context.tract_index
        assert index is not None  # _validate_selection guarantees it
        for row in cohort.rows:
            try:
                point = LonLat(float(row[lon_idx]), float(row[lat_idx]))
            except (TypeError, ValueError):
                base_codes.append(None)
                row_status.append(BAD_KEY)
                continue
            key = index.resolve_point(point)
            base_codes.append(key.code if key else None)
            row_status.append("" if key else UNMATCHED_GEOMETRY)

    resolved_levels = _resolved_column_levels(base)

    header = list(cohort.columns)
    header.extend(f"resolved_{lvl.value}" for lvl in resolved_levels)
    variable_columns: list[tuple[str, str, str]] = []
    per_entry_meta = []
    for entry in selection.entries:
        descriptor = store.get_descriptor(entry.dataset_id)
        registered = [v.name for v in store.get_variables(entry.dataset_id)]
        if entry.variables is None:
            names = registered
        else:
            wanted = set(entry.variables)
            names = [n for n in registered if n in wanted]
        for name in names:
            variable_columns.append((f"{entry.dataset_id}.{name}", entry.dataset_id, name))
        header.extend(f"{entry.dataset_id}.{name}" for name in names)
        header.append(f"{entry.dataset_id}.link_status")
        per_entry_meta.append((entry, descriptor.spatial_scale, names))
    if len(set(header)) != len(header):
        dupes = sorted({c for c in header if header.count(c) > 1})
        raise LinkageError("ColumnCollision", f"output column names collide: {dupes}")

    # Dataset-scale key per distinct base code, then one bulk fetch per entry.
    summary_counts = {e.dataset_id: {s: 0 for s in LINK_STATUSES} for e in selection.entries}
    entry_rows = []  # (per-row dataset codes, code -> (cells, present), variable names)
    for entry, scale, names in per_entry_meta:
        derive: dict[str, str | None] = {}
        for code in base_codes:
            if code is None or code in derive:
                continue
            if scale == base:
                derive[code] = code
            elif isinstance(scale, GeoLevel) and scale.hierarchical:
                derive[code] = code[: scale.width]
            else:
                pairs = crosswalk_lookup(context.crosswalks[scale], GeoKey(base, code))
                if not pairs:
                    derive[code] = None
                else:
                    # highest weight, ties broken toward the smaller code
                    best = min(pairs, key=lambda p: (-p[1], p[0].code))
                    derive[code] = best[0].code
        dataset_codes = [derive.get(c) if c is not None else None for c in base_codes]
        unique = []
        seen = set()
        for code in dataset_codes:
            if code is not None and code not in seen:
                seen.add(code)
                unique.append(GeoKey(scale, code))
        wide = store.query_values(
            entry.dataset_id,
            entry.year,
            unique,
            list(entry.variables) if entry.variables else None,
        )
        lookup = {
            code: (wide.cells[i], wide.present[i]) for i, code in enumerate(wide.geo_codes)
        }
        entry_rows.append((dataset_codes, lookup, names))

    empty_by_entry = [[""] * len(names) for _, _, names in entry_rows]
    out_rows: list[list[str]] = []
    for i, row in enumerate(cohort.rows):
        code = base_codes[i]
        out = list(row)
        for lvl in resolved_levels:
            out.append(code[: lvl.width] if code is not None else "")
        for j, (dataset_codes, lookup, names) in enumerate(entry_rows):
            entry = selection.entries[j]
            dcode = dataset_codes[i]
            if code is None:
                status = row_status[i]
                out.extend(empty_by_entry[j])
            elif dcode is None:
                status = UNMATCHED_GEOMETRY
                out.extend(empty_by_entry[j])
            else:
                cells, present = lookup[dcode]
                if present:
                    status = MATCHED
                    out.extend(cells)
                else:
                    status = NO_DATA_FOR_GEO
                    out.extend(empty_by_entry[j])
            out.append(status)
            summary_counts[entry.dataset_id][status] += 1
        out_rows.append(out)

    table = LinkedTable(header=header, rows=out_rows, variable_columns=variable_columns)
    summary = LinkSummary(
        total_rows=len(out_rows),
        per_dataset=summary_counts,
        duration_seconds=time.perf_counter() - started,
    )
    return table, summary


# --- output packaging ---------------------------------------------------------


def _csv_bytes(header: list[str], rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def write_output(
    table: LinkedTable,
    summary: LinkSummary,
    selection: LinkSelection,
    store: CatalogStore,
) -> bytes:
    """Package linked.csv + summary.json + dictionary.csv as a ZIP.

    Entry order is fixed and timestamps are zeroed so identical inputs
    produce identical archive bytes.
    """
    dictionary_rows = []
    variables_by_dataset: dict[str, dict[str, object]] = {}
    for column, dataset_id, variable in table.variable_columns:
        if dataset_id not in variables_by_dataset:
            variables_by_dataset[dataset_id] = {
                v.name: v for v in store.get_variables(dataset_id)
            }
        v = variables_by_dataset[dataset_id][variable]
        dictionary_rows.append(
            [column, dataset_id, v.name, v.description, v.unit or "", v.value_kind, v.concept_code or ""]
        )

    summary_doc = dict(summary.to_json_dict())
    summary_doc["selection"] = selection.to_json_dict()
    payloads = [
        ("linked.csv", _csv_bytes(table.header, table.rows)),
        ("summary.json", (json.dumps(summary_doc, indent=2, sort_keys=True) + "\n").encode()),
        (
            "dictionary.csv",
            _csv_bytes(
                ["column", "dataset_id", "variable", "description", "unit", "value_kind", "concept_code"],
                dictionary_rows,
            ),
        ),
    ]
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as archive:
        for name, data in payloads:
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            archive.writestr(info, data, compresslevel=6)
    return buf.getvalue()
