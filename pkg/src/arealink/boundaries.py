"""Boundary file ingestion: GeoJSON and ESRI Shapefile into keyed polygon sets.

Both loaders produce the same structure -- a BoundarySet mapping GeoKey to
a multi-ring polygon -- so downstream containment code never cares which
format a layer arrived in. Coordinates are assumed WGS84 lon/lat degrees;
winding order is ignored (containment uses the even-odd rule, so holes
need no special labeling) and MultiPolygon parts become extra rings under
the one key.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

from .errors import BoundaryError
from .geo import GeoKey, GeoLevel, LonLat, parse_geo_key

Bbox = tuple[float, float, float, float]  # (min lon, min lat, max lon, max lat)

SHAPE_NULL = 0
SHAPE_POLYGON = 5
SHP_FILE_CODE = 9994
DBF_VERSION = 0x03


@dataclass
class Ring:
    """One closed ring of vertices (first vertex repeated as last)."""

    vertices: list[LonLat]

    def is_closed(self) -> bool:
        return len(self.vertices) >= 2 and self.vertices[0] == self.vertices[-1]

    def signed_area(self) -> float:
        """Shoelace area in degree^2; sign carries winding, zero means degenerate."""
        total = 0.0
        pts = self.vertices
        for i in range(len(pts) - 1):
            total += pts[i].lon * pts[i + 1].lat - pts[i + 1].lon * pts[i].lat
        return total / 2.0


@dataclass
class PolygonShape:
    """Exterior ring(s) plus holes, winding-agnostic, with a tight bbox."""

    rings: list[Ring]
    bbox: Bbox

    @classmethod
    def from_rings(cls, rings: list[Ring]) -> "PolygonShape":
        lons = [v.lon for r in rings for v in r.vertices]
        lats = [v.lat for r in rings for v in r.vertices]
        if not lons:
            raise BoundaryError("EmptyGeometry", "polygon has no vertices")
        return cls(rings=rings, bbox=(min(lons), min(lats), max(lons), max(lats)))


@dataclass
class BoundarySet:
    """All polygons of one geographic level, keyed by GeoKey."""

    level: GeoLevel
    entries: dict[GeoKey, PolygonShape]
    vintage: str = ""

    def __post_init__(self):
        if not self.entries:
            raise BoundaryError("EmptySet", "boundary set has no entries")
        for key in self.entries:
            if key.level is not self.level:
                raise BoundaryError(
                    "LevelMismatch", f"key {key} in a {self.level}-level set"
                )


@dataclass
class BoundaryIssue:
    key: GeoKey
    kind: str  # short_ring | auto_closed | zero_area_ring | degenerate_bbox | antimeridian_span
    detail: str


@dataclass
class ValidationReport:
    """Outcome of validate_boundaries: per-key issues plus the (ring-closed) set."""

    boundary_set: BoundarySet
    issues: list[BoundaryIssue] = field(default_factory=list)

    def ok(self) -> bool:
        return not self.issues


def _positions_to_ring(positions) -> Ring:
    verts = []
    for pos in positions:
        if not isinstance(pos, (list, tuple)) or len(pos) < 2:
            raise BoundaryError("MalformedJson", f"bad coordinate position {pos!r}")
        try:
            verts.append(LonLat(float(pos[0]), float(pos[1])))
        except (TypeError, ValueError) as exc:
            raise BoundaryError("InvalidCoordinate", str(exc)) from exc
    return Ring(verts)


def load_geojson(data: bytes | str, level: GeoLevel, id_property: str) -> BoundarySet:
    """Load an RFC 7946 FeatureCollection of Polygon/MultiPolygon features.

    Every feature becomes one entry keyed by its ``id_property`` (parsed
    strictly at ``level``); MultiPolygon parts are folded into one shape
    as additional rings. The stored bbox is recomputed from vertices, any
    "bbox" member in the file is ignored.
    """
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise BoundaryError("MalformedJson", f"not parseable as JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise BoundaryError("MalformedJson", "root object is not a FeatureCollection")
    features = doc.get("features")
    if not isinstance(features, list):
        raise BoundaryError("MalformedJson", "FeatureCollection has no features array")

    entries: dict[GeoKey, PolygonShape] = {}
    for feat in features:
        if not isinstance(feat, dict) or not isinstance(feat.get("geometry"), dict):
            raise BoundaryError("MalformedJson", "feature without geometry object")
        geom = feat["geometry"]
        gtype = geom.get("type")
        coords = geom.get("coordinates")
        if gtype == "Polygon":
            ring_arrays = coords
        elif gtype == "MultiPolygon":
            ring_arrays = [ring for part in coords for ring in part]
        else:
            raise BoundaryError(
                "UnsupportedGeometry", f"geometry type {gtype!r} (need Polygon/MultiPolygon)"
            )
        props = feat.get("properties") or {}
        if id_property not in props:
            raise BoundaryError(
                "MissingIdProperty", f"feature lacks id property {id_property!r}"
            )
        key = parse_geo_key(str(props[id_property]), level, lenient=False)
        if key in entries:
            raise BoundaryError("DuplicateKey", f"duplicate boundary key {key}")
        entries[key] = PolygonShape.from_rings([_positions_to_ring(r) for r in ring_arrays])
    return BoundarySet(level=level, entries=entries)


def boundary_set_to_geojson(bset: BoundarySet, id_property: str = "GEOID") -> str:
    """Serialize back to a FeatureCollection (features sorted by code).

    Floats are emitted with repr precision, so a load/export/load cycle
    reproduces vertices exactly.
    """
    features = []
    for key in sorted(bset.entries, key=lambda k: k.code):
        shape = bset.entries[key]
        rings = [[[v.lon, v.lat] for v in ring.vertices] for ring in shape.rings]
        features.append(
            {
                "type": "Feature",
                "properties": {id_property: key.code},
                "geometry": {"type": "Polygon", "coordinates": rings},
            }
        )
    return json.dumps({"type": "FeatureCollection", "features": features})


# --- ESRI shapefile (.shp + .dbf) -------------------------------------------
#
# Only what census boundary distributions need: main-file polygons
# (shape type 5, null records tolerated and skipped) and dBASE III
# attribute tables with character/numeric fields.


def _read_shp_polygons(shp: bytes) -> list[list[Ring] | None]:
    if len(shp) < 100:
        raise BoundaryError("BadFileCode", "shapefile shorter than its 100-byte header")
    (file_code,) = struct.unpack_from(">i", shp, 0)
    if file_code != SHP_FILE_CODE:
        raise BoundaryError("BadFileCode", f"main file code {file_code} != {SHP_FILE_CODE}")
    (shape_type,) = struct.unpack_from("<i", shp, 32)
    if shape_type not in (SHAPE_POLYGON, SHAPE_NULL):
        raise BoundaryError(
            "UnsupportedShapeType", f"shape type {shape_type} (only polygon=5 supported)"
        )

    shapes: list[list[Ring] | None] = []
    offset = 100
    while offset < len(shp):
        if offset + 8 > len(shp):
            raise BoundaryError("BadFileCode", "truncated record header")
        _, content_len = struct.unpack_from(">2i", shp, offset)
        offset += 8
        content_end = offset + content_len * 2  # length counted in 16-bit words
        if content_end > len(shp):
            raise BoundaryError("BadFileCode", "record content overruns file")
        (rec_type,) = struct.unpack_from("<i", shp, offset)
        if rec_type == SHAPE_NULL:
            shapes.append(None)
        elif rec_type == SHAPE_POLYGON:
            # i32 type, 4 doubles box, i32 numParts, i32 numPoints,
            # parts[numParts] i32, points[numPoints] (x, y) doubles.
            n_parts, n_points = struct.unpack_from("<2i", shp, offset + 36)
            parts = struct.unpack_from(f"<{n_parts}i", shp, offset + 44)
            pts_off = offset + 44 + 4 * n_parts
            flat = struct.unpack_from(f"<{2 * n_points}d", shp, pts_off)
            rings = []
            bounds = list(parts) + [n_points]
            for i in range(n_parts):
                verts = []
                for j in range(bounds[i], bounds[i + 1]):
                    try:
                        verts.append(LonLat(flat[2 * j], flat[2 * j + 1]))
                    except ValueError as exc:
                        raise BoundaryError("InvalidCoordinate", str(exc)) from exc
                rings.append(Ring(verts))
            shapes.append(rings)
        else:
            raise BoundaryError(
                "UnsupportedShapeType", f"record shape type {rec_type} (only polygon=5 supported)"
            )
        offset = content_end
    return shapes


def _read_dbf_column(dbf: bytes, id_field: str) -> list[str]:
    if len(dbf) < 32:
        raise BoundaryError("UnsupportedDbfVersion", "dbf shorter than its header")
    version = dbf[0]
    if version != DBF_VERSION:
        raise BoundaryError(
            "UnsupportedDbfVersion", f"dbf version byte 0x{version:02x} (need 0x03)"
        )
    (n_records,) = struct.unpack_from("<I", dbf, 4)
    (header_size,) = struct.unpack_from("<H", dbf, 8)
    (record_size,) = struct.unpack_from("<H", dbf, 10)

    fields = []  # (name, type, length)
    pos = 32
    while pos < len(dbf) and dbf[pos] != 0x0D:
        desc = dbf[pos : pos + 32]
        if len(desc) < 32:
            raise BoundaryError("UnsupportedDbfVersion", "truncated field descriptor")
        name = desc[:11].split(b"\x00", 1)[0].decode("latin-1")
        ftype = chr(desc[11])
        if ftype not in ("C", "N"):
            raise BoundaryError(
                "UnsupportedDbfField", f"field {name!r} has type {ftype!r} (only C/N supported)"
            )
        fields.append((name, ftype, desc[16]))
        pos += 32

    names = [f[0] for f in fields]
    if id_field not in names:
        raise BoundaryError("DbfFieldMissing", f"dbf has no field {id_field!r} (fields: {names})")
    col_index = names.index(id_field)
    col_offset = 1 + sum(f[2] for f in fields[:col_index])  # +1 for the deletion flag
    col_len = fields[col_index][2]

    values = []
    for i in range(n_records):
        start = header_size + i * record_size
        raw = dbf[start + col_offset : start + col_offset + col_len]
        if len(raw) < col_len:
            raise BoundaryError("RecordCountMismatch", "dbf records overrun file")
        values.append(raw.decode("latin-1").strip())
    return values


def load_shapefile(shp: bytes, dbf: bytes, level: GeoLevel, id_field: str) -> BoundarySet:
    """Load a .shp/.dbf pair into a BoundarySet.

    Record i's polygon is keyed by record i's id_field value; multi-part
    polygons become multi-ring shapes. The bbox stored per shape is
    recomputed from vertices rather than trusted from the file. Null
    shape records are skipped.
    """
    shapes = _read_shp_polygons(shp)
    ids = _read_dbf_column(dbf, id_field)
    if len(shapes) != len(ids):
        raise BoundaryError(
            "RecordCountMismatch", f"{len(shapes)} shp records vs {len(ids)} dbf records"
        )
    entries: dict[GeoKey, PolygonShape] = {}
    for rings, raw_id in zip(shapes, ids):
        if rings is None:
            continue
        key = parse_geo_key(raw_id, level, lenient=False)
        if key in entries:
            raise BoundaryError("DuplicateKey", f"duplicate boundary key {key}")
        entries[key] = PolygonShape.from_rings(rings)
    return BoundarySet(level=level, entries=entries)


def validate_boundaries(bset: BoundarySet) -> ValidationReport:
    """Check every ring and bbox, auto-closing unclosed rings.

    Report-only apart from ring closure: the returned report carries a
    set in which any unclosed ring has its first vertex appended, each
    such repair logged as an "auto_closed" issue. Antimeridian-spanning
    shapes are flagged because the planar containment step cannot handle
    them.
    """
    issues: list[BoundaryIssue] = []
    entries: dict[GeoKey, PolygonShape] = {}
    for key in sorted(bset.entries, key=lambda k: k.code):
        shape = bset.entries[key]
        rings = []
        for idx, ring in enumerate(shape.rings):
            verts = ring.vertices
            if len(verts) >= 2 and not ring.is_closed():
                verts = verts + [verts[0]]
                ring = Ring(verts)
                issues.append(BoundaryIssue(key, "auto_closed", f"ring {idx} auto-closed"))
            if len(verts) < 4:
                issues.append(
                    BoundaryIssue(key, "short_ring", f"ring {idx} has {len(verts)} vertices")
                )
            elif ring.signed_area() == 0.0:
                issues.append(BoundaryIssue(key, "zero_area_ring", f"ring {idx} has zero area"))
            rings.append(ring)
        repaired = PolygonShape.from_rings(rings)
        min_lon, min_lat, max_lon, max_lat = repaired.bbox
        if min_lon == max_lon or min_lat == max_lat:
            issues.append(BoundaryIssue(key, "degenerate_bbox", f"bbox {repaired.bbox}"))
        if max_lon - min_lon > 180.0:
            issues.append(
                BoundaryIssue(key, "antimeridian_span", "bbox spans more than 180 degrees of longitude")
            )
        entries[key] = repaired
    return ValidationReport(
        boundary_set=BoundarySet(level=bset.level, entries=entries, vintage=bset.vintage),
        issues=issues,
    )
