"""Boundary loaders against frozen fixtures written by an independent GIS library."""

import json
import struct

import pytest

from arealink.boundaries import (
    BoundarySet,
    PolygonShape,
    Ring,
    boundary_set_to_geojson,
    load_geojson,
    load_shapefile,
    validate_boundaries,
)
from arealink.errors import BoundaryError
from arealink.geo import GeoKey, GeoLevel, LonLat

from conftest import FIXTURES, geojson_feature_collection, polygon_feature

BOUNDARY_FIXTURES = FIXTURES / "boundaries"
FIXTURE_NAMES = ["unit_square", "grid3", "multipart", "donut", "campus"]


def _vertices(bset: BoundarySet) -> dict:
    return {
        key.code: [[[v.lon, v.lat] for v in ring.vertices] for ring in shape.rings]
        for key, shape in bset.entries.items()
    }


# --- GeoJSON ------------------------------------------------------------------


def test_geojson_single_square():
    data = geojson_feature_collection(
        [polygon_feature("12001000100", [[[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]])]
    )
    bset = load_geojson(data, GeoLevel.TRACT, "GEOID")
    assert len(bset.entries) == 1
    shape = bset.entries[GeoKey(GeoLevel.TRACT, "12001000100")]
    assert shape.bbox == (0.0, 0.0, 1.0, 1.0)


def test_geojson_duplicate_key():
    feature = polygon_feature("12001000100", [[[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]])
    with pytest.raises(BoundaryError) as err:
        load_geojson(geojson_feature_collection([feature, feature]), GeoLevel.TRACT, "GEOID")
    assert err.value.code == "DuplicateKey"


def test_geojson_grid_bboxes_enclose_corners():
    data = (BOUNDARY_FIXTURES / "grid3.geojson").read_bytes()
    bset = load_geojson(data, GeoLevel.TRACT, "GEOID")
    assert len(bset.entries) == 3
    for key, shape in bset.entries.items():
        min_lon, min_lat, max_lon, max_lat = shape.bbox
        for ring in shape.rings:
            for v in ring.vertices:
                assert min_lon <= v.lon <= max_lon
                assert min_lat <= v.lat <= max_lat


def test_geojson_rejects_points():
    data = json.dumps(
        {
            "type": "FeatureCollection",
            "features": [
                {
                    "type": "Feature",
                    "properties": {"GEOID": "12001000100"},
                    "geometry": {"type": "Point", "coordinates": [0, 0]},
                }
            ],
        }
    ).encode()
    with pytest.raises(BoundaryError) as err:
        load_geojson(data, GeoLevel.TRACT, "GEOID")
    assert err.value.code == "UnsupportedGeometry"


def test_geojson_missing_id_property():
    feature = polygon_feature("12001000100", [[[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]])
    with pytest.raises(BoundaryError) as err:
        load_geojson(geojson_feature_collection([feature]), GeoLevel.TRACT, "TRACT_ID")
    assert err.value.code == "MissingIdProperty"


def test_geojson_malformed():
    with pytest.raises(BoundaryError) as err:
        load_geojson(b"{not json", GeoLevel.TRACT, "GEOID")
    assert err.value.code == "MalformedJson"
    with pytest.raises(BoundaryError) as err:
        load_geojson(b'{"type": "Feature"}', GeoLevel.TRACT, "GEOID")
    assert err.value.code == "MalformedJson"


def test_geojson_multipolygon_folds_to_one_key():
    data = json.dumps(
        {
            "type": "FeatureCollection",
            "features": [
                {
                    "type": "Feature",
                    "properties": {"GEOID": "12001000100"},
                    "geometry": {
                        "type": "MultiPolygon",
                        "coordinates": [
                            [[[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]],
                            [[[3, 0], [4, 0], [4, 1], [3, 1], [3, 0]]],
                        ],
                    },
                }
            ],
        }
    ).encode()
    bset = load_geojson(data, GeoLevel.TRACT, "GEOID")
    shape = bset.entries[GeoKey(GeoLevel.TRACT, "12001000100")]
    assert len(shape.rings) == 2
    assert shape.bbox == (0.0, 0.0, 4.0, 1.0)


# --- shapefile ----------------------------------------------------------------


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_shapefile_matches_reference_tool(name):
    """Parser output must equal the generating library's reported geometry."""
    bset = load_shapefile(
        (BOUNDARY_FIXTURES / f"{name}.shp").read_bytes(),
        (BOUNDARY_FIXTURES / f"{name}.dbf").read_bytes(),
        GeoLevel.TRACT,
        "GEOID",
    )
    expected = json.loads((BOUNDARY_FIXTURES / f"{name}.expected.json").read_text())
    assert _vertices(bset) == expected


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_cross_parser_equivalence(name):
    """GeoJSON and shapefile loaders agree vertex-for-vertex on each fixture."""
    from_shp = load_shapefile(
        (BOUNDARY_FIXTURES / f"{name}.shp").read_bytes(),
        (BOUNDARY_FIXTURES / f"{name}.dbf").read_bytes(),
        GeoLevel.TRACT,
        "GEOID",
    )
    from_json = load_geojson(
        (BOUNDARY_FIXTURES / f"{name}.geojson").read_bytes(), GeoLevel.TRACT, "GEOID"
    )
    assert _vertices(from_shp) == _vertices(from_json)


def test_shapefile_bad_file_code():
    shp = bytearray((BOUNDARY_FIXTURES / "unit_square.shp").read_bytes())
    shp[0:4] = struct.pack(">i", 1234)
    with pytest.raises(BoundaryError) as err:
        load_shapefile(bytes(shp), (BOUNDARY_FIXTURES / "unit_square.dbf").read_bytes(),
                       GeoLevel.TRACT, "GEOID")
    assert err.value.code == "BadFileCode"


def test_shapefile_unsupported_shape_type():
    shp = bytearray((BOUNDARY_FIXTURES / "unit_square.shp").read_bytes())
    shp[32:36] = struct.pack("<i", 1)  # point type
    with pytest.raises(BoundaryError) as err:
        load_shapefile(bytes(shp), (BOUNDARY_FIXTURES / "unit_square.dbf").read_bytes(),
                       GeoLevel.TRACT, "GEOID")
    assert err.value.code == "UnsupportedShapeType"


def test_dbf_unsupported_version():
    dbf = bytearray((BOUNDARY_FIXTURES / "unit_square.dbf").read_bytes())
    dbf[0] = 0x04
    with pytest.raises(BoundaryError) as err:
        load_shapefile((BOUNDARY_FIXTURES / "unit_square.shp").read_bytes(), bytes(dbf),
                       GeoLevel.TRACT, "GEOID")
    assert err.value.code == "UnsupportedDbfVersion"


def test_dbf_field_missing():
    with pytest.raises(BoundaryError) as err:
        load_shapefile(
            (BOUNDARY_FIXTURES / "unit_square.shp").read_bytes(),
            (BOUNDARY_FIXTURES / "unit_square.dbf").read_bytes(),
            GeoLevel.TRACT,
            "TRACT_ID",
        )
    assert err.value.code == "DbfFieldMissing"


def test_record_count_mismatch():
    with pytest.raises(BoundaryError) as err:
        load_shapefile(
            (BOUNDARY_FIXTURES / "unit_square.shp").read_bytes(),
            (BOUNDARY_FIXTURES / "grid3.dbf").read_bytes(),
            GeoLevel.TRACT,
            "GEOID",
        )
    assert err.value.code == "RecordCountMismatch"


# --- validation ---------------------------------------------------------------


def test_validate_clean_square(unit_square_set):
    report = validate_boundaries(unit_square_set)
    assert report.ok()
    assert report.issues == []


def test_validate_auto_closes_open_ring():
    ring = Ring([LonLat(0, 0), LonLat(1, 0), LonLat(1, 1), LonLat(0, 1)])  # no closure
    bset = BoundarySet(
        level=GeoLevel.TRACT,
        entries={GeoKey(GeoLevel.TRACT, "12001000100"): PolygonShape.from_rings([ring])},
    )
    report = validate_boundaries(bset)
    kinds = [i.kind for i in report.issues]
    assert kinds == ["auto_closed"]
    repaired = report.boundary_set.entries[GeoKey(GeoLevel.TRACT, "12001000100")]
    assert repaired.rings[0].vertices[0] == repaired.rings[0].vertices[-1]
    # input set untouched beyond the closure repair in the returned copy
    assert len(ring.vertices) == 4


def test_validate_zero_area_ring():
    collinear = Ring([LonLat(0, 0), LonLat(1, 1), LonLat(2, 2), LonLat(0, 0)])
    bset = BoundarySet(
        level=GeoLevel.TRACT,
        entries={GeoKey(GeoLevel.TRACT, "12001000100"): PolygonShape.from_rings([collinear])},
    )
    report = validate_boundaries(bset)
    assert "zero_area_ring" in [i.kind for i in report.issues]


def test_validate_short_ring():
    stub = Ring([LonLat(0, 0), LonLat(1, 1)])
    bset = BoundarySet(
        level=GeoLevel.TRACT,
        entries={GeoKey(GeoLevel.TRACT, "12001000100"): PolygonShape.from_rings([stub])},
    )
    report = validate_boundaries(bset)
    assert "short_ring" in [i.kind for i in report.issues]


def test_validate_flags_antimeridian_span():
    wide = Ring([LonLat(-179, 0), LonLat(179, 0), LonLat(179, 1), LonLat(-179, 1), LonLat(-179, 0)])
    bset = BoundarySet(
        level=GeoLevel.TRACT,
        entries={GeoKey(GeoLevel.TRACT, "12001000100"): PolygonShape.from_rings([wide])},
    )
    report = validate_boundaries(bset)
    assert "antimeridian_span" in [i.kind for i in report.issues]


# --- round-trips ----------------------------------------------------------------


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_geojson_round_trip_preserves_vertices(name):
    original = load_geojson(
        (BOUNDARY_FIXTURES / f"{name}.geojson").read_bytes(), GeoLevel.TRACT, "GEOID"
    )
    exported = boundary_set_to_geojson(original, id_property="GEOID")
    reloaded = load_geojson(exported, GeoLevel.TRACT, "GEOID")
    assert _vertices(reloaded) == _vertices(original)
    assert set(reloaded.entries) == set(original.entries)


def test_round_trip_full_float_precision():
    rings = [[[0.123456789012345, 45.67890123456789],
              [1.000000000000001, 45.67890123456789],
              [1.000000000000001, 46.0],
              [0.123456789012345, 46.0],
              [0.123456789012345, 45.67890123456789]]]
    data = geojson_feature_collection([polygon_feature("12001000100", rings)])
    once = load_geojson(data, GeoLevel.TRACT, "GEOID")
    again = load_geojson(boundary_set_to_geojson(once), GeoLevel.TRACT, "GEOID")
    assert _vertices(once) == _vertices(again)
