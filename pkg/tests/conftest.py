"""Shared fixtures: synthetic boundary layers and seeded stores."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from arealink.boundaries import BoundarySet, PolygonShape, Ring
from arealink.catalog import CatalogStore, DatasetDescriptor, ValueRecord, VariableDescriptor
from arealink.geo import GeoKey, GeoLevel, LonLat

FIXTURES = Path(__file__).parent / "fixtures"


def square_ring(x0: float, y0: float, size: float = 1.0) -> Ring:
    return Ring(
        [
            LonLat(x0, y0),
            LonLat(x0 + size, y0),
            LonLat(x0 + size, y0 + size),
            LonLat(x0, y0 + size),
            LonLat(x0, y0),
        ]
    )


def square_shape(x0: float, y0: float, size: float = 1.0) -> PolygonShape:
    return PolygonShape.from_rings([square_ring(x0, y0, size)])


def tract_code(row: int, col: int, county: str = "12001") -> str:
    return f"{county}{row:03d}{col:03d}"


def grid_boundary_set(
    rows: int,
    cols: int,
    county: str = "12001",
    origin: tuple[float, float] = (0.0, 0.0),
    cell: float = 1.0,
) -> BoundarySet:
    """rows x cols squares keyed as tracts of one county."""
    lon0, lat0 = origin
    entries = {}
    for r in range(rows):
        for c in range(cols):
            key = GeoKey(GeoLevel.TRACT, tract_code(r, c, county))
            entries[key] = square_shape(lon0 + c * cell, lat0 + r * cell, cell)
    return BoundarySet(level=GeoLevel.TRACT, entries=entries, vintage="synthetic")


def grid_polygons_plain(rows: int, cols: int, county: str = "12001") -> dict:
    """Same grid as plain tuples, for the independent oracle."""
    out = {}
    for r in range(rows):
        for c in range(cols):
            x0, y0 = float(c), float(r)
            out[tract_code(r, c, county)] = [
                [(x0, y0), (x0 + 1, y0), (x0 + 1, y0 + 1), (x0, y0 + 1), (x0, y0)]
            ]
    return out


@pytest.fixture
def unit_square_set() -> BoundarySet:
    key = GeoKey(GeoLevel.TRACT, "12001000100")
    return BoundarySet(level=GeoLevel.TRACT, entries={key: square_shape(0.0, 0.0)})


@pytest.fixture
def store(tmp_path) -> CatalogStore:
    return CatalogStore(tmp_path / "catalog")


@pytest.fixture
def small_dataset(store) -> CatalogStore:
    """One tract-scale dataset with two variables and two 2020 rows."""
    store.register_source(
        DatasetDescriptor(
            id="demo",
            display_name="Demo Dataset",
            source_org="Test Org",
            variable_count=0,
            spatial_scale=GeoLevel.TRACT,
            domain="SDoH",
        )
    )
    store.add_variables(
        "demo",
        [
            VariableDescriptor("demo", "score", value_kind="numeric"),
            VariableDescriptor("demo", "label", value_kind="text"),
        ],
    )
    tract_a = GeoKey(GeoLevel.TRACT, "12001000100")
    tract_b = GeoKey(GeoLevel.TRACT, "12001000200")
    store.store_values(
        "demo",
        2020,
        [
            ValueRecord("demo", "score", tract_a, 2020, "7.5"),
            ValueRecord("demo", "label", tract_a, 2020, "alpha"),
            ValueRecord("demo", "score", tract_b, 2020, "1.25"),
        ],
    )
    return store


def geojson_feature_collection(features: list[dict]) -> bytes:
    return json.dumps({"type": "FeatureCollection", "features": features}).encode()


def polygon_feature(geoid: str, rings: list[list[list[float]]], id_property="GEOID") -> dict:
    return {
        "type": "Feature",
        "properties": {id_property: geoid},
        "geometry": {"type": "Polygon", "coordinates": rings},
    }
