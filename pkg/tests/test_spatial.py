"""Spatial index vs the independent brute-force containment oracle."""

import random

import pytest

from arealink.boundaries import BoundarySet, PolygonShape, Ring
from arealink.errors import SpatialError
from arealink.geo import GeoKey, GeoLevel, LonLat, parent
from arealink.spatial import (
    Crosswalk,
    SpatialIndex,
    build_index,
    crosswalk_lookup,
    load_crosswalk_csv,
    resolve_batch,
    resolve_point,
)

from conftest import grid_boundary_set, grid_polygons_plain, square_ring, square_shape, tract_code
from oracles import brute_force_resolve, point_in_rings


def donut_shape(x0, y0, outer=4.0, inner_off=1.0, inner=2.0):
    return PolygonShape.from_rings(
        [square_ring(x0, y0, outer), square_ring(x0 + inner_off, y0 + inner_off, inner)]
    )


def plain_rings(shape: PolygonShape):
    return [[(v.lon, v.lat) for v in ring.vertices] for ring in shape.rings]


# --- construction ---------------------------------------------------------------


def test_single_entry_index_is_one_node(unit_square_set):
    index = build_index(unit_square_set)
    assert len(index._nodes) == 1
    assert index._nodes[0].is_leaf


def test_empty_set_rejected(unit_square_set):
    bset = unit_square_set
    bset.entries.clear()
    with pytest.raises(SpatialError) as err:
        build_index(bset)
    assert err.value.code == "EmptySet"


def test_build_determinism_byte_identical():
    bset_a = grid_boundary_set(10, 10)
    bset_b = grid_boundary_set(10, 10)
    assert build_index(bset_a).to_bytes() == build_index(bset_b).to_bytes()


def test_serialization_round_trip():
    index = build_index(grid_boundary_set(5, 5))
    clone = SpatialIndex.from_bytes(index.to_bytes())
    assert clone.level is GeoLevel.TRACT
    assert clone.to_bytes() == index.to_bytes()
    for p in (LonLat(0.5, 0.5), LonLat(4.5, 4.5), LonLat(9.0, 9.0)):
        assert clone.resolve_point(p) == index.resolve_point(p)


def test_grid_query_inspects_at_most_four_leaf_bboxes():
    """On a unit grid no point can fall inside more than 4 entry bboxes."""
    index = build_index(grid_boundary_set(10, 10))
    rng = random.Random(7)
    worst = 0
    for _ in range(2000):
        p = LonLat(rng.uniform(-0.5, 10.5), rng.uniform(-0.5, 10.5))
        worst = max(worst, len(index.candidates(p)))
    for x in range(11):  # lattice corners are the worst case
        for y in range(11):
            worst = max(worst, len(index.candidates(LonLat(float(x), float(y)))))
    assert worst <= 4


# --- resolution -----------------------------------------------------------------


def test_interior_point_resolves(unit_square_set):
    index = build_index(unit_square_set)
    assert resolve_point(index, LonLat(0.5, 0.5)) == GeoKey(GeoLevel.TRACT, "12001000100")


def test_outside_point_absent(unit_square_set):
    index = build_index(unit_square_set)
    assert resolve_point(index, LonLat(2.0, 2.0)) is None


def test_shared_edge_resolves_to_smaller_code():
    entries = {
        GeoKey(GeoLevel.TRACT, tract_code(0, 0)): square_shape(0.0, 0.0),
        GeoKey(GeoLevel.TRACT, tract_code(0, 1)): square_shape(1.0, 0.0),
    }
    index = build_index(BoundarySet(level=GeoLevel.TRACT, entries=entries))
    on_edge = resolve_point(index, LonLat(1.0, 0.5))
    contains = [
        code
        for code in (tract_code(0, 0), tract_code(0, 1))
        if point_in_rings(grid_polygons_plain(1, 2)[code], 1.0, 0.5)
    ]
    assert on_edge.code == min(contains) if contains else on_edge is None
    # and it must agree with the oracle either way
    assert (on_edge.code if on_edge else None) == brute_force_resolve(
        grid_polygons_plain(1, 2), 1.0, 0.5
    )


def test_hole_matches_oracle():
    polygons = {
        "12001000100": [
            [(0, 0), (4, 0), (4, 4), (0, 4), (0, 0)],
            [(1, 1), (3, 1), (3, 3), (1, 3), (1, 1)],
        ],
        "12001000200": [[(1.25, 1.25), (2.75, 1.25), (2.75, 2.75), (1.25, 2.75), (1.25, 1.25)]],
    }
    entries = {
        GeoKey(GeoLevel.TRACT, "12001000100"): donut_shape(0, 0),
        GeoKey(GeoLevel.TRACT, "12001000200"): square_shape(1.25, 1.25, 1.5),
    }
    index = build_index(BoundarySet(level=GeoLevel.TRACT, entries=entries))
    # dead center of the hole sits inside the inner square neighbor
    assert resolve_point(index, LonLat(2.0, 2.0)).code == "12001000200"
    # inside the hole but outside the neighbor: nobody contains it
    assert resolve_point(index, LonLat(1.1, 1.1)) is None
    rng = random.Random(21)
    for _ in range(2000):
        lon, lat = rng.uniform(-1, 5), rng.uniform(-1, 5)
        got = resolve_point(index, LonLat(lon, lat))
        assert (got.code if got else None) == brute_force_resolve(polygons, lon, lat)


def test_oracle_equivalence_random_grid_with_adversarial_points():
    rows = cols = 10
    index = build_index(grid_boundary_set(rows, cols))
    polygons = grid_polygons_plain(rows, cols)
    rng = random.Random(1234)
    points = [(rng.uniform(-1, 11), rng.uniform(-1, 11)) for _ in range(3000)]
    # adversarial: exact corners, edge midpoints, just-off-edge values
    for x in range(cols + 1):
        for y in range(rows + 1):
            points.append((float(x), float(y)))
            points.append((x + 0.5, float(y)))
            points.append((float(x), y + 0.5))
    for lon, lat in points:
        got = resolve_point(index, LonLat(lon, lat))
        want = brute_force_resolve(polygons, lon, lat)
        assert (got.code if got else None) == want, f"disagree at ({lon}, {lat})"


def test_hierarchy_consistency_nested_layers():
    """Tract, county, and state layers built over nested geometry agree
    with prefix truncation wherever a tract matches."""
    tract_entries = {}
    for r in range(4):
        for c in range(4):
            county = "12001" if c < 2 else "12003"
            code = f"{county}{r:03d}{c:03d}"
            tract_entries[GeoKey(GeoLevel.TRACT, code)] = square_shape(float(c), float(r))
    county_entries = {
        GeoKey(GeoLevel.COUNTY, "12001"): PolygonShape.from_rings(
            [Ring([LonLat(0, 0), LonLat(2, 0), LonLat(2, 4), LonLat(0, 4), LonLat(0, 0)])]
        ),
        GeoKey(GeoLevel.COUNTY, "12003"): PolygonShape.from_rings(
            [Ring([LonLat(2, 0), LonLat(4, 0), LonLat(4, 4), LonLat(2, 4), LonLat(2, 0)])]
        ),
    }
    state_entries = {
        GeoKey(GeoLevel.STATE, "12"): PolygonShape.from_rings(
            [Ring([LonLat(0, 0), LonLat(4, 0), LonLat(4, 4), LonLat(0, 4), LonLat(0, 0)])]
        )
    }
    tract_idx = build_index(BoundarySet(level=GeoLevel.TRACT, entries=tract_entries))
    county_idx = build_index(BoundarySet(level=GeoLevel.COUNTY, entries=county_entries))
    state_idx = build_index(BoundarySet(level=GeoLevel.STATE, entries=state_entries))

    rng = random.Random(99)
    checked = 0
    for _ in range(1000):
        p = LonLat(rng.uniform(-0.5, 4.5), rng.uniform(-0.5, 4.5))
        tract = tract_idx.resolve_point(p)
        if tract is None:
            continue
        checked += 1
        assert parent(tract, GeoLevel.COUNTY) == county_idx.resolve_point(p)
        assert parent(tract, GeoLevel.STATE) == state_idx.resolve_point(p)
    assert checked > 500


def test_campus_fixture_resolves_to_alachua_tract():
    from arealink.boundaries import load_geojson
    from conftest import FIXTURES

    bset = load_geojson(
        (FIXTURES / "boundaries" / "campus.geojson").read_bytes(), GeoLevel.TRACT, "GEOID"
    )
    index = build_index(bset)
    campus = LonLat(-82.3549, 29.6436)
    got = index.resolve_point(campus)
    assert got is not None
    assert parent(got, GeoLevel.COUNTY).code == "12001"
    polygons = {
        key.code: [[(v.lon, v.lat) for v in ring.vertices] for ring in shape.rings]
        for key, shape in bset.entries.items()
    }
    assert got.code == brute_force_resolve(polygons, campus.lon, campus.lat)


# --- batch ------------------------------------------------------------------------


def test_batch_empty(unit_square_set):
    index = build_index(unit_square_set)
    assert resolve_batch(index, []) == []


def test_batch_matches_sequential_loop():
    index = build_index(grid_boundary_set(10, 10))
    rng = random.Random(5)
    points = [LonLat(rng.uniform(-1, 11), rng.uniform(-1, 11)) for _ in range(10_000)]
    sequential = [index.resolve_point(p) for p in points]
    assert resolve_batch(index, points) == sequential
    assert resolve_batch(index, points, workers=4) == sequential


# --- crosswalks --------------------------------------------------------------------


def test_crosswalk_lookup_hit_and_miss():
    xw = Crosswalk(
        from_level=GeoLevel.TRACT,
        to_level=GeoLevel.ZCTA,
        pairs={
            GeoKey(GeoLevel.TRACT, "12086009801"): [(GeoKey(GeoLevel.ZCTA, "33139"), 1.0)]
        },
    )
    assert crosswalk_lookup(xw, GeoKey(GeoLevel.TRACT, "12086009801")) == [
        (GeoKey(GeoLevel.ZCTA, "33139"), 1.0)
    ]
    assert crosswalk_lookup(xw, GeoKey(GeoLevel.TRACT, "12086009999")) == []


def test_crosswalk_level_mismatch():
    xw = Crosswalk(from_level=GeoLevel.TRACT, to_level=GeoLevel.ZCTA, pairs={})
    with pytest.raises(SpatialError) as err:
        crosswalk_lookup(xw, GeoKey(GeoLevel.COUNTY, "12086"))
    assert err.value.code == "LevelMismatch"


def test_crosswalk_csv_unweighted_defaults_to_one():
    xw = load_crosswalk_csv(
        "from_code,to_code\n12086009801,33139\n12086009801,33140\n",
        GeoLevel.TRACT,
        GeoLevel.ZCTA,
    )
    pairs = crosswalk_lookup(xw, GeoKey(GeoLevel.TRACT, "12086009801"))
    assert [w for _, w in pairs] == [1.0, 1.0]


def test_crosswalk_csv_weighted_must_sum_to_one():
    good = "from_code,to_code,weight\n12086009801,33139,0.75\n12086009801,33140,0.25\n"
    xw = load_crosswalk_csv(good, GeoLevel.TRACT, GeoLevel.ZCTA)
    assert len(xw.pairs) == 1
    bad = "from_code,to_code,weight\n12086009801,33139,0.75\n12086009801,33140,0.35\n"
    with pytest.raises(SpatialError) as err:
        load_crosswalk_csv(bad, GeoLevel.TRACT, GeoLevel.ZCTA)
    assert err.value.code == "BadWeights"
