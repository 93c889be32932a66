"""
Resolving coordinates to census keys
====================================

Build a boundary layer, index it, and turn lon/lat points into
hierarchical FIPS codes.
"""

from arealink import (
    GeoLevel,
    LonLat,
    build_index,
    load_geojson,
    parent,
    resolve_batch,
    validate_boundaries,
)

# A tiny synthetic tract layer: the bundled test fixture tiles the
# Gainesville, FL area with 12 rectangles keyed as real-looking
# Alachua County (12001) tract codes.
geojson = open("tests/fixtures/boundaries/campus.geojson", "rb").read()

boundaries = load_geojson(geojson, GeoLevel.TRACT, id_property="GEOID")
report = validate_boundaries(boundaries)
print(f"loaded {len(boundaries.entries)} tracts, {len(report.issues)} validation issues")

# The index is immutable; build it once per deployment and share it.
index = build_index(report.boundary_set)

points = [
    LonLat(-82.3549, 29.6436),   # UF campus
    LonLat(-82.41, 29.69),
    LonLat(-80.19, 25.76),       # Miami: outside this layer
]
for point, key in zip(points, resolve_batch(index, points)):
    if key is None:
        print(f"({point.lon}, {point.lat}) -> no containing tract")
    else:
        county = parent(key, GeoLevel.COUNTY)
        state = parent(key, GeoLevel.STATE)
        print(f"({point.lon}, {point.lat}) -> tract {key.code} "
              f"(county {county.code}, state {state.code})")

# The same index serializes to a deterministic byte string, so a
# deployment can ship prebuilt .idx files.
blob = index.to_bytes()
print(f"serialized index: {len(blob)} bytes")
