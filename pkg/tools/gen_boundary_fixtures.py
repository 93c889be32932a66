"""Generate the boundary parser fixtures under tests/fixtures/boundaries/.

Requires pyshp (`pip install pyshp`). The .shp/.dbf pairs are written by
pyshp's Writer; the .geojson twin and the .expected.json vertex dump are
produced from what pyshp's Reader reports back, so the frozen
expectations come from an independent, widely used GIS library rather
than from the parser under test. Run once and commit the outputs; the
test suite never needs pyshp itself.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import shapefile  # pyshp

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "boundaries"


def sq(x0, y0, size=1.0):
    return [(x0, y0), (x0 + size, y0), (x0 + size, y0 + size), (x0, y0 + size), (x0, y0)]


FIXTURES = {
    # one unit square
    "unit_square": [("12001000100", [sq(0, 0)])],
    # three squares in a row
    "grid3": [
        ("12001000100", [sq(0, 0)]),
        ("12001000200", [sq(1, 0)]),
        ("12001000300", [sq(2, 0)]),
    ],
    # a two-part (disjoint) polygon plus a plain neighbor
    "multipart": [
        ("12001000100", [sq(0, 0), sq(3, 0)]),
        ("12001000200", [sq(1, 0)]),
    ],
    # a donut (hole) with a separate square inside the hole
    "donut": [
        ("12001000100", [sq(0, 0, 4), sq(1, 1, 2)]),
        ("12001000200", [sq(1.25, 1.25, 1.5)]),
    ],
    # a 4x3 tile sheet with realistic Gainesville-area coordinates
    "campus": [
        (
            f"12001{200 + i:06d}",
            [
                [
                    (-82.42 + c * 0.03, 29.58 + r * 0.04),
                    (-82.39 + c * 0.03, 29.58 + r * 0.04),
                    (-82.39 + c * 0.03, 29.62 + r * 0.04),
                    (-82.42 + c * 0.03, 29.62 + r * 0.04),
                    (-82.42 + c * 0.03, 29.58 + r * 0.04),
                ]
            ],
        )
        for i, (r, c) in enumerate((r, c) for r in range(3) for c in range(4))
    ],
}


def write_fixture(name: str, records: list[tuple[str, list[list[tuple[float, float]]]]]):
    shp_buf, shx_buf, dbf_buf = io.BytesIO(), io.BytesIO(), io.BytesIO()
    writer = shapefile.Writer(shp=shp_buf, shx=shx_buf, dbf=dbf_buf, shapeType=shapefile.POLYGON)
    writer.field("GEOID", "C", size=11)
    for geoid, rings in records:
        writer.poly(rings)
        writer.record(GEOID=geoid)
    writer.close()

    (OUT / f"{name}.shp").write_bytes(shp_buf.getvalue())
    (OUT / f"{name}.dbf").write_bytes(dbf_buf.getvalue())

    # Read back with pyshp: whatever its Reader reports is the frozen truth.
    reader = shapefile.Reader(
        shp=io.BytesIO(shp_buf.getvalue()), dbf=io.BytesIO(dbf_buf.getvalue())
    )
    expected = {}
    features = []
    for shape_rec in reader.iterShapeRecords():
        geoid = shape_rec.record["GEOID"]
        shape = shape_rec.shape
        parts = list(shape.parts) + [len(shape.points)]
        rings = [
            [[float(x), float(y)] for x, y in shape.points[parts[i] : parts[i + 1]]]
            for i in range(len(shape.parts))
        ]
        expected[geoid] = rings
        features.append(
            {
                "type": "Feature",
                "properties": {"GEOID": geoid},
                "geometry": {"type": "Polygon", "coordinates": rings},
            }
        )
    (OUT / f"{name}.geojson").write_text(
        json.dumps({"type": "FeatureCollection", "features": features}, indent=1)
    )
    (OUT / f"{name}.expected.json").write_text(json.dumps(expected, indent=1))
    print(f"{name}: {len(records)} records")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, records in FIXTURES.items():
        write_fixture(name, records)


if __name__ == "__main__":
    main()
