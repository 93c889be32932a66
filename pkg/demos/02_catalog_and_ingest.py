"""
Seeding the catalog and ingesting a source CSV
==============================================

The catalog is a directory of datasets; the reference seed registers
the full roster of bundled SDoH/environmental source descriptors, and
the ingest pipeline loads actual values from a wide CSV.
"""

import tempfile
from pathlib import Path

from arealink import (
    CatalogStore,
    DatasetDescriptor,
    GeoKey,
    GeoLevel,
    IngestManifest,
    ingest_dataset,
    seed_reference_catalog,
)

root = Path(tempfile.mkdtemp()) / "catalog"
store = CatalogStore(root)

count = seed_reference_catalog(store)
print(f"seeded {count} dataset descriptors under {root}")

# Filter like the catalog browser does: tract-scale SDoH sources only.
for d in store.list_catalog(scale=GeoLevel.TRACT, domain="SDoH")[:5]:
    print(f"  {d.id:28s} {d.display_name} ({d.variable_count} variables)")

# Ingest a desk-scale extract. Column kinds are inferred from the data:
# numeric if every non-missing cell parses as a number, categorical for
# small vocabularies, text otherwise.
manifest = IngestManifest(
    descriptor=DatasetDescriptor(
        id="svi_sample",
        display_name="SVI desk-scale sample",
        source_org="Centers for Disease Control (CDC)",
        variable_count=0,
        spatial_scale=GeoLevel.TRACT,
        domain="SDoH",
    ),
    geo_column="FIPS",
    year=2020,
)
source_csv = b"""FIPS,rpl_themes,area_class
12001000201,0.4251,urban
12001000202,0.8112,urban
1001000203,0.1097,rural
12001000204,NA,rural
"""
report = ingest_dataset(manifest, source_csv, store)
print(f"ingested: {report.to_json_dict()}")

# Values come back verbatim, keyed however the caller orders them.
table = store.query_values(
    "svi_sample",
    2020,
    [GeoKey(GeoLevel.TRACT, "12001000202"), GeoKey(GeoLevel.TRACT, "01001000203")],
)
for code, row in zip(table.geo_codes, table.cells):
    print(f"  {code}: {dict(zip(table.columns, row))}")
