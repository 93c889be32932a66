"""
Linking a geocoded cohort to cataloged datasets
===============================================

The linkage engine joins cohort rows (FIPS-keyed or coordinate-keyed)
against any selection of cataloged datasets and packages the result as
a reproducible ZIP: linked.csv + summary.json + dictionary.csv.
"""

import io
import tempfile
import zipfile
from pathlib import Path

from arealink import (
    CatalogStore,
    DatasetDescriptor,
    GeoLevel,
    IngestManifest,
    LinkSelection,
    SelectionEntry,
    ingest_dataset,
    link,
    parse_cohort,
    write_output,
)

store = CatalogStore(Path(tempfile.mkdtemp()) / "catalog")

# Two small datasets at different scales: the engine joins each at its
# own scale, deriving county keys from tract keys by prefix truncation.
ingest_dataset(
    IngestManifest(
        descriptor=DatasetDescriptor(
            id="svi_sample", display_name="SVI sample", source_org="CDC",
            variable_count=0, spatial_scale=GeoLevel.TRACT, domain="SDoH",
        ),
        geo_column="FIPS",
        year=2020,
    ),
    b"FIPS,rpl_themes\n12001000201,0.4251\n12001000202,0.8112\n",
    store,
)
ingest_dataset(
    IngestManifest(
        descriptor=DatasetDescriptor(
            id="food_sample", display_name="Food atlas sample", source_org="USDA",
            variable_count=0, spatial_scale=GeoLevel.COUNTY, domain="SDoH",
        ),
        geo_column="FIPS",
        year=2020,
    ),
    b"FIPS,grocery_per_1k\n12001,0.61\n12086,0.48\n",
    store,
)

cohort = parse_cohort(
    b"patient_id,fips\n"
    b"p001,12001000201\n"
    b"p002,12001000202\n"
    b"p003,12086001200\n"   # Miami-Dade tract: county data only
    b"p004,not-a-code\n"    # malformed key: row kept, flagged BAD_KEY
)
print(f"cohort parsed: {len(cohort.rows)} rows, {cohort.detection_note}")

selection = LinkSelection(
    entries=[SelectionEntry("svi_sample", 2020), SelectionEntry("food_sample", 2020)]
)
table, summary = link(cohort, selection, store)
print(f"columns: {table.header}")
for dataset_id, counts in summary.per_dataset.items():
    shown = {status: n for status, n in counts.items() if n}
    print(f"  {dataset_id}: {shown}")

archive = write_output(table, summary, selection, store)
names = zipfile.ZipFile(io.BytesIO(archive)).namelist()
print(f"output archive: {len(archive)} bytes, entries {names}")
