"""arealink: area-level SDoH/environmental data catalog and cohort linkage.

Core pieces: geographic key types and hierarchy (geo), boundary file
parsing (boundaries), point-to-key spatial resolution (spatial), the
dataset catalog store (catalog), CSV ingest (ingest), batch cohort
linkage (linkage), and the asynchronous HTTP service (service).
"""

from .boundaries import (
    BoundarySet,
    PolygonShape,
    Ring,
    ValidationReport,
    boundary_set_to_geojson,
    load_geojson,
    load_shapefile,
    validate_boundaries,
)
from .catalog import (
    POINT_SCALE,
    CatalogStore,
    DatasetDescriptor,
    ValueRecord,
    VariableDescriptor,
    WideTable,
)
from .errors import (
    BoundaryError,
    CatalogError,
    CodedError,
    CohortError,
    GeoKeyError,
    IngestError,
    LinkageError,
    SpatialError,
)
from .geo import GeoKey, GeoLevel, LonLat, level_from_name, parent, parse_geo_key
from .ingest import IngestManifest, IngestReport, ingest_dataset
from .linkage import (
    BAD_KEY,
    MATCHED,
    NO_DATA_FOR_GEO,
    UNMATCHED_GEOMETRY,
    Cohort,
    FipsColumn,
    LinkedTable,
    LinkSelection,
    LinkSummary,
    LonLatColumns,
    ResolverContext,
    SelectionEntry,
    link,
    parse_cohort,
    write_output,
)
from .seed import REFERENCE_DATASETS, seed_reference_catalog
from .spatial import (
    Crosswalk,
    SpatialIndex,
    build_index,
    crosswalk_lookup,
    load_crosswalk_csv,
    resolve_batch,
    resolve_point,
)

__version__ = "0.1.0"
