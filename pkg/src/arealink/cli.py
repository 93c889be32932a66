"""Offline command-line surface for the full pipeline.

Every subcommand except ``serve`` runs entirely locally and never opens
a network connection, so cohort files with protected location data can
be processed inside institutional boundaries. Diagnostics go to stderr;
data goes to stdout or the --out target. Exit codes: 0 success, 1 user
error, 2 internal fault.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .boundaries import load_geojson, load_shapefile, validate_boundaries
from .catalog import CatalogStore, scale_from_name, scale_name
from .errors import CodedError
from .geo import GeoLevel, LonLat, level_from_name, parent
from .ingest import IngestManifest, ingest_dataset
from .linkage import (
    BAD_KEY,
    MATCHED,
    UNMATCHED_GEOMETRY,
    LinkSelection,
    ResolverContext,
    link,
    parse_cohort,
    write_output,
)
from .seed import seed_reference_catalog
from .spatial import SpatialIndex, build_index, load_crosswalk_csv

_LON_NAMES = ("lon", "lng", "longitude")
_LAT_NAMES = ("lat", "latitude")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of calling sys.exit."""

    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="arealink", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    boundaries = sub.add_parser("boundaries", help="boundary layer management")
    bsub = boundaries.add_subparsers(dest="subcommand", required=True)
    b_ingest = bsub.add_parser("ingest", help="parse a boundary file and build its index")
    b_ingest.add_argument("--format", choices=["geojson", "shapefile"], required=True)
    b_ingest.add_argument("--in", dest="infile", required=True)
    b_ingest.add_argument("--dbf", help="attribute file for --format shapefile")
    b_ingest.add_argument("--level", required=True)
    b_ingest.add_argument("--id-property", default="GEOID")
    b_ingest.add_argument("--vintage", default="")
    b_ingest.add_argument("--out", required=True, help="index directory")

    dataset = sub.add_parser("dataset", help="dataset ingestion")
    dsub = dataset.add_subparsers(dest="subcommand", required=True)
    d_ingest = dsub.add_parser("ingest", help="run the CSV-to-catalog pipeline")
    d_ingest.add_argument("--catalog", required=True)
    d_ingest.add_argument("--manifest", required=True)
    d_ingest.add_argument("--in", dest="infile", required=True)

    catalog = sub.add_parser("catalog", help="catalog queries")
    csub = catalog.add_subparsers(dest="subcommand", required=True)
    c_list = csub.add_parser("list", help="list datasets with optional filters")
    c_list.add_argument("--catalog", required=True)
    c_list.add_argument("--scale")
    c_list.add_argument("--year", type=int)
    c_list.add_argument("--domain")
    c_list.add_argument("--json", action="store_true")
    c_seed = csub.add_parser("seed", help="seed the reference dataset registry")
    c_seed.add_argument("--catalog", required=True)

    resolve = sub.add_parser("resolve", help="map lon/lat rows to FIPS codes")
    resolve.add_argument("--index", required=True, help="index directory holding tract.idx")
    resolve.add_argument("--in", dest="infile", required=True)
    resolve.add_argument("--out", required=True)
    resolve.add_argument("--threads", type=int, default=1)

    link_cmd = sub.add_parser("link", help="run the full local linkage")
    link_cmd.add_argument("--catalog", required=True)
    link_cmd.add_argument("--select", required=True, help="selection JSON file")
    link_cmd.add_argument("--in", dest="infile", required=True)
    link_cmd.add_argument("--out", required=True)
    link_cmd.add_argument("--index", help="index directory for coordinate cohorts")
    link_cmd.add_argument(
        "--crosswalk",
        action="append",
        default=[],
        metavar="FILE:FROM:TO",
        help="crosswalk CSV with its levels, e.g. xw.csv:tract:zcta",
    )

    serve = sub.add_parser("serve", help="start the HTTP linkage service")
    serve.add_argument("--config", required=True)
    return parser


# -- subcommand bodies ---------------------------------------------------------


def _cmd_boundaries_ingest(args) -> int:
    level = level_from_name(args.level)
    raw = Path(args.infile).read_bytes()
    if args.format == "geojson":
        bset = load_geojson(raw, level, args.id_property)
    else:
        if not args.dbf:
            raise UsageError("--dbf is required with --format shapefile")
        bset = load_shapefile(raw, Path(args.dbf).read_bytes(), level, args.id_property)
    bset.vintage = args.vintage
    report = validate_boundaries(bset)
    for issue in report.issues:
        print(f"warning: {issue.key.code}: {issue.kind}: {issue.detail}", file=sys.stderr)
    index = build_index(report.boundary_set)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / f"{level.value}.idx"
    target.write_bytes(index.to_bytes())
    print(
        f"indexed {len(index.keys)} {level.value} boundaries -> {target}",
        file=sys.stderr,
    )
    return 0


def _cmd_dataset_ingest(args) -> int:
    store = CatalogStore(args.catalog)
    manifest = IngestManifest.from_json(Path(args.manifest).read_text(encoding="utf-8"))
    report = ingest_dataset(manifest, Path(args.infile).read_bytes(), store)
    print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_catalog_list(args) -> int:
    store = CatalogStore(args.catalog)
    descriptors = store.list_catalog(
        scale=scale_from_name(args.scale) if args.scale else None,
        year=args.year,
        domain=args.domain,
    )
    if args.json:
        print(json.dumps([d.to_json_dict() for d in descriptors], indent=2))
    else:
        for d in descriptors:
            years = ",".join(str(y) for y in d.years) or "-"
            print(
                f"{d.id}\t{d.display_name}\t{d.source_org}\t"
                f"{d.variable_count}\t{scale_name(d.spatial_scale)}\t{d.domain}\t{years}"
            )
    return 0


def _cmd_catalog_seed(args) -> int:
    store = CatalogStore(args.catalog)
    count = seed_reference_catalog(store)
    print(f"seeded {count} dataset descriptors", file=sys.stderr)
    return 0


def _load_index_dir(path: str, level: GeoLevel) -> SpatialIndex:
    idx_path = Path(path) / f"{level.value}.idx"
    if not idx_path.is_file():
        raise CodedError("MissingIndex", f"no {level.value}.idx under {path}")
    return SpatialIndex.from_bytes(idx_path.read_bytes())


def _cmd_resolve(args) -> int:
    index = _load_index_dir(args.index, GeoLevel.TRACT)
    text = Path(args.infile).read_text(encoding="utf-8-sig")
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise CodedError("EmptyFile", "input CSV is empty")
    header, data = rows[0], rows[1:]
    lowered = [h.strip().lower() for h in header]
    lon_idx = next((lowered.index(n) for n in _LON_NAMES if n in lowered), None)
    lat_idx = next((lowered.index(n) for n in _LAT_NAMES if n in lowered), None)
    if lon_idx is None or lat_idx is None:
        raise CodedError("NoKeyColumns", f"need lon/lat columns, header is {header}")

    out_header = header + ["fips_tract", "fips_county", "fips_state", "match_status"]
    out_rows = []
    points: list[LonLat | None] = []
    for row in data:
        try:
            points.append(LonLat(float(row[lon_idx]), float(row[lat_idx])))
        except (ValueError, IndexError):
            points.append(None)
    resolved = index.resolve_batch(
        [p for p in points if p is not None], workers=args.threads
    )
    resolved_iter = iter(resolved)
    for row, point in zip(data, points):
        if point is None:
            out_rows.append(row + ["", "", "", BAD_KEY])
            continue
        key = next(resolved_iter)
        if key is None:
            out_rows.append(row + ["", "", "", UNMATCHED_GEOMETRY])
        else:
            county = parent(key, GeoLevel.COUNTY).code
            state = parent(key, GeoLevel.STATE).code
            out_rows.append(row + [key.code, county, state, MATCHED])
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(out_header)
        writer.writerows(out_rows)
    print(f"resolved {len(out_rows)} rows -> {args.out}", file=sys.stderr)
    return 0


def _cmd_link(args) -> int:
    store = CatalogStore(args.catalog)
    selection = LinkSelection.from_json(Path(args.select).read_text(encoding="utf-8"))
    context = ResolverContext()
    if args.index:
        context.tract_index = _load_index_dir(args.index, GeoLevel.TRACT)
    for spec in args.crosswalk:
        try:
            file_part, from_part, to_part = spec.rsplit(":", 2)
        except ValueError:
            raise UsageError(f"--crosswalk {spec!r} is not FILE:FROM:TO") from None
        xw = load_crosswalk_csv(
            Path(file_part).read_text(encoding="utf-8"),
            level_from_name(from_part),
            level_from_name(to_part),
        )
        context.crosswalks[xw.to_level] = xw
    cohort = parse_cohort(Path(args.infile).read_bytes())
    print(f"cohort: {len(cohort.rows)} rows, {cohort.detection_note}", file=sys.stderr)
    table, summary = link(cohort, selection, store, context)
    archive = write_output(table, summary, selection, store)
    Path(args.out).write_bytes(archive)
    for dataset_id, counts in summary.per_dataset.items():
        shown = {k: v for k, v in counts.items() if v}
        print(f"{dataset_id}: {shown}", file=sys.stderr)
    print(f"wrote {args.out} ({len(archive)} bytes)", file=sys.stderr)
    return 0


def _cmd_serve(args) -> int:
    # the one subcommand allowed to touch the network
    import uvicorn

    from .service.app import build_from_config
    from .service.config import ServiceConfig

    config = ServiceConfig.load(args.config)
    app = build_from_config(config)
    uvicorn.run(app, host=config.bind_host, port=config.bind_port, log_level="info")
    return 0


_HANDLERS = {
    ("boundaries", "ingest"): _cmd_boundaries_ingest,
    ("dataset", "ingest"): _cmd_dataset_ingest,
    ("catalog", "list"): _cmd_catalog_list,
    ("catalog", "seed"): _cmd_catalog_seed,
    ("resolve", None): _cmd_resolve,
    ("link", None): _cmd_link,
    ("serve", None): _cmd_serve,
}


def dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = _HANDLERS[(args.command, getattr(args, "subcommand", None))]
        return handler(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except CodedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 2
    except Exception as exc:  # internal fault
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 2


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
