"""CLI subcommands, exit codes, and the no-network guarantee."""

import csv
import io
import json
import socket
import zipfile
from pathlib import Path

import pytest

from arealink.boundaries import boundary_set_to_geojson
from arealink.cli import dispatch

from conftest import grid_boundary_set


@pytest.fixture
def workspace(tmp_path):
    """On-disk fixtures: boundary geojson, catalog manifest, cohorts, selection."""
    ws = tmp_path

    boundaries = ws / "grid.geojson"
    boundaries.write_text(boundary_set_to_geojson(grid_boundary_set(2, 2)))

    points = ws / "points.csv"
    points.write_text("id,lon,lat\na,0.5,0.5\nb,1.5,1.5\nc,9.0,9.0\n")

    manifest = ws / "manifest.json"
    manifest.write_text(
        json.dumps(
            {
                "descriptor": {
                    "id": "svi_s",
                    "display_name": "Social Vulnerability Index (SVI)",
                    "source_org": "Centers for Disease Control (CDC)",
                    "variable_count": 0,
                    "spatial_scale": "tract",
                    "domain": "SDoH",
                },
                "geo_column": "GEOID",
                "year": 2020,
            }
        )
    )
    source = ws / "svi_sample.csv"
    source.write_text(
        "GEOID,themes,rank\n"
        "12001000000,7.5,0.31\n"
        "12001000001,2.5,0.77\n"
        "12001001000,4.0,0.50\n"
    )
    cohort = ws / "cohort.csv"
    cohort.write_text("pid,fips\np1,12001000000\np2,12001999999\np3,bogus\n")
    selection = ws / "selection.json"
    selection.write_text(json.dumps({"entries": [{"dataset_id": "svi_s", "year": 2020}]}))
    return ws


@pytest.fixture
def no_network(monkeypatch):
    """Any attempt to create a socket fails the test."""

    def deny(*args, **kwargs):
        raise AssertionError("network use attempted in an offline subcommand")

    monkeypatch.setattr(socket, "socket", deny)
    monkeypatch.setattr(socket, "create_connection", deny)
    return deny


def run(args, workspace):
    return dispatch([a.format(ws=workspace) for a in args])


def test_boundaries_ingest_and_resolve_offline(workspace, no_network, capsys):
    assert run(
        ["boundaries", "ingest", "--format", "geojson", "--in", "{ws}/grid.geojson",
         "--level", "tract", "--id-property", "GEOID", "--out", "{ws}/index"],
        workspace,
    ) == 0
    assert (workspace / "index" / "tract.idx").is_file()

    assert run(
        ["resolve", "--index", "{ws}/index", "--in", "{ws}/points.csv",
         "--out", "{ws}/fips.csv"],
        workspace,
    ) == 0
    rows = list(csv.DictReader((workspace / "fips.csv").open()))
    assert len(rows) == 3  # rows preserved
    assert rows[0]["fips_tract"] == "12001000000"
    assert rows[0]["fips_county"] == "12001"
    assert rows[0]["fips_state"] == "12"
    assert rows[0]["match_status"] == "MATCHED"
    assert rows[1]["fips_tract"] == "12001001001"
    assert rows[2]["match_status"] == "UNMATCHED_GEOMETRY"


def test_catalog_seed_and_list_offline(workspace, no_network, capsys):
    assert run(["catalog", "seed", "--catalog", "{ws}/catalog"], workspace) == 0
    capsys.readouterr()
    assert run(
        ["catalog", "list", "--catalog", "{ws}/catalog", "--scale", "tract"], workspace
    ) == 0
    out = capsys.readouterr().out
    assert "Social Vulnerability Index (SVI)" in out
    assert "Daily AQI by County" not in out


def test_catalog_list_json_mode(workspace, no_network, capsys):
    run(["catalog", "seed", "--catalog", "{ws}/catalog"], workspace)
    capsys.readouterr()
    assert run(
        ["catalog", "list", "--catalog", "{ws}/catalog", "--json"], workspace
    ) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc) == 41


def test_dataset_ingest_and_link_offline(workspace, no_network, capsys):
    assert run(
        ["dataset", "ingest", "--catalog", "{ws}/catalog", "--manifest",
         "{ws}/manifest.json", "--in", "{ws}/svi_sample.csv"],
        workspace,
    ) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["rows_read"] == 3
    assert report["values_stored"] == 6

    assert run(
        ["link", "--catalog", "{ws}/catalog", "--select", "{ws}/selection.json",
         "--in", "{ws}/cohort.csv", "--out", "{ws}/result.zip"],
        workspace,
    ) == 0
    archive = zipfile.ZipFile(io.BytesIO((workspace / "result.zip").read_bytes()))
    assert archive.namelist() == ["linked.csv", "summary.json", "dictionary.csv"]
    linked = archive.read("linked.csv").decode().splitlines()
    assert len(linked) == 4


def test_link_unknown_dataset_exits_1(workspace, capsys):
    (workspace / "bad_selection.json").write_text(
        json.dumps({"entries": [{"dataset_id": "ghost", "year": 2020}]})
    )
    run(["catalog", "seed", "--catalog", "{ws}/catalog"], workspace)
    code = run(
        ["link", "--catalog", "{ws}/catalog", "--select", "{ws}/bad_selection.json",
         "--in", "{ws}/cohort.csv", "--out", "{ws}/nope.zip"],
        workspace,
    )
    assert code == 1
    assert "UnknownDataset" in capsys.readouterr().err


def test_unknown_subcommand_exits_1(capsys):
    assert dispatch(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_flag_exits_1(capsys):
    assert dispatch(["catalog", "list", "--bogus"]) == 1


def test_missing_input_file_exits_1(workspace, capsys):
    code = run(
        ["resolve", "--index", "{ws}/absent", "--in", "{ws}/points.csv",
         "--out", "{ws}/x.csv"],
        workspace,
    )
    assert code == 1


def test_cli_and_service_produce_identical_archives(workspace, tmp_path):
    """The CLI link and the HTTP service share one engine; same inputs,
    same bytes."""
    import json as json_mod

    from fastapi.testclient import TestClient

    from arealink.catalog import CatalogStore
    from arealink.service import LinkageService, TaskStore, create_app

    run(
        ["dataset", "ingest", "--catalog", "{ws}/catalog", "--manifest",
         "{ws}/manifest.json", "--in", "{ws}/svi_sample.csv"],
        workspace,
    )
    assert run(
        ["link", "--catalog", "{ws}/catalog", "--select", "{ws}/selection.json",
         "--in", "{ws}/cohort.csv", "--out", "{ws}/cli_result.zip"],
        workspace,
    ) == 0
    cli_bytes = (workspace / "cli_result.zip").read_bytes()

    service = LinkageService(
        catalog=CatalogStore(workspace / "catalog"),
        task_store=TaskStore(tmp_path / "svc" / "tasks.json"),
        data_dir=tmp_path / "svc",
        worker_count=0,
    )
    client = TestClient(create_app(service.catalog, service, {"tok": "alice"}))
    response = client.post(
        "/api/tasks",
        files={"file": ("cohort.csv", (workspace / "cohort.csv").read_bytes(), "text/csv")},
        data={"selection": (workspace / "selection.json").read_text()},
        headers={"Authorization": "Bearer tok"},
    )
    task_id = response.json()["task_id"]
    service.run_once()
    download = client.get(
        f"/api/tasks/{task_id}/download", headers={"Authorization": "Bearer tok"}
    )
    assert download.status_code == 200
    assert download.content == cli_bytes
