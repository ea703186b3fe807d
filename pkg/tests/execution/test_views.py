# -*- coding: utf-8 -*-
"""
Tests for the execution blueprint.
"""

import pytest

from tests.conftest import JSON_HEADERS


@pytest.fixture
def project_id(client):
    response = client.post("/projects", json={"name": "E3"}, headers=JSON_HEADERS)
    return response.json["id"]


@pytest.fixture
def tag_id(client, project_id):
    response = client.post(
        f"/projects/{project_id}/environment", json={"languages": ["shell"]}, headers=JSON_HEADERS
    )
    return response.json["tagId"]


def test_run_and_fetch(client, project_id, tag_id):
    """Test a run and the stored record."""
    response = client.post(
        f"/projects/{project_id}/runs", json={"tagId": tag_id, "command": "echo hi"}, headers=JSON_HEADERS
    )
    assert response.status_code == 200
    assert response.json["stdout"] == "hi\n"
    run_id = response.json["runId"]
    fetched = client.get(f"/projects/{project_id}/runs/{run_id}", headers=JSON_HEADERS)
    assert fetched.json == response.json
    listing = client.get(f"/projects/{project_id}/runs", headers=JSON_HEADERS)
    assert [run["runId"] for run in listing.json["runs"]] == [run_id]
    assert "stdout" not in listing.json["runs"][0]


def test_run_needs_tag(client, project_id):
    response = client.post(f"/projects/{project_id}/runs", json={"command": "true"}, headers=JSON_HEADERS)
    assert response.status_code == 422


def test_run_unknown_image(client, project_id):
    response = client.post(
        f"/projects/{project_id}/runs", json={"tagId": 4242, "command": "true"}, headers=JSON_HEADERS
    )
    assert response.status_code == 404
    assert response.json["error"]["code"] == "NotFound"


def test_unknown_run(client, project_id):
    response = client.get(f"/projects/{project_id}/runs/nope", headers=JSON_HEADERS)
    assert response.status_code == 404


def test_verify(client, project_id, tag_id):
    response = client.post(
        f"/projects/{project_id}/verify",
        json={"tagId": tag_id, "command": "echo same > out.txt"},
        headers=JSON_HEADERS,
    )
    assert response.json["verdict"] == "Reproduced"
    assert len(response.json["runs"]) == 2


def test_compare_and_expected(client, project_id, tag_id):
    runs = [
        client.post(
            f"/projects/{project_id}/runs", json={"tagId": tag_id, "command": command}, headers=JSON_HEADERS
        ).json["runId"]
        for command in ("echo 1", "echo 2")
    ]
    compared = client.post(
        f"/projects/{project_id}/compare", json={"runA": runs[0], "runB": runs[1]}, headers=JSON_HEADERS
    )
    assert compared.json["verdict"] == "NotReproduced"
    expected = client.post(
        f"/projects/{project_id}/expected",
        json={"runId": runs[0], "expected": {"stdout": "1\n"}},
        headers=JSON_HEADERS,
    )
    assert expected.json["verdict"] == "Reproduced"


def test_configure_stage_failure(client, project_id):
    response = client.post(
        f"/projects/{project_id}/configure",
        json={"request": {"languages": ["shell"], "commandsToAdd": ["false"]}, "command": "true"},
        headers=JSON_HEADERS,
    )
    assert response.status_code == 500
    assert response.json["error"]["code"] == "StageFailure"
    assert response.json["error"]["stage"] == "build"


def test_configure(client, project_id):
    response = client.post(
        f"/projects/{project_id}/configure",
        json={"request": {"languages": ["shell"]}, "command": "echo stable"},
        headers=JSON_HEADERS,
    )
    assert response.status_code == 200
    assert response.json["report"]["verdict"] == "Reproduced"
