# -*- coding: utf-8 -*-
"""
Tests for the projects blueprint.
"""

import io
import zipfile

import pytest

from tests.conftest import JSON_HEADERS


@pytest.fixture
def project_id(client):
    response = client.post(
        "/projects",
        json={"name": "E3", "description": "subgraph", "projectType": "Script"},
        headers=JSON_HEADERS,
    )
    assert response.status_code == 201
    return response.json["id"]


def zip_bytes(entries):
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as archive:
        for name, content in entries.items():
            archive.writestr(name, content)
    buffer.seek(0)
    return buffer


def test_create_project(client):
    response = client.post("/projects", json={"name": "E3", "authors": ["A"]}, headers=JSON_HEADERS)
    assert response.status_code == 201
    assert response.json["name"] == "E3"
    assert response.json["projectType"] == "Script"
    assert response.json["authors"] == ["A"]
    assert "tree" not in response.json


def test_create_project_without_name(client):
    response = client.post("/projects", json={"description": "x"}, headers=JSON_HEADERS)
    assert response.status_code == 422
    assert response.json["error"]["code"] == "Validation"


def test_create_project_rejects_non_object(client):
    response = client.post("/projects", json=["E3"], headers=JSON_HEADERS)
    assert response.status_code == 422


def test_create_project_needs_accept_header(client):
    response = client.post("/projects", json={"name": "E3"})
    assert response.status_code == 406
    assert response.json["error"]["code"] == "Validation"


def test_list_and_get(client, project_id):
    listing = client.get("/projects", headers=JSON_HEADERS)
    assert [project["id"] for project in listing.json["projects"]] == [project_id]
    detail = client.get(f"/projects/{project_id}", headers=JSON_HEADERS)
    assert detail.json["tree"] == []


def test_unknown_project_is_404(client):
    response = client.get("/projects/nope", headers=JSON_HEADERS)
    assert response.status_code == 404
    assert response.json["error"]["code"] == "NotFound"


def test_upload_zip(client, project_id):
    archive = zip_bytes({"src/bbfs_node.cpp": "int main(){}\n"})
    response = client.post(
        f"/projects/{project_id}/files",
        data={"file": (archive, "e3.zip")},
        content_type="multipart/form-data",
        headers=JSON_HEADERS,
    )
    assert response.status_code == 200
    assert [node["path"] for node in response.json["added"]] == ["src", "src/bbfs_node.cpp"]
    raw = client.get(f"/projects/{project_id}/files/src/bbfs_node.cpp")
    assert raw.data == b"int main(){}\n"
    assert raw.mimetype == "application/octet-stream"


def test_upload_zip_without_unpacking(client, project_id):
    archive = zip_bytes({"a.txt": "a"})
    response = client.post(
        f"/projects/{project_id}/files",
        data={"file": (archive, "bundle.zip"), "unpack": "false"},
        content_type="multipart/form-data",
        headers=JSON_HEADERS,
    )
    assert [node["path"] for node in response.json["added"]] == ["bundle.zip"]


def test_upload_single_file_with_path(client, project_id):
    response = client.post(
        f"/projects/{project_id}/files",
        data={"file": (io.BytesIO(b"print(1)\n"), "plot.py"), "path": "scripts/plot.py"},
        content_type="multipart/form-data",
        headers=JSON_HEADERS,
    )
    assert response.status_code == 200
    assert response.json["added"][-1]["path"] == "scripts/plot.py"


def test_unsafe_zip_rejected(client, project_id):
    archive = zip_bytes({"../evil.sh": "rm -rf /"})
    response = client.post(
        f"/projects/{project_id}/files",
        data={"file": (archive, "evil.zip")},
        content_type="multipart/form-data",
        headers=JSON_HEADERS,
    )
    assert response.status_code == 422


def test_local_sources_not_accepted_over_http(client, project_id, tmp_path):
    response = client.post(
        f"/projects/{project_id}/files",
        json={"kind": "dir", "path": str(tmp_path)},
        headers=JSON_HEADERS,
    )
    assert response.status_code == 422


def test_remote_source_needs_url(client, project_id):
    response = client.post(f"/projects/{project_id}/files", json={"kind": "git"}, headers=JSON_HEADERS)
    assert response.status_code == 422


def test_create_edit_delete_entry(client, project_id):
    created = client.patch(
        f"/projects/{project_id}/files/scripts/run.sh",
        json={"action": "CreateFile", "content": "echo hi\n"},
        headers=JSON_HEADERS,
    )
    assert created.status_code == 200
    assert created.json["node"]["size"] == 8
    edited = client.patch(
        f"/projects/{project_id}/files/scripts/run.sh",
        json={"content": "echo bye\n"},
        headers=JSON_HEADERS,
    )
    assert edited.json["action"] == "EditFile"
    deleted = client.delete(f"/projects/{project_id}/files/scripts", headers=JSON_HEADERS)
    assert deleted.json == {"projectId": project_id, "action": "Delete", "path": "scripts"}
    missing = client.get(f"/projects/{project_id}/files/scripts/run.sh")
    assert missing.status_code == 404


def test_patch_cannot_delete(client, project_id):
    response = client.patch(
        f"/projects/{project_id}/files/a.txt", json={"action": "Delete"}, headers=JSON_HEADERS
    )
    assert response.status_code == 422


def test_dataset_and_seeds(client, project_id):
    client.patch(
        f"/projects/{project_id}/files/freebase/edges.txt",
        json={"action": "CreateFile", "content": "1 2\n"},
        headers=JSON_HEADERS,
    )
    client.patch(
        f"/projects/{project_id}/files/train.py",
        json={"action": "CreateFile", "content": "SEED = 1\n"},
        headers=JSON_HEADERS,
    )
    dataset = client.put(
        f"/projects/{project_id}/dataset",
        json={"id": "fb", "root": "freebase", "label": "Freebase"},
        headers=JSON_HEADERS,
    )
    assert dataset.json["dataset"] == {"id": "fb", "root": "freebase", "label": "Freebase", "external": False}
    seeds = client.put(
        f"/projects/{project_id}/seeds",
        json={"seeds": [{"location": "train.py", "variable": "SEED", "value": 3}]},
        headers=JSON_HEADERS,
    )
    assert seeds.json["seeds"] == [{"location": "train.py", "variable": "SEED", "value": 3}]
    bad = client.put(f"/projects/{project_id}/seeds", json={"seeds": "x"}, headers=JSON_HEADERS)
    assert bad.status_code == 422


@pytest.mark.parametrize("url", ["file:///etc", "/srv/repositories/private"])
def test_git_source_must_be_remote(client, project_id, url):
    response = client.post(
        f"/projects/{project_id}/files", json={"kind": "git", "url": url}, headers=JSON_HEADERS
    )
    assert response.status_code == 422
    assert response.json["error"]["code"] == "Validation"
