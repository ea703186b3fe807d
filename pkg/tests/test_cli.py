# -*- coding: utf-8 -*-
"""
Tests for the command line interface.
"""

import json
from unittest.mock import patch

import pytest

from app.cli import cli_dispatch, exit_code_for
from app.exceptions import EngineFailure, NotFoundError, NotSupportedError, StorageError
from tests.conftest import E3_DOCKERFILE, E3_REQUEST, E8_REQUEST, JSON_HEADERS


@pytest.fixture(autouse=True)
def quiet_logging():
    """The CLI reconfigures the root logger; keep pytest's handlers."""
    with patch("app.cli.configure_cli_logging"):
        yield


@pytest.fixture
def repro(store_path, capsys):
    """Invoke the CLI on the sandbox store and return (exit code, stdout, stderr)."""

    def invoke(*args, as_json=False):
        argv = ["--store", str(store_path), "--driver", "sandbox"]
        if as_json:
            argv.append("--json")
        code = cli_dispatch(argv + list(args))
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return invoke


@pytest.fixture
def project_id(repro):
    code, out, _ = repro("init", "--name", "E3", "--description", "subgraph experiment")
    assert code == 0
    return out.strip()


@pytest.fixture
def request_file(tmp_path):
    path = tmp_path / "request.json"
    path.write_text(json.dumps(E3_REQUEST), encoding="utf-8")
    return path


@pytest.fixture
def shell_request(tmp_path):
    path = tmp_path / "shell.json"
    path.write_text(json.dumps({"languages": ["shell"]}), encoding="utf-8")
    return path


@pytest.mark.parametrize(
    "error, code",
    [
        (NotFoundError("x"), 2),
        (NotSupportedError("x"), 2),
        (EngineFailure("x"), 1),
        (StorageError("x"), 1),
    ],
)
def test_exit_code_for(error, code):
    assert exit_code_for(error) == code


def test_init_and_show(repro, project_id):
    code, out, _ = repro("show", "--project", project_id)
    assert code == 0
    assert json.loads(out)["name"] == "E3"
    code, out, _ = repro("show")
    assert [project["id"] for project in json.loads(out)["projects"]] == [project_id]


def test_unknown_project_exits_2(repro):
    """Test that a NotFound error is printed as JSON on stderr."""
    code, out, err = repro("show", "--project", "nope")
    assert code == 2
    assert out == ""
    assert json.loads(err)["error"]["code"] == "NotFound"


def test_usage_error_exits_2(repro):
    code, _, err = repro("init")
    assert code == 2
    assert "--name" in err


def test_add_needs_one_source(repro, project_id, tmp_path):
    code, _, err = repro("add", "--project", project_id, "--dir", str(tmp_path), "--git", "https://example.org/r.git")
    assert code == 2
    assert "exactly one" in err


def test_add_dir_and_edit(repro, project_id, tmp_path):
    source = tmp_path / "experiment"
    (source / "src").mkdir(parents=True)
    (source / "src" / "bbfs_node.cpp").write_text("int main() {}\n")
    code, out, _ = repro("add", "--project", project_id, "--dir", str(source))
    assert code == 0
    assert out.strip() == "2 entries added"
    content = tmp_path / "README.md"
    content.write_text("# E3\n")
    code, out, _ = repro(
        "files", "--project", project_id, "--action", "createfile", "--path", "README.md", "--content", str(content)
    )
    assert code == 0
    assert out.strip() == "CreateFile README.md"


def test_env_preview_is_golden(repro, project_id, request_file):
    """Test that the rendered E3 specification matches the golden Dockerfile."""
    code, out, _ = repro("env", "--project", project_id, "--request", str(request_file), "--no-build")
    assert code == 0
    assert out == E3_DOCKERFILE


def test_engine_failure_exits_1(repro, project_id, tmp_path):
    path = tmp_path / "failing.json"
    path.write_text(json.dumps({"languages": ["shell"], "commandsToAdd": ["exit 4"]}), encoding="utf-8")
    code, _, err = repro("env", "--project", project_id, "--request", str(path))
    assert code == 1
    assert json.loads(err)["error"] == {"code": "EngineFailure", "message": "RUN exit 4 exited with 4", "stage": "build"}


def test_malformed_seed_exits_2(repro, project_id):
    code, _, err = repro("seeds", "--project", project_id, "--seed", "train.py=42")
    assert code == 2
    assert "LOCATION:VARIABLE=VALUE" in err


def test_seeds(repro, project_id):
    code, out, _ = repro("seeds", "--project", project_id, "--seed", "train.py:SEED=42", "--seed", "eval.py:SEED=7")
    assert code == 0
    assert out.strip() == "2 seeds declared"


def test_run_verify_and_compare(repro, project_id, shell_request):
    """Test running, verifying and comparing from the command line."""
    code, out, _ = repro("env", "--project", project_id, "--request", str(shell_request), as_json=True)
    assert code == 0
    tag_id = str(json.loads(out)["tagId"])

    code, out, err = repro("run", "--project", project_id, "--tag", tag_id, "--command", "echo hi")
    assert code == 0
    assert out == "hi\n"
    assert "exited with 0" in err

    code, out, _ = repro("verify", "--project", project_id, "--tag", tag_id, "--command", "echo same > out.txt")
    assert code == 0
    assert out.splitlines()[0] == "Reproduced"

    runs = []
    for command in ("echo 1", "echo 2"):
        _, out, _ = repro("run", "--project", project_id, "--tag", tag_id, "--command", command, as_json=True)
        runs.append(json.loads(out)["runId"])
    code, out, _ = repro("compare", "--project", project_id, *runs)
    assert code == 0
    assert out.splitlines()[0] == "NotReproduced"

    code, out, _ = repro("show", "--project", project_id, "--images")
    assert [image["tagId"] for image in json.loads(out)["images"]] == [int(tag_id)]


def test_pack_and_check(repro, project_id, shell_request, tmp_path):
    _, out, _ = repro("env", "--project", project_id, "--request", str(shell_request), as_json=True)
    tag_id = str(json.loads(out)["tagId"])
    destination = tmp_path / "package"
    code, out, _ = repro(
        "pack", "--project", project_id, "--tag", tag_id, "--command", "echo packaged", "--out", str(destination)
    )
    assert code == 0
    assert out.strip() == str(destination)
    code, out, _ = repro("check-package", str(destination))
    assert code == 0
    assert out.strip() == "package E3 verified"
    code, out, _ = repro("check-package", str(destination), "--replay", as_json=True)
    assert json.loads(out)["outcomes"][0]["stdout"] == "packaged\n"


def test_json_matches_http(repro, client, tmp_path, shell_request):
    """Test that the CLI and the HTTP service return the same documents."""
    project_id = client.post("/projects", json={"name": "E3"}, headers=JSON_HEADERS).json["id"]

    for name, payload in (("e3.json", E3_REQUEST), ("e8.json", E8_REQUEST)):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        _, out, _ = repro("env", "--project", project_id, "--request", str(path), "--no-build", as_json=True)
        http = client.post(f"/projects/{project_id}/dockerfile", json=payload, headers=JSON_HEADERS)
        assert json.loads(out) == http.json

    _, out, _ = repro("env", "--project", project_id, "--request", str(shell_request), as_json=True)
    http = client.post(f"/projects/{project_id}/environment", json={"languages": ["shell"]}, headers=JSON_HEADERS)
    from_cli = json.loads(out)
    from_http = http.json
    assert from_cli["tagId"] != from_http["tagId"]
    for document in (from_cli, from_http):
        del document["tagId"]
        del document["engineTag"]
    assert from_cli == from_http
