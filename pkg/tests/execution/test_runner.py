# -*- coding: utf-8 -*-
"""
Tests for building environments, running experiments and verifying runs with
the sandbox driver.
"""

import shlex
import sys

import pytest

from app.exceptions import (
    EngineFailure,
    NotFoundError,
    NotSupportedError,
    StageFailure,
    ValidationError,
)
from app.execution.digests import TOMBSTONE, bytes_digest
from app.projects.models import EntryAction
from app.projects.store import FIRST_TAG_ID

PYTHON = shlex.quote(sys.executable)

SCRIPTS = {
    "seeded.py": "import random\nrandom.seed(42)\nprint(random.random())\n",
    "unseeded.py": "import random\nprint(random.random())\n",
    "stamp.py": "import time\nprint(time.time_ns())\n",
    "mixed.py": "import time\nprint('time:', time.time_ns())\nprint('result', 42)\n",
    "stamp_file.py": "import time\nopen('stamp.txt', 'w').write(str(time.time_ns()))\nprint('ok')\n",
    "data.txt": "keep me\n",
    "freebase/edges.txt": "1 2\n",
    "livejournal/edges.txt": "3 4\n",
}


@pytest.fixture
def project_id(pipeline):
    project_id = pipeline.create_project("experiment")["id"]
    for path, content in SCRIPTS.items():
        pipeline.modify_entry(project_id, EntryAction.CREATE_FILE, path, content)
    return project_id


@pytest.fixture
def tag_id(pipeline, project_id):
    return pipeline.build_environment(project_id, {"languages": ["python", "shell"]})["tagId"]


def verify(pipeline, project_id, tag_id, command, **extra):
    return pipeline.verify(project_id, {"tagId": tag_id, "command": command, **extra})


def test_build_allocates_first_tag(pipeline, project_id):
    image = pipeline.build_environment(project_id, {"languages": ["shell"]})
    assert image["tagId"] == FIRST_TAG_ID
    assert image["engineTag"] == f"reprokit/{project_id}:{FIRST_TAG_ID}"
    assert image["dockerfile"].startswith("FROM ubuntu:20.04\n")
    assert pipeline.list_images(project_id)["images"][0]["tagId"] == FIRST_TAG_ID
    stored = pipeline.store.environment_dir(project_id) / "Dockerfile"
    assert stored.read_text(encoding="utf-8") == image["dockerfile"]


def test_build_failure_is_engine_failure(pipeline, project_id):
    with pytest.raises(EngineFailure) as error:
        pipeline.build_environment(project_id, {"languages": ["shell"], "commandsToAdd": ["exit 7"]})
    assert error.value.stage == "build"


def test_build_runs_commands_in_workdir(pipeline, project_id):
    image = pipeline.build_environment(
        project_id, {"languages": ["shell"], "commandsToAdd": ["cd freebase", "cp edges.txt built.txt"]}
    )
    run = pipeline.run(project_id, {"tagId": image["tagId"], "command": "cat freebase/built.txt"})
    assert run["stdout"] == "1 2\n"


def test_deterministic_command_reproduces(pipeline, project_id, tag_id):
    report = verify(pipeline, project_id, tag_id, "echo hello > out.txt && echo done")
    assert report["verdict"] == "Reproduced"
    assert report["consoleMatch"] is True
    assert report["fileDiffs"] == []
    run = pipeline.get_run(project_id, report["runs"][0])
    assert run["changedFiles"] == {"out.txt": bytes_digest(b"hello\n")}
    assert run["purpose"] == "VerifyPair"


def test_timestamp_is_not_reproduced(pipeline, project_id, tag_id):
    report = verify(pipeline, project_id, tag_id, f"{PYTHON} stamp.py")
    assert report["verdict"] == "NotReproduced"
    assert report["consoleMatch"] is False
    assert report["consoleDiff"]


def test_seeded_random_reproduces(pipeline, project_id, tag_id):
    assert verify(pipeline, project_id, tag_id, f"{PYTHON} seeded.py")["verdict"] == "Reproduced"


def test_unseeded_random_is_not_reproduced(pipeline, project_id, tag_id):
    assert verify(pipeline, project_id, tag_id, f"{PYTHON} unseeded.py")["verdict"] == "NotReproduced"


def test_output_spec_limits_comparison(pipeline, project_id, tag_id):
    command = f"{PYTHON} stamp_file.py"
    console_only = verify(pipeline, project_id, tag_id, command, outputSpec=["console"])
    assert console_only["verdict"] == "Reproduced"
    with_file = verify(pipeline, project_id, tag_id, command, outputSpec=["console", "stamp.txt"])
    assert with_file["verdict"] == "NotReproduced"
    assert with_file["fileDiffs"] == [{"path": "stamp.txt", "status": "DigestMismatch"}]


def test_ignore_patterns(pipeline, project_id, tag_id):
    command = f"{PYTHON} mixed.py"
    assert verify(pipeline, project_id, tag_id, command)["verdict"] == "NotReproduced"
    report = verify(pipeline, project_id, tag_id, command, ignorePatterns=["^time:"])
    assert report["verdict"] == "Reproduced"


def test_runs_are_isolated(pipeline, project_id, tag_id):
    """Every run starts from the image, not from the previous run."""
    first = pipeline.run(project_id, {"tagId": tag_id, "command": "rm data.txt"})
    assert first["changedFiles"] == {"data.txt": TOMBSTONE}
    second = pipeline.run(project_id, {"tagId": tag_id, "command": "cat data.txt"})
    assert second["stdout"] == "keep me\n"
    assert second["changedFiles"] == {}


def test_failed_command_is_recorded(pipeline, project_id, tag_id):
    run = pipeline.run(project_id, {"tagId": tag_id, "command": "echo oops >&2; exit 3"})
    assert run["exitCode"] == 3
    assert run["stderr"] == "oops\n"
    assert pipeline.get_run(project_id, run["runId"])["exitCode"] == 3
    assert [record["runId"] for record in pipeline.list_runs(project_id)["runs"]] == [run["runId"]]


def test_empty_command_rejected(pipeline, project_id, tag_id):
    with pytest.raises(ValidationError):
        pipeline.run(project_id, {"tagId": tag_id, "command": "  "})


def test_unknown_tag(pipeline, project_id, tag_id):
    with pytest.raises(NotFoundError):
        pipeline.run(project_id, {"tagId": tag_id + 50, "command": "true"})


def test_tag_of_another_project(pipeline, project_id, tag_id):
    other = pipeline.create_project("other")["id"]
    with pytest.raises(ValidationError):
        pipeline.run(other, {"tagId": tag_id, "command": "true"})


def test_dataset_is_exposed_to_the_run(pipeline, project_id, tag_id):
    pipeline.set_dataset(project_id, {"id": "fb", "root": "freebase"})
    run = pipeline.run(project_id, {"tagId": tag_id, "command": 'cat "$REPRO_DATASET_DIR/edges.txt"'})
    assert run["stdout"] == "1 2\n"
    assert run["datasetId"] == "fb"
    assert run["purpose"] == "Manual"


def test_external_dataset_is_mounted(pipeline, project_id, tag_id, tmp_path):
    external = tmp_path / "external"
    external.mkdir()
    (external / "edges.txt").write_text("5 6\n")
    pipeline.set_dataset(project_id, {"id": "ext", "root": str(external), "external": True})
    run = pipeline.run(project_id, {"tagId": tag_id, "command": 'cat "$REPRO_DATASET_DIR/edges.txt"'})
    assert run["stdout"] == "5 6\n"


def test_replication_on_other_dataset(pipeline, project_id, tag_id):
    command = 'cat "$REPRO_DATASET_DIR/edges.txt"'
    pipeline.set_dataset(project_id, {"id": "fb", "root": "freebase"})
    original = pipeline.run(project_id, {"tagId": tag_id, "command": command})
    pipeline.set_dataset(project_id, {"id": "lj", "root": "livejournal"})
    current = pipeline.run(project_id, {"tagId": tag_id, "command": command})
    replication = pipeline.run(project_id, {"tagId": tag_id, "command": command, "datasetId": "fb"})
    assert replication["purpose"] == "Replication"
    assert replication["stdout"] == original["stdout"]
    report = pipeline.compare(project_id, {"runA": original["runId"], "runB": current["runId"]})
    assert report["verdict"] == "ReplicationDiff"
    same = pipeline.compare(project_id, {"runA": original["runId"], "runB": replication["runId"]})
    assert same["verdict"] == "Reproduced"
    with pytest.raises(NotFoundError):
        pipeline.run(project_id, {"tagId": tag_id, "command": command, "datasetId": "nope"})


def test_expected_results(pipeline, project_id, tag_id):
    run = pipeline.run(project_id, {"tagId": tag_id, "command": "echo 42 > answer.txt; echo done"})
    matching = pipeline.expect(
        project_id,
        {"runId": run["runId"], "expected": {"stdout": "done\n", "files": {"answer.txt": bytes_digest(b"42\n")}}},
    )
    assert matching["verdict"] == "Reproduced"
    mismatch = pipeline.expect(
        project_id, {"runId": run["runId"], "expected": {"files": {"answer.txt": "0" * 64, "missing.txt": "x"}}}
    )
    assert mismatch["verdict"] == "NotReproduced"
    assert mismatch["fileDiffs"] == [
        {"path": "answer.txt", "status": "DigestMismatch"},
        {"path": "missing.txt", "status": "OnlyInB"},
    ]


def test_configure_builds_and_runs_twice(pipeline, project_id):
    result = pipeline.configure(
        project_id, {"request": {"languages": ["python"]}, "command": f"{PYTHON} seeded.py"}
    )
    assert result["report"]["verdict"] == "Reproduced"
    assert [run["purpose"] for run in result["runs"]] == ["Configure", "Configure"]
    assert result["runs"][0]["pairId"] == result["runs"][1]["pairId"]
    assert result["image"]["tagId"] == FIRST_TAG_ID


def test_configure_names_failed_stage(pipeline, project_id):
    with pytest.raises(StageFailure) as error:
        pipeline.configure(
            project_id, {"request": {"languages": ["shell"], "commandsToAdd": ["false"]}, "command": "true"}
        )
    assert error.value.stage == "build"
    assert error.value.to_dict()["error"]["code"] == "StageFailure"


def test_configure_ai_project_without_seeds(pipeline):
    project_id = pipeline.create_project("net", project_type="AI")["id"]
    with pytest.raises(ValidationError) as error:
        pipeline.configure(project_id, {"request": {"languages": ["python"]}, "command": "true"})
    assert error.value.stage == "spec"


def test_sandbox_rejects_database_sidecars(pipeline, project_id):
    image = pipeline.build_environment(
        project_id, {"languages": ["python"], "database": {"engine": "postgres", "version": "13"}}
    )
    with pytest.raises(NotSupportedError):
        pipeline.run(project_id, {"tagId": image["tagId"], "command": "true"})
