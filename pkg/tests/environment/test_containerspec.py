# -*- coding: utf-8 -*-
"""
Tests for container spec generation and environment planning.
"""

import random

import pytest

from app.environment.containerspec import (
    ContainerSpec,
    DatabaseEngine,
    Directive,
    DirectiveKind,
    EnvironmentRequest,
    generate_spec,
    network_name,
    plan_environment,
    translate_commands,
)
from app.exceptions import NotSupportedError, ValidationError
from app.projects.models import ProjectType, SeedDecl
from tests.conftest import E3_DOCKERFILE, E3_REQUEST, E8_DOCKERFILE, E8_REQUEST


def test_e3_request_renders_golden_dockerfile():
    """The E3 request produces the exact E3 Dockerfile."""
    request = EnvironmentRequest.from_json(E3_REQUEST)
    assert generate_spec(request).render() == E3_DOCKERFILE


def test_e8_request_renders_golden_dockerfile():
    """cd becomes WORKDIR, the shell adds nothing and pip install comes last."""
    request = EnvironmentRequest.from_json(E8_REQUEST)
    assert generate_spec(request).render() == E8_DOCKERFILE


def test_generation_is_deterministic():
    request = EnvironmentRequest.from_json(E8_REQUEST)
    first = generate_spec(request)
    second = generate_spec(EnvironmentRequest.from_json(E8_REQUEST))
    assert first.render() == second.render()
    assert first.digest == second.digest


def test_parse_inverts_render():
    spec = generate_spec(EnvironmentRequest.from_json(E8_REQUEST))
    parsed = ContainerSpec.parse(spec.render())
    assert parsed == spec
    assert parsed.base_image == "ubuntu:20.04"


def test_base_image_override():
    spec = generate_spec(EnvironmentRequest.from_json(E3_REQUEST), base_image="ubuntu:22.04")
    assert spec.render().splitlines()[0] == "FROM ubuntu:22.04"


def test_duplicate_languages_install_once():
    request = EnvironmentRequest.from_json({"languages": ["python", "Python", "py"]})
    lines = generate_spec(request).render().splitlines()
    assert lines.count("RUN apt install -y python3.8 python3-pip") == 1


def test_default_versions_from_table():
    request = EnvironmentRequest.from_json({"languages": ["C++"]})
    assert "RUN apt install -y gcc-9 make g++" in generate_spec(request).render()


def test_unknown_language_is_not_supported():
    with pytest.raises(NotSupportedError):
        EnvironmentRequest.from_json({"languages": ["cobol"]})


def test_version_for_language_not_requested():
    with pytest.raises(ValidationError):
        EnvironmentRequest.from_json({"languages": ["C++"], "languagesVersion": {"python": "python:3.8"}})


def test_schema_rejects_malformed_request():
    with pytest.raises(ValidationError):
        EnvironmentRequest.from_json({"languages": "C++"})


def test_empty_languages_rejected():
    with pytest.raises(ValidationError):
        generate_spec(EnvironmentRequest.from_json({"languages": []}))


@pytest.mark.parametrize("command", ["", "   ", "make\nmake install", "make ", "mvn package\t"])
def test_bad_commands_rejected(command):
    with pytest.raises(ValidationError):
        EnvironmentRequest.from_json({"languages": ["C++"], "commandsToAdd": [command]})


def test_compound_cd_stays_run():
    directives = translate_commands(["cd src && make", "cd build", "  cd out  "])
    assert directives == [
        Directive(DirectiveKind.RUN, "cd src && make"),
        Directive(DirectiveKind.WORKDIR, "build"),
        Directive(DirectiveKind.WORKDIR, "out"),
    ]


def test_ai_project_requires_seeds():
    request = EnvironmentRequest.from_json({"languages": ["python"]}, project_type=ProjectType.AI)
    with pytest.raises(ValidationError, match="seeds"):
        generate_spec(request)


def test_ai_project_with_seeds_builds():
    seeds = (SeedDecl("train.py", "SEED", 42),)
    request = EnvironmentRequest.from_json({"languages": ["python"]}, project_type="AI", seeds=seeds)
    assert generate_spec(request).render().startswith("FROM ubuntu:20.04\n")


def _random_commands(rng):
    words = ["make", "ls -la", "python run.py", "./out 1 2", "mvn package", "echo cd x"]
    folders = ["src", "../..", "RLCheck/jqf/", "build", "a/b/c"]
    commands = []
    for _ in range(rng.randint(0, 50)):
        if rng.random() < 0.4:
            commands.append(f"cd {rng.choice(folders)}")
        else:
            commands.append(rng.choice(words))
    return commands


def test_translate_commands_counts_and_order():
    """cd commands become WORKDIR, the rest RUN, relative order preserved."""
    rng = random.Random(20240101)
    for _ in range(10_000):
        commands = _random_commands(rng)
        directives = translate_commands(commands)
        cd_count = sum(1 for command in commands if command.startswith("cd "))
        workdirs = [d for d in directives if d.kind is DirectiveKind.WORKDIR]
        runs = [d for d in directives if d.kind is DirectiveKind.RUN]
        assert len(directives) == len(commands)
        assert len(workdirs) == cd_count
        assert len(runs) == len(commands) - cd_count
        for command, directive in zip(commands, directives):
            if command.startswith("cd "):
                assert directive.argument == command[3:]
            else:
                assert directive.argument == command


def test_postgres_sidecar_plan():
    request = EnvironmentRequest.from_json(
        {
            "languages": ["python"],
            "database": {
                "engine": "postgres",
                "version": "13",
                "databaseName": "results",
                "credentials": {"user": "alice", "secret": "s3cret"},
                "initScripts": ["db/init.sql"],
            },
        },
        project_type="ScriptWithDatabase",
    )
    plan = plan_environment(request, "p1")
    assert plan.network_name == network_name("p1") == "reprokit-p1"
    (sidecar,) = plan.sidecars
    assert sidecar.image == "postgres:13"
    assert sidecar.alias == "postgresql"
    assert sidecar.port == 5432
    assert dict(sidecar.environment)["POSTGRES_USER"] == "alice"
    assert sidecar.mounts == (("db/init.sql", "/docker-entrypoint-initdb.d/init.sql"),)
    environment = dict(plan.environment)
    assert environment["DB_HOST"] == "postgresql"
    assert environment["DB_PASSWORD"] == "s3cret"
    assert environment["DB_NAME"] == "results"


def test_generated_credentials_when_absent():
    request = EnvironmentRequest.from_json({"languages": ["python"], "database": {"engine": "mongodb"}})
    plan = plan_environment(request, "p1")
    environment = dict(plan.environment)
    assert environment["DB_USER"] == "repro"
    assert len(environment["DB_PASSWORD"]) >= 16
    assert plan.sidecars[0].image.startswith("mongo:")


def test_unsupported_database_version():
    request = EnvironmentRequest.from_json({"languages": ["python"], "database": {"engine": "MySQL", "version": "4.1"}})
    with pytest.raises(NotSupportedError):
        plan_environment(request, "p1")


def test_sqlite_has_no_sidecar_and_no_credentials():
    request = EnvironmentRequest.from_json({"languages": ["python"], "database": {"engine": "sqlite"}})
    plan = plan_environment(request, "p1")
    assert plan.sidecars == ()
    assert dict(plan.environment) == {"DB_ENGINE": "sqlite", "DB_NAME": "experiment"}
    with pytest.raises(ValidationError):
        EnvironmentRequest.from_json(
            {"languages": ["python"], "database": {"engine": "sqlite", "credentials": {"user": "u", "secret": "s"}}}
        )


def test_database_engine_aliases():
    assert DatabaseEngine.parse("MongoDB") is DatabaseEngine.MONGO
    assert DatabaseEngine.parse("postgresql") is DatabaseEngine.POSTGRESQL
    with pytest.raises(NotSupportedError):
        DatabaseEngine.parse("oracle")


def test_plan_dict_shape():
    plan = plan_environment(EnvironmentRequest.from_json(E3_REQUEST), "p1")
    data = plan.to_dict()
    assert data["dockerfile"] == E3_DOCKERFILE
    assert data["specDigest"] == plan.main_spec.digest
    assert data["sidecars"] == []
    assert data["network"] == "reprokit-p1"
