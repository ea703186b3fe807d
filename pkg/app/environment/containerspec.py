# -*- coding: utf-8 -*-
"""
Module: containerspec.py

Generate the container specification (Dockerfile-compatible text) for an
environment request, and plan the database sidecars that run next to the
experiment container.

A specification is always assembled in the same order:

    1. FROM <base image>
    2. RUN  apt update &&  apt upgrade -y
    3. one install block per requested language, in request order
       (apt install line, then update-alternatives registrations)
    4. WORKDIR /files
    5. COPY ./files .
    6. RUN mvn package              (JavaMaven only)
    7. the request's commands       (`cd X` becomes `WORKDIR X`)
    8. RUN pip install -r requirements.txt   (when the request says so)

Rendering joins `KIND argument` lines with LF and ends with a newline.
`ContainerSpec.parse` is the exact inverse of `render`.

Functions:
- `translate_commands(commands)`: Directives for the request's commands.
- `generate_spec(request, base_image, table)`: The `ContainerSpec`.
- `plan_environment(request, project_id, ...)`: Spec plus sidecars and network.
"""

import functools
import logging
import re
import secrets
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import yaml

from app.environment.languages import Language, load_language_table, parse_language, resolve_toolchain
from app.exceptions import NotSupportedError, ValidationError
from app.execution.digests import bytes_digest
from app.projects.models import ProjectType, SeedDecl, normalize_path
from app.utils import is_truthy, load_json_schema, validate_json_against_json_schema

logger = logging.getLogger(__name__)

DEFAULT_BASE_IMAGE = "ubuntu:20.04"
DATABASES_PATH = Path(__file__).parent / "data" / "databases.yaml"
REQUEST_SCHEMA_PATH = Path(__file__).parent / "jsonschemas" / "environment-request.json"
UPGRADE_ARGUMENT = " apt update &&  apt upgrade -y"
WORKDIR_FILES = "/files"
COPY_FILES = "./files ."
MAVEN_BUILD = "mvn package"
PIP_INSTALL = "pip install -r requirements.txt"
INIT_SCRIPTS_DIR = "/docker-entrypoint-initdb.d"
CD_PATTERN = re.compile(r"^\s*cd\s+([^\s;&|<>]+)\s*$")


class DirectiveKind(str, Enum):
    FROM = "FROM"
    RUN = "RUN"
    WORKDIR = "WORKDIR"
    COPY = "COPY"


@dataclass(frozen=True)
class Directive:
    kind: DirectiveKind
    argument: str

    def render(self):
        return f"{self.kind.value} {self.argument}"


@dataclass(frozen=True)
class ContainerSpec:
    """
    Ordered directives of a container image.
    """

    directives: tuple

    def __post_init__(self):
        if not self.directives or self.directives[0].kind is not DirectiveKind.FROM:
            raise ValidationError("a container spec must start with FROM")
        copies = sum(1 for directive in self.directives if directive.kind is DirectiveKind.COPY)
        if copies != 1:
            raise ValidationError(f"a container spec copies the project tree exactly once, found {copies}")

    def render(self):
        return "".join(f"{directive.render()}\n" for directive in self.directives)

    @property
    def digest(self):
        return bytes_digest(self.render().encode("utf-8"))

    @property
    def base_image(self):
        return self.directives[0].argument

    @classmethod
    def parse(cls, text):
        """
        Parse rendered spec text back into directives.
        """
        directives = []
        for number, line in enumerate(text.split("\n"), start=1):
            if line == "":
                continue
            kind, _, argument = line.partition(" ")
            try:
                directives.append(Directive(DirectiveKind(kind), argument))
            except ValueError as e:
                raise ValidationError(f"line {number}: unknown directive {kind!r}") from e
        return cls(tuple(directives))


class DatabaseEngine(str, Enum):
    MONGO = "Mongo"
    SQLITE = "SQLite"
    MYSQL = "MySQL"
    POSTGRESQL = "PostgreSQL"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value or "").strip().lower()
        aliases = {"mongodb": cls.MONGO, "postgres": cls.POSTGRESQL, "sqlite3": cls.SQLITE}
        if key in aliases:
            return aliases[key]
        for member in cls:
            if member.value.lower() == key:
                return member
        raise NotSupportedError(f"unsupported database engine: {value!r}")


@dataclass(frozen=True)
class DatabaseConfig:
    engine: DatabaseEngine
    version: str = ""
    database_name: str = "experiment"
    credentials: tuple | None = None
    init_scripts: tuple = ()

    def __post_init__(self):
        if self.engine is DatabaseEngine.SQLITE and self.credentials:
            raise ValidationError("SQLite databases take no credentials")

    def to_dict(self):
        data = {
            "engine": self.engine.value,
            "version": self.version,
            "databaseName": self.database_name,
            "initScripts": list(self.init_scripts),
        }
        if self.credentials:
            data["credentials"] = {"user": self.credentials[0], "secret": self.credentials[1]}
        return data

    @classmethod
    def from_dict(cls, data):
        engine = DatabaseEngine.parse(data.get("engine"))
        credentials = data.get("credentials")
        if credentials:
            credentials = (str(credentials.get("user", "")), str(credentials.get("secret", "")))
        return cls(
            engine=engine,
            version=str(data.get("version", "") or ""),
            database_name=data.get("databaseName") or "experiment",
            credentials=credentials or None,
            init_scripts=tuple(normalize_path(path) for path in data.get("initScripts", [])),
        )


@dataclass(frozen=True)
class EnvironmentRequest:
    """
    What the researcher asks for. Field names on the wire follow the request
    payload (`languages`, `languagesVersion`, `commandsToAdd`,
    `hasRequirementsFile`).
    """

    languages: tuple
    languages_version: dict = field(default_factory=dict)
    commands_to_add: tuple = ()
    has_requirements_file: bool = False
    seeds: tuple = ()
    database: DatabaseConfig | None = None
    project_type: ProjectType = ProjectType.SCRIPT

    def __post_init__(self):
        requested = {parse_language(name) for name in self.languages}
        for name in self.languages_version:
            if parse_language(name) not in requested:
                raise ValidationError(f"version given for {name!r}, which is not in languages")
        for command in self.commands_to_add:
            if not str(command).strip():
                raise ValidationError("commands must not be empty")
            if "\n" in command or "\r" in command:
                raise ValidationError(f"commands must be single lines: {command!r}")
            if command != command.rstrip():
                raise ValidationError(f"commands must not end with whitespace: {command!r}")

    def version_for(self, language):
        for name, version in self.languages_version.items():
            if parse_language(name) is language:
                return version
        return None

    @classmethod
    def from_json(cls, data, project_type=None, seeds=None):
        """
        Build a request from its JSON payload. Seeds and project type given
        here (from the project) are used when the payload has none.
        """
        if not isinstance(data, dict):
            raise ValidationError("environment request must be a JSON object")
        valid, message = validate_json_against_json_schema(data, _request_schema())
        if not valid:
            raise ValidationError(f"invalid environment request: {message}")
        payload_seeds = [SeedDecl.from_dict(seed) for seed in data.get("seeds", [])]
        database = data.get("database")
        return cls(
            languages=tuple(data["languages"]),
            languages_version=dict(data.get("languagesVersion", {})),
            commands_to_add=tuple(data.get("commandsToAdd", [])),
            has_requirements_file=is_truthy(data.get("hasRequirementsFile", False)),
            seeds=tuple(payload_seeds or seeds or ()),
            database=DatabaseConfig.from_dict(database) if database else None,
            project_type=ProjectType.parse(data.get("projectType") or project_type or ProjectType.SCRIPT),
        )

    def to_json(self):
        data = {
            "languages": list(self.languages),
            "languagesVersion": dict(self.languages_version),
            "commandsToAdd": list(self.commands_to_add),
            "hasRequirementsFile": self.has_requirements_file,
        }
        if self.seeds:
            data["seeds"] = [seed.to_dict() for seed in self.seeds]
        if self.database is not None:
            data["database"] = self.database.to_dict()
        return data


@dataclass(frozen=True)
class Sidecar:
    image: str
    environment: tuple
    alias: str
    port: int
    mounts: tuple = ()

    def to_dict(self):
        return {
            "image": self.image,
            "environment": dict(self.environment),
            "alias": self.alias,
            "port": self.port,
            "mounts": [list(mount) for mount in self.mounts],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            image=data["image"],
            environment=tuple(sorted(data.get("environment", {}).items())),
            alias=data["alias"],
            port=int(data["port"]),
            mounts=tuple(tuple(mount) for mount in data.get("mounts", [])),
        )


@dataclass(frozen=True)
class EnvironmentPlan:
    main_spec: ContainerSpec
    sidecars: tuple
    network_name: str
    environment: tuple = ()

    def __post_init__(self):
        aliases = [sidecar.alias for sidecar in self.sidecars]
        if len(aliases) != len(set(aliases)):
            raise ValidationError("sidecar aliases must be unique")

    def to_dict(self):
        return {
            "dockerfile": self.main_spec.render(),
            "specDigest": self.main_spec.digest,
            "sidecars": [sidecar.to_dict() for sidecar in self.sidecars],
            "network": self.network_name,
            "environment": dict(self.environment),
        }


@functools.lru_cache(maxsize=1)
def _request_schema():
    return load_json_schema(REQUEST_SCHEMA_PATH)


@functools.lru_cache(maxsize=4)
def load_database_table(path=None):
    with open(path or DATABASES_PATH, "r", encoding="utf-8") as handle:
        return {DatabaseEngine(name): entry for name, entry in yaml.safe_load(handle).items()}


def translate_commands(commands):
    """
    `cd <path>` becomes a WORKDIR directive, anything else a RUN directive.
    Compound commands such as `cd a && make` stay RUN lines.
    """
    directives = []
    for command in commands:
        match = CD_PATTERN.match(command)
        if match:
            directives.append(Directive(DirectiveKind.WORKDIR, match.group(1)))
        else:
            directives.append(Directive(DirectiveKind.RUN, command))
    return directives


def install_block(toolchain):
    """
    Directives installing one resolved toolchain.
    """
    if toolchain.base_provided:
        return []
    block = [Directive(DirectiveKind.RUN, "apt install -y " + " ".join(toolchain.packages))]
    for alt in toolchain.alternatives:
        block.append(
            Directive(
                DirectiveKind.RUN,
                f"update-alternatives --install {alt.link} {alt.name} {alt.target} {alt.priority}",
            )
        )
    return block


def generate_spec(request, base_image=None, table=None):
    """
    Assemble the container spec for `request`.
    """
    table = table or load_language_table()
    if not request.languages:
        raise ValidationError("at least one language is required")
    if request.project_type is ProjectType.AI and not request.seeds:
        raise ValidationError("AI projects must declare the seeds used in the code before building")
    directives = [
        Directive(DirectiveKind.FROM, base_image or DEFAULT_BASE_IMAGE),
        Directive(DirectiveKind.RUN, UPGRADE_ARGUMENT),
    ]
    languages = []
    for name in request.languages:
        language = parse_language(name, table)
        if language in languages:
            continue
        languages.append(language)
        toolchain = resolve_toolchain(language, request.version_for(language), table)
        directives.extend(install_block(toolchain))
    directives.append(Directive(DirectiveKind.WORKDIR, WORKDIR_FILES))
    directives.append(Directive(DirectiveKind.COPY, COPY_FILES))
    if Language.JAVA_MAVEN in languages:
        directives.append(Directive(DirectiveKind.RUN, MAVEN_BUILD))
    directives.extend(translate_commands(request.commands_to_add))
    if request.has_requirements_file:
        directives.append(Directive(DirectiveKind.RUN, PIP_INSTALL))
    spec = ContainerSpec(tuple(directives))
    logger.debug("Generated spec %s with %d directives", spec.digest[:12], len(directives))
    return spec


def _sidecar(config, entry, project_id):
    versions = [str(version) for version in entry.get("versions", [])]
    version = config.version or versions[0]
    if version not in versions:
        raise NotSupportedError(
            f"unsupported {config.engine.value} version {version!r}; supported: {versions}"
        )
    user, secret = config.credentials or ("repro", secrets.token_urlsafe(18))
    names = entry["credentials"]
    environment = {
        names["user"]: user,
        names["secret"]: secret,
        names["database"]: config.database_name,
    }
    environment.update(entry["credentials"].get("extra", {}))
    mounts = tuple(
        (path, f"{INIT_SCRIPTS_DIR}/{Path(path).name}") for path in config.init_scripts
    )
    sidecar = Sidecar(
        image=f"{entry['image']}:{version}",
        environment=tuple(sorted(environment.items())),
        alias=entry["alias"],
        port=int(entry["port"]),
        mounts=mounts,
    )
    connection = {
        "DB_ENGINE": config.engine.value.lower(),
        "DB_HOST": sidecar.alias,
        "DB_PORT": str(sidecar.port),
        "DB_NAME": config.database_name,
        "DB_USER": user,
        "DB_PASSWORD": secret,
    }
    logger.info("Planned %s sidecar for project %s", sidecar.image, project_id)
    return sidecar, connection


def network_name(project_id):
    return f"reprokit-{project_id}"


def plan_environment(request, project_id, base_image=None, table=None, databases=None):
    """
    Main spec, database sidecars and the project network.
    Credentials missing from the request are generated once per plan.
    """
    spec = generate_spec(request, base_image=base_image, table=table)
    sidecars = []
    environment = {}
    config = request.database
    if config is not None:
        entry = (databases or load_database_table())[config.engine]
        if entry.get("sidecar", True):
            sidecar, environment = _sidecar(config, entry, project_id)
            sidecars.append(sidecar)
        else:
            versions = [str(version) for version in entry.get("versions", [])]
            if config.version and config.version not in versions:
                raise NotSupportedError(f"unsupported SQLite version {config.version!r}")
            environment = {"DB_ENGINE": "sqlite", "DB_NAME": config.database_name}
    return EnvironmentPlan(
        main_spec=spec,
        sidecars=tuple(sidecars),
        network_name=network_name(project_id),
        environment=tuple(sorted(environment.items())),
    )
