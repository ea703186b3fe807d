# -*- coding: utf-8 -*-
"""
Module: languages.py

Infer the programming languages of a project from file extensions and resolve
requested toolchain versions to installable package sets.

Both lookups are driven by a checked-in YAML table (`data/languages.yaml`),
which can be replaced through the `REPRO_LANGUAGE_TABLE` setting. Supporting a
new language means adding a table entry.

Functions:
- `load_language_table(path)`: Load (and cache) a language table.
- `infer_languages(tree, table)`: `LanguageProfile` of a file tree.
- `parse_language(name, table)`: Map a request spelling (`"C++"`, `"java"`,
  `"shell"`, ...) to a `Language`.
- `resolve_toolchain(language, version_request, table)`: `ResolvedToolchain`
  for a version request such as `"gcc:8"`, `"python:3.8"` or `"openjdk-11"`.
"""

import functools
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path, PurePosixPath

import yaml

from app.exceptions import NotSupportedError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_TABLE_PATH = Path(__file__).parent / "data" / "languages.yaml"
EVIDENCE_CAP = 20
VERSION_PATTERN = re.compile(
    r"^\s*(?P<tool>[a-z][a-z+]*?)\s*[:-]?\s*(?P<version>\d+(?:\.\d+)?)\s*$"
)


class Language(str, Enum):
    CPP = "Cpp"
    PERL = "Perl"
    R = "R"
    JAVA_MAVEN = "JavaMaven"
    PYTHON = "Python"
    UNIX_SHELL = "UnixShell"
    JUPYTER_NOTEBOOK = "JupyterNotebook"


@dataclass(frozen=True)
class Alternative:
    """
    An `update-alternatives --install` registration.
    """

    link: str
    name: str
    target: str
    priority: int


@dataclass(frozen=True)
class ResolvedToolchain:
    language: Language
    version_request: str
    packages: tuple
    alternatives: tuple = ()
    base_provided: bool = False

    def to_dict(self):
        return {
            "language": self.language.value,
            "versionRequest": self.version_request,
            "packages": list(self.packages),
            "alternatives": [
                [alt.link, alt.name, alt.target, alt.priority] for alt in self.alternatives
            ],
            "baseProvided": self.base_provided,
        }


@dataclass(frozen=True)
class LanguageProfile:
    """
    Languages found in a tree with the paths that gave them away.
    """

    languages: frozenset = frozenset()
    evidence: dict = field(default_factory=dict)
    unsupported: dict = field(default_factory=dict)
    unknown_extensions: tuple = ()

    def to_dict(self, table=None):
        table = table or load_language_table()
        ordered = sorted(self.languages, key=lambda language: language.value)
        return {
            "languages": [table.display(language) for language in ordered],
            "evidence": {
                table.display(language): list(self.evidence[language]) for language in ordered
            },
            "unsupported": {name: list(paths) for name, paths in sorted(self.unsupported.items())},
            "unknownExtensions": list(self.unknown_extensions),
        }


class LanguageTable:
    """
    Parsed language/toolchain table.
    """

    def __init__(self, data):
        self.extensions = {ext.lower(): Language(lang) for ext, lang in data["extensions"].items()}
        self.java_build_files = set(data.get("java_build_files", ["pom.xml"]))
        self.languages = {Language(key): value for key, value in data["languages"].items()}
        self.names = {}
        for language, entry in self.languages.items():
            self.names[language.value.lower()] = language
            for name in entry.get("names", []):
                self.names[str(name).lower()] = language

    def display(self, language):
        return self.languages[language].get("display", language.value)

    def language_for_extension(self, extension):
        return self.extensions.get(extension.lower())


@functools.lru_cache(maxsize=8)
def load_language_table(path=None):
    """
    Load the language table from `path` or the bundled default.
    """
    with open(path or DEFAULT_TABLE_PATH, "r", encoding="utf-8") as handle:
        return LanguageTable(yaml.safe_load(handle))


def _file_paths(tree):
    for node in tree:
        if isinstance(node, str):
            yield node
        elif getattr(node, "kind", None) is None or node.kind.value == "File":
            yield node.path


def infer_languages(tree, table=None):
    """
    Infer languages from the extensions of the files in `tree`.

    `.java` counts as Java (maven) only when a `pom.xml` exists somewhere in the
    tree; otherwise it is reported as unsupported. Unknown extensions are
    reported and never change the language set.
    """
    table = table or load_language_table()
    paths = sorted(set(_file_paths(tree)))
    has_build_file = any(PurePosixPath(path).name in table.java_build_files for path in paths)
    evidence = {}
    unsupported = {}
    unknown = set()
    for path in paths:
        extension = PurePosixPath(path).suffix.lower()
        if not extension:
            continue
        language = table.language_for_extension(extension)
        if language is None:
            unknown.add(extension)
            continue
        if language is Language.JAVA_MAVEN and not has_build_file:
            unsupported.setdefault("Java", []).append(path)
            continue
        evidence.setdefault(language, []).append(path)
    return LanguageProfile(
        languages=frozenset(evidence),
        evidence={language: tuple(found[:EVIDENCE_CAP]) for language, found in evidence.items()},
        unsupported={name: tuple(found[:EVIDENCE_CAP]) for name, found in unsupported.items()},
        unknown_extensions=tuple(sorted(unknown)),
    )


def parse_language(name, table=None):
    """
    Map a language spelling from a request to a `Language`.
    """
    table = table or load_language_table()
    if isinstance(name, Language):
        return name
    language = table.names.get(str(name).strip().lower())
    if language is None:
        raise NotSupportedError(f"unsupported language: {name!r}")
    return language


def parse_version_request(version_request):
    """
    Split `<tool>:<major[.minor]>` (or `<tool>-<major[.minor]>`) into parts.
    """
    match = VERSION_PATTERN.match(str(version_request).lower())
    if match is None:
        raise ValidationError(f"unparseable version request: {version_request!r}")
    return match.group("tool"), match.group("version")


def _fill(template, version):
    return str(template).replace("{version}", version)


def resolve_toolchain(language, version_request=None, table=None):
    """
    Resolve a language and optional version request to packages and
    alternatives registrations. Absent requests use the table default.
    """
    table = table or load_language_table()
    language = parse_language(language, table)
    entry = table.languages.get(language)
    if entry is None:
        raise NotSupportedError(f"unsupported language: {language.value}")
    if entry.get("versionless"):
        return ResolvedToolchain(
            language=language,
            version_request="",
            packages=tuple(entry["packages"]),
            base_provided=bool(entry.get("base_provided", False)),
        )
    request = version_request or entry["default"]
    tool, version = parse_version_request(request)
    tools = entry["tools"]
    if tool not in tools:
        if len(tools) == 1 and table.names.get(tool) is language:
            tool = next(iter(tools))
        else:
            raise ValidationError(
                f"unknown tool {tool!r} for {table.display(language)}; expected one of {sorted(tools)}"
            )
    spec = tools[tool]
    if version not in [str(known) for known in spec.get("versions", [])]:
        logger.warning("%s %s is not a known version of %s", tool, version, table.display(language))
    return ResolvedToolchain(
        language=language,
        version_request=f"{tool}:{version}",
        packages=tuple(_fill(package, version) for package in spec["packages"]),
        alternatives=tuple(
            Alternative(_fill(link, version), _fill(name, version), _fill(target, version), int(priority))
            for link, name, target, priority in spec.get("alternatives", [])
        ),
        base_provided=bool(entry.get("base_provided", False)),
    )
