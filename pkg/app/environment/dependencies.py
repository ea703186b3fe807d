# -*- coding: utf-8 -*-
"""
Module: dependencies.py

Static dependency inference. Builds the project dependency graph for Python
(`.py` files and notebook code cells) and R sources, classifies each imported
name as local (a file or package in the tree) or external (a package to
install), and emits requirements manifests.

Rules:
- Python: `import X` and `from X import Y` are read with `ast`, including
  imports nested in `if`/`try` blocks. The top-level name `X` is local when
  `X.py`, `X/__init__.py` or a folder `X/` exists next to the importing file
  or at the tree root; relative imports are always local; standard-library
  modules are neither local nor external. Everything else is external.
- R: `library(x)`, `require(x)` and `requireNamespace("x")` name external
  packages unless a local `x.R` exists; `source("f.R")` adds an include edge.
- Import names that differ from installable names go through an alias table.
- Inferred requirements never carry version pins.
"""

import ast
import functools
import json
import logging
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path, PurePosixPath

import yaml

from app.environment.languages import Language, parse_language
from app.exceptions import NotSupportedError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_ALIAS_PATH = Path(__file__).parent / "data" / "package_aliases.yaml"
REQUIREMENTS_FILE = "requirements.txt"
STDLIB_MODULES = frozenset(sys.stdlib_module_names) | {"__future__", "__main__"}
R_LIBRARY_PATTERN = re.compile(
    r"\b(?:library|require|requireNamespace)\s*\(\s*(?:package\s*=\s*)?"
    r"[\"']?([A-Za-z][A-Za-z0-9._]*)[\"']?"
)
R_SOURCE_PATTERN = re.compile(r"\bsource\s*\(\s*[\"']([^\"']+)[\"']")
REQUIREMENT_LINE = re.compile(r"^\s*([A-Za-z0-9][A-Za-z0-9._-]*)\s*(.*?)\s*$")
MAX_WORKERS = 8


class EdgeKind(str, Enum):
    IMPORT = "Import"
    SOURCE_INCLUDE = "SourceInclude"


@dataclass(frozen=True, order=True)
class ModuleId:
    """
    A graph node: a file of the tree (`path`) or an external package (`name`).
    """

    kind: str
    key: str

    @classmethod
    def file(cls, path):
        return cls("file", path)

    @classmethod
    def external(cls, name):
        return cls("external", name)

    @property
    def is_external(self):
        return self.kind == "external"

    def __str__(self):
        return f"{self.kind}:{self.key}"


@dataclass(frozen=True, order=True)
class PackageReq:
    """
    An installable package requirement.
    """

    name: str
    version_constraint: str | None = None
    language: Language = Language.PYTHON

    def __post_init__(self):
        if not self.name or not str(self.name).strip():
            raise ValidationError("package name must not be empty")
        name = str(self.name).strip()
        if self.language is Language.PYTHON:
            name = name.lower()
        object.__setattr__(self, "name", name)

    def line(self):
        return f"{self.name}{self.version_constraint or ''}"


@dataclass(frozen=True)
class DependencyGraph:
    nodes: frozenset = frozenset()
    edges: frozenset = frozenset()
    externals: frozenset = frozenset()
    skipped: tuple = field(default=(), compare=False)

    def to_dict(self):
        return {
            "nodes": [str(node) for node in sorted(self.nodes)],
            "edges": [
                {"from": str(source), "to": str(target), "kind": kind.value}
                for source, target, kind in sorted(self.edges, key=lambda edge: (edge[0], edge[1], edge[2].value))
            ],
            "externals": [req.line() for req in sorted(self.externals)],
            "skipped": list(self.skipped),
        }


@functools.lru_cache(maxsize=8)
def load_aliases(path=None):
    """
    Load the import-name alias table.
    """
    with open(path or DEFAULT_ALIAS_PATH, "r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle) or {}
    return {language: dict(mapping or {}) for language, mapping in data.items()}


class _TreeIndex:
    """
    Path lookups over a file tree.
    """

    def __init__(self, tree):
        self.files = set()
        self.folders = set()
        for node in tree:
            if isinstance(node, str):
                self.files.add(node)
            elif node.kind.value == "File":
                self.files.add(node.path)
            else:
                self.folders.add(node.path)
        for path in list(self.files):
            for parent in PurePosixPath(path).parents:
                if str(parent) != ".":
                    self.folders.add(str(parent))

    @staticmethod
    def join(directory, name):
        return f"{directory}/{name}" if directory else name

    def resolve_python(self, directory, top):
        for base in dict.fromkeys([directory, ""]):
            module_file = self.join(base, f"{top}.py")
            if module_file in self.files:
                return module_file
            package_init = self.join(base, f"{top}/__init__.py")
            if package_init in self.files:
                return package_init
            folder = self.join(base, top)
            if folder in self.folders:
                return folder
        return None

    def resolve_r_package(self, name):
        for path in sorted(self.files):
            pure = PurePosixPath(path)
            if pure.suffix.lower() == ".r" and pure.stem == name:
                return path
        return None

    def resolve_relative(self, directory, target):
        candidate = PurePosixPath(self.join(directory, target)).as_posix()
        for path in (candidate, target):
            if path in self.files:
                return path
        return None


def _notebook_source(text):
    """
    Code cells of a notebook with shell escapes and magics removed.
    """
    notebook = json.loads(text)
    cells = []
    for cell in notebook.get("cells", []):
        if cell.get("cell_type") != "code":
            continue
        source = cell.get("source", "")
        if isinstance(source, list):
            source = "".join(source)
        lines = [
            line for line in source.splitlines()
            if not line.lstrip().startswith(("%", "!"))
        ]
        cells.append("\n".join(lines))
    return cells


def _python_imports(sources):
    """
    Yield `(level, top_level_name, full_module)` for every import statement.
    """
    for source in sources:
        try:
            tree = ast.parse(source)
        except SyntaxError:
            logger.warning("Skipping unparseable code block")
            continue
        for node in ast.walk(tree):
            if isinstance(node, ast.Import):
                for alias in node.names:
                    yield 0, alias.name.split(".")[0], alias.name
            elif isinstance(node, ast.ImportFrom):
                module = node.module or ""
                yield node.level, module.split(".")[0], module


def _read(files_root, path):
    return (Path(files_root) / path).read_text(encoding="utf-8")


def _scan_python_file(files_root, path):
    text = _read(files_root, path)
    if path.endswith(".ipynb"):
        sources = _notebook_source(text)
    else:
        ast.parse(text)
        sources = [text]
    return list(_python_imports(sources))


def _scan_r_file(files_root, path):
    text = _read(files_root, path)
    text = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    libraries = [("library", name) for name in R_LIBRARY_PATTERN.findall(text)]
    sources = [("source", target) for target in R_SOURCE_PATTERN.findall(text)]
    return libraries + sources


def _scan_all(files_root, paths, scanner):
    """
    Scan files in parallel; results come back in path order.
    """

    def scan(path):
        try:
            return path, scanner(files_root, path), None
        except (OSError, UnicodeDecodeError, SyntaxError, ValueError) as e:
            return path, None, str(e)

    with ThreadPoolExecutor(max_workers=MAX_WORKERS) as pool:
        return list(pool.map(scan, paths))


def build_graph(tree, language, files_root, aliases=None):
    """
    Build the dependency graph of `tree` for `language` (Python or R).
    File contents are read from `files_root`.
    """
    language = parse_language(language)
    if language not in (Language.PYTHON, Language.R):
        raise NotSupportedError(
            f"dependency inference is not supported for {language.value}; use a manifest file"
        )
    aliases = (aliases if aliases is not None else load_aliases()).get(language.value, {})
    index = _TreeIndex(tree)
    if language is Language.PYTHON:
        paths = sorted(path for path in index.files if path.endswith((".py", ".ipynb")))
        results = _scan_all(files_root, paths, _scan_python_file)
    else:
        paths = sorted(path for path in index.files if PurePosixPath(path).suffix.lower() == ".r")
        results = _scan_all(files_root, paths, _scan_r_file)

    nodes, edges, externals, skipped = set(), set(), set(), []
    for path, found, error in results:
        if error is not None:
            logger.warning("Skipping %s: %s", path, error)
            skipped.append(path)
            continue
        source = ModuleId.file(path)
        nodes.add(source)
        directory = str(PurePosixPath(path).parent)
        directory = "" if directory == "." else directory
        if language is Language.PYTHON:
            for level, top, module in found:
                if level > 0:
                    target = index.resolve_python(directory, top) if top else None
                    if target:
                        edges.add((source, ModuleId.file(target), EdgeKind.IMPORT))
                        nodes.add(ModuleId.file(target))
                    continue
                if not top or top in STDLIB_MODULES:
                    continue
                local = index.resolve_python(directory, top)
                if local is not None:
                    target = ModuleId.file(local)
                else:
                    target = ModuleId.external(top)
                    externals.add(PackageReq(aliases.get(top, top), language=language))
                nodes.add(target)
                edges.add((source, target, EdgeKind.IMPORT))
        else:
            for kind, name in found:
                if kind == "source":
                    local = index.resolve_relative(directory, name)
                    if local is None:
                        logger.warning("%s sources missing file %s", path, name)
                        continue
                    target = ModuleId.file(local)
                    edges.add((source, target, EdgeKind.SOURCE_INCLUDE))
                    nodes.add(target)
                    continue
                local = index.resolve_r_package(name)
                if local is not None:
                    target = ModuleId.file(local)
                else:
                    target = ModuleId.external(name)
                    externals.add(PackageReq(aliases.get(name, name), language=language))
                nodes.add(target)
                edges.add((source, target, EdgeKind.IMPORT))
    return DependencyGraph(
        nodes=frozenset(nodes),
        edges=frozenset(edges),
        externals=frozenset(externals),
        skipped=tuple(skipped),
    )


def detect_requirements_file(tree):
    """
    Path of `requirements.txt` at the tree root, or None (nested files do not count).
    """
    for node in tree:
        path = node if isinstance(node, str) else node.path
        kind = "File" if isinstance(node, str) else node.kind.value
        if path == REQUIREMENTS_FILE and kind == "File":
            return path
    return None


def emit_requirements(externals):
    """
    One requirement per line, sorted; constraints appended verbatim.
    """
    externals = list(externals)
    if len({req.language for req in externals}) > 1:
        raise ValidationError("requirements of different languages cannot share a manifest")
    lines = sorted({req.line() for req in externals})
    return "".join(f"{line}\n" for line in lines)


def parse_requirements(text, language=Language.PYTHON):
    """
    Parse a one-per-line requirements manifest. Comments, blank lines and
    pip options are ignored.
    """
    requirements = set()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("-"):
            continue
        match = REQUIREMENT_LINE.match(line)
        if match is None:
            continue
        name, constraint = match.groups()
        requirements.add(PackageReq(name, constraint or None, language))
    return requirements
