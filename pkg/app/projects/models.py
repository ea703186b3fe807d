# -*- coding: utf-8 -*-
"""
Module: models.py

Domain values of the project store. All values are frozen dataclasses, so a
`Project` handed out by the store is an immutable snapshot that is safe to pass
across threads; the store produces a new snapshot on every mutation.

Classes:
- `ProjectType`: Script, ScriptWithDatabase or AI.
- `NodeKind`: File or Folder.
- `EntryAction`: CreateFile, CreateFolder, EditFile, Delete.
- `FileNode`: One entry of a project's file tree.
- `DatasetRef`: The dataset associated with a project (in-tree or external).
- `SeedDecl`: A declared RNG seed (file, variable, value).
- `Project`: Identity, type, metadata, tree, dataset and seeds.

Functions:
- `normalize_path(path)`: Normalize a relative, slash-separated path and reject
  absolute paths and `..` traversal.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import PurePosixPath

from app.exceptions import ValidationError


class ProjectType(str, Enum):
    """
    Kind of experiment.
    """

    SCRIPT = "Script"
    SCRIPT_WITH_DATABASE = "ScriptWithDatabase"
    AI = "AI"

    @classmethod
    def parse(cls, value):
        """
        Parse a project type, case- and separator-insensitively.
        """
        if isinstance(value, cls):
            return value
        key = str(value or "").replace("-", "").replace("_", "").replace(" ", "").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValidationError(f"unknown project type: {value!r}")


class NodeKind(str, Enum):
    FILE = "File"
    FOLDER = "Folder"


class EntryAction(str, Enum):
    """
    File tree edits.
    """

    CREATE_FILE = "CreateFile"
    CREATE_FOLDER = "CreateFolder"
    EDIT_FILE = "EditFile"
    DELETE = "Delete"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value or "").replace("-", "").replace("_", "").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValidationError(f"unknown action: {value!r}")


def normalize_path(path):
    """
    Normalize a relative path inside a project tree.

    Backslashes become slashes, `.` and empty segments are dropped and a
    trailing slash is removed. Absolute paths, drive letters and `..`
    segments are rejected.
    """
    if path is None:
        raise ValidationError("path is required")
    text = str(path).replace("\\", "/").strip()
    if text.startswith("/") or (len(text) > 1 and text[1] == ":"):
        raise ValidationError(f"absolute path not allowed: {path!r}")
    parts = [part for part in text.split("/") if part not in ("", ".")]
    if any(part == ".." for part in parts):
        raise ValidationError(f"path traversal not allowed: {path!r}")
    if not parts:
        raise ValidationError(f"empty path: {path!r}")
    return "/".join(parts)


def parent_folders(path):
    """
    All ancestor folder paths of a normalized path, outermost first.
    """
    parents = PurePosixPath(path).parents
    return [str(parent) for parent in reversed(parents) if str(parent) != "."]


@dataclass(frozen=True)
class FileNode:
    """
    One file or folder of a project tree.
    """

    path: str
    kind: NodeKind
    size: int | None = None
    digest: str | None = None

    def to_dict(self):
        data = {"path": self.path, "kind": self.kind.value}
        if self.kind is NodeKind.FILE:
            data["size"] = self.size
            data["digest"] = self.digest
        return data

    @classmethod
    def from_dict(cls, data):
        kind = NodeKind(data["kind"])
        if kind is NodeKind.FILE:
            return cls(data["path"], kind, data.get("size"), data.get("digest"))
        return cls(data["path"], kind)


@dataclass(frozen=True)
class DatasetRef:
    """
    Dataset associated with a project; `root` is a tree path unless `external`.
    """

    id: str
    root: str
    label: str = ""
    external: bool = False

    def to_dict(self):
        return {
            "id": self.id,
            "root": self.root,
            "label": self.label,
            "external": self.external,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            id=data["id"],
            root=data["root"],
            label=data.get("label", ""),
            external=bool(data.get("external", False)),
        )


@dataclass(frozen=True)
class SeedDecl:
    """
    A seed used in the experiment's code.
    """

    location: str
    variable: str
    value: int | str

    def to_dict(self):
        return {"location": self.location, "variable": self.variable, "value": self.value}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                location=normalize_path(data["location"]),
                variable=str(data["variable"]),
                value=data["value"],
            )
        except KeyError as e:
            raise ValidationError(f"seed declaration missing field {e}") from e


@dataclass(frozen=True)
class Project:
    """
    Immutable snapshot of a project.
    """

    id: str
    name: str
    description: str
    project_type: ProjectType
    created_at: str
    dataset: DatasetRef | None = None
    dataset_history: tuple = ()
    seeds: tuple = ()
    authors: tuple = ()
    tree: tuple = field(default=(), repr=False)

    def node(self, path):
        """
        The node at `path`, or None.
        """
        for node in self.tree:
            if node.path == path:
                return node
        return None

    def known_dataset(self, dataset_id):
        """
        Look up the active or a previous dataset by id.
        """
        if self.dataset is not None and self.dataset.id == dataset_id:
            return self.dataset
        for dataset in self.dataset_history:
            if dataset.id == dataset_id:
                return dataset
        return None

    def with_changes(self, **changes):
        return replace(self, **changes)

    def summary(self):
        """
        Metadata without the file tree.
        """
        return {
            "id": self.id,
            "name": self.name,
            "description": self.description,
            "projectType": self.project_type.value,
            "createdAt": self.created_at,
            "dataset": self.dataset.to_dict() if self.dataset else None,
            "datasetHistory": [dataset.to_dict() for dataset in self.dataset_history],
            "seeds": [seed.to_dict() for seed in self.seeds],
            "authors": list(self.authors),
        }

    def to_dict(self):
        data = self.summary()
        data["tree"] = [node.to_dict() for node in self.tree]
        return data

    @classmethod
    def from_dict(cls, data):
        return cls(
            id=data["id"],
            name=data["name"],
            description=data.get("description", ""),
            project_type=ProjectType(data["projectType"]),
            created_at=data["createdAt"],
            dataset=DatasetRef.from_dict(data["dataset"]) if data.get("dataset") else None,
            dataset_history=tuple(
                DatasetRef.from_dict(item) for item in data.get("datasetHistory", [])
            ),
            seeds=tuple(SeedDecl.from_dict(item) for item in data.get("seeds", [])),
            authors=tuple(data.get("authors", [])),
            tree=tuple(FileNode.from_dict(item) for item in data.get("tree", [])),
        )
