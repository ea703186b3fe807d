# -*- coding: utf-8 -*-
"""
Module: store.py

File-backed project store. Each project owns one directory:

    <store>/<project-id>/meta.json              project metadata and file tree
    <store>/<project-id>/files/...              the experiment files
    <store>/<project-id>/environment/Dockerfile last generated container spec
    <store>/<project-id>/images/<tag-id>.json   built images
    <store>/<project-id>/runs/<run-id>/         run records and console output
    <store>/tags.json                           store-wide image tag counter

Mutations of a project are serialized by a per-project lock; `Project` values
returned by the store are immutable snapshots. Metadata documents are written
atomically (temporary file + rename) with sorted keys, so loading and storing a
project again yields byte-identical metadata.
"""

import json
import logging
import os
import shutil
import tempfile
import threading
from contextlib import contextmanager
from pathlib import Path

from app.exceptions import NotFoundError, StorageError, ValidationError
from app.execution.digests import bytes_digest, file_digest
from app.projects.models import (
    DatasetRef,
    EntryAction,
    FileNode,
    NodeKind,
    Project,
    ProjectType,
    SeedDecl,
    normalize_path,
    parent_folders,
)
from app.utils import new_id, utc_now

logger = logging.getLogger(__name__)

META_FILE = "meta.json"
FILES_DIR = "files"
ENVIRONMENT_DIR = "environment"
IMAGES_DIR = "images"
RUNS_DIR = "runs"
TAGS_FILE = "tags.json"
FIRST_TAG_ID = 100

_locks_guard = threading.Lock()
_locks = {}


def _lock_for(key):
    with _locks_guard:
        if key not in _locks:
            _locks[key] = threading.RLock()
        return _locks[key]


def dump_json(data):
    """
    Canonical JSON text of a metadata document.
    """
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_atomic(path, data):
    """
    Write bytes or text to `path` via a temporary file in the same directory.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(temporary, path)
    except OSError as e:
        if os.path.exists(temporary):
            os.unlink(temporary)
        raise StorageError(f"cannot write {path}: {e}") from e


class ProjectStore:
    """
    Persist projects, their file trees, images and run records.
    """

    def __init__(self, root):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"cannot create store at {self.root}: {e}") from e

    # -- layout --

    def project_dir(self, project_id):
        if not project_id or "/" in project_id or project_id.startswith("."):
            raise NotFoundError(f"no such project: {project_id}")
        return self.root / project_id

    def files_root(self, project_id):
        return self.project_dir(project_id) / FILES_DIR

    def environment_dir(self, project_id):
        return self.project_dir(project_id) / ENVIRONMENT_DIR

    @contextmanager
    def project_lock(self, project_id):
        """
        Serialize writers of one project.
        """
        lock = _lock_for((str(self.root.resolve()), project_id))
        with lock:
            yield

    # -- projects --

    def create_project(self, name, description="", project_type=ProjectType.SCRIPT, authors=()):
        """
        Create and persist a new project with a fresh id.
        """
        if not name or not str(name).strip():
            raise ValidationError("project name must not be empty")
        project = Project(
            id=new_id(),
            name=str(name).strip(),
            description=description or "",
            project_type=ProjectType.parse(project_type),
            created_at=utc_now(),
            authors=tuple(authors or ()),
        )
        with self.project_lock(project.id):
            directory = self.project_dir(project.id)
            try:
                directory.mkdir(parents=True, exist_ok=False)
                (directory / FILES_DIR).mkdir()
                write_atomic(directory / ".dockerignore", "*\n!files\n")
            except FileExistsError as e:
                raise StorageError(f"project id collision: {project.id}") from e
            except OSError as e:
                raise StorageError(f"cannot create project: {e}") from e
            self._save(project)
        logger.info("Created project %s (%s)", project.id, project.name)
        return project

    def get_project(self, project_id):
        """
        Load a project snapshot.
        """
        meta = self.project_dir(project_id) / META_FILE
        if not meta.is_file():
            raise NotFoundError(f"no such project: {project_id}")
        try:
            return Project.from_dict(json.loads(meta.read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError) as e:
            raise StorageError(f"corrupt metadata for project {project_id}: {e}") from e

    def list_projects(self):
        projects = []
        for entry in sorted(self.root.iterdir()):
            if entry.is_dir() and (entry / META_FILE).is_file():
                projects.append(self.get_project(entry.name))
        return projects

    def meta_text(self, project_id):
        """
        Raw metadata document.
        """
        return (self.project_dir(project_id) / META_FILE).read_text(encoding="utf-8")

    def _save(self, project):
        write_atomic(self.project_dir(project.id) / META_FILE, dump_json(project.to_dict()))
        return project

    # -- file tree --

    @staticmethod
    def _sorted_tree(nodes):
        return tuple(sorted(nodes.values(), key=lambda node: node.path))

    @staticmethod
    def _add_parents(nodes, path):
        for folder in parent_folders(path):
            existing = nodes.get(folder)
            if existing is not None and existing.kind is NodeKind.FILE:
                raise ValidationError(f"{folder} is a file, not a folder")
            nodes[folder] = FileNode(folder, NodeKind.FOLDER)

    def merge_directory(self, project_id, source_dir):
        """
        Merge a staged directory into the project's tree; existing files at the
        same paths are replaced. Returns the nodes that were added or updated.
        """
        source_dir = Path(source_dir)
        with self.project_lock(project_id):
            project = self.get_project(project_id)
            nodes = {node.path: node for node in project.tree}
            files_root = self.files_root(project_id)
            touched = {}
            staged_files = []
            # nothing is written until every staged path has been checked
            for current, dirs, files in os.walk(source_dir):
                dirs.sort()
                current_path = Path(current)
                for name in dirs:
                    folder = (current_path / name).relative_to(source_dir).as_posix()
                    path = normalize_path(folder)
                    if nodes.get(path) is not None and nodes[path].kind is NodeKind.FILE:
                        raise ValidationError(f"{path} is a file, not a folder")
                    self._add_parents(nodes, path)
                    nodes[path] = FileNode(path, NodeKind.FOLDER)
                    touched[path] = nodes[path]
                for name in sorted(files):
                    staged = current_path / name
                    if staged.is_symlink() or not staged.is_file():
                        continue
                    path = normalize_path(staged.relative_to(source_dir).as_posix())
                    existing = nodes.get(path)
                    if existing is not None and existing.kind is NodeKind.FOLDER:
                        raise ValidationError(f"{path} is a folder, not a file")
                    self._add_parents(nodes, path)
                    staged_files.append((path, staged))
            for path, staged in staged_files:
                target = files_root / path
                try:
                    target.parent.mkdir(parents=True, exist_ok=True)
                    shutil.copyfile(staged, target)
                    node = FileNode(path, NodeKind.FILE, target.stat().st_size, file_digest(target))
                except OSError as e:
                    raise StorageError(f"cannot store {path}: {e}") from e
                nodes[path] = node
                touched[path] = node
            self._save(project.with_changes(tree=self._sorted_tree(nodes)))
        logger.info("Merged %d entries into project %s", len(touched), project_id)
        return [touched[path] for path in sorted(touched)]

    def modify_entry(self, project_id, action, path, content=None):
        """
        Create, edit or delete one entry of the file tree.
        Returns the affected FileNode, or None for deletions.
        """
        action = EntryAction.parse(action)
        path = normalize_path(path)
        if isinstance(content, str):
            content = content.encode("utf-8")
        with self.project_lock(project_id):
            project = self.get_project(project_id)
            nodes = {node.path: node for node in project.tree}
            existing = nodes.get(path)
            target = self.files_root(project_id) / path
            result = None
            try:
                if action in (EntryAction.CREATE_FILE, EntryAction.CREATE_FOLDER):
                    if existing is not None:
                        raise ValidationError(f"already exists: {path}")
                    self._add_parents(nodes, path)
                    if action is EntryAction.CREATE_FOLDER:
                        target.mkdir(parents=True, exist_ok=True)
                        result = FileNode(path, NodeKind.FOLDER)
                    else:
                        result = self._write_file(target, path, content or b"")
                    nodes[path] = result
                elif action is EntryAction.EDIT_FILE:
                    if existing is None:
                        raise NotFoundError(f"no such file: {path}")
                    if existing.kind is not NodeKind.FILE:
                        raise ValidationError(f"{path} is a folder, not a file")
                    result = self._write_file(target, path, content or b"")
                    nodes[path] = result
                else:
                    if existing is None:
                        raise NotFoundError(f"no such entry: {path}")
                    prefix = path + "/"
                    for key in [key for key in nodes if key == path or key.startswith(prefix)]:
                        del nodes[key]
                    if existing.kind is NodeKind.FOLDER:
                        shutil.rmtree(target, ignore_errors=True)
                    elif target.exists():
                        target.unlink()
            except OSError as e:
                raise StorageError(f"cannot modify {path}: {e}") from e
            self._save(project.with_changes(tree=self._sorted_tree(nodes)))
        logger.info("%s %s in project %s", action.value, path, project_id)
        return result

    @staticmethod
    def _write_file(target, path, content):
        target.parent.mkdir(parents=True, exist_ok=True)
        write_atomic(target, content)
        return FileNode(path, NodeKind.FILE, len(content), bytes_digest(content))

    def read_file(self, project_id, path):
        path = normalize_path(path)
        node = self.get_project(project_id).node(path)
        if node is None or node.kind is not NodeKind.FILE:
            raise NotFoundError(f"no such file: {path}")
        return (self.files_root(project_id) / path).read_bytes()

    # -- dataset and seeds --

    def set_dataset(self, project_id, dataset):
        """
        Replace the active dataset; the previous one moves to the history so
        earlier run records keep resolving.
        """
        with self.project_lock(project_id):
            project = self.get_project(project_id)
            if dataset.external:
                if not Path(dataset.root).is_dir():
                    raise ValidationError(f"external dataset root does not exist: {dataset.root}")
                root = str(Path(dataset.root).resolve())
            else:
                root = normalize_path(dataset.root)
                if project.node(root) is None:
                    raise ValidationError(f"dataset root not in project tree: {dataset.root}")
            dataset = DatasetRef(
                id=dataset.id or new_id(),
                root=root,
                label=dataset.label,
                external=dataset.external,
            )
            history = [item for item in project.dataset_history if item.id != dataset.id]
            if project.dataset is not None and project.dataset.id != dataset.id:
                history.append(project.dataset)
            project = project.with_changes(dataset=dataset, dataset_history=tuple(history))
            self._save(project)
        logger.info("Project %s dataset set to %s", project_id, dataset.root)
        return project

    def set_seeds(self, project_id, seeds):
        """
        Declare the seeds used in the project's code.
        """
        with self.project_lock(project_id):
            project = self.get_project(project_id)
            checked = []
            for seed in seeds:
                if not isinstance(seed, SeedDecl):
                    seed = SeedDecl.from_dict(seed)
                node = project.node(seed.location)
                if node is None or node.kind is not NodeKind.FILE:
                    raise ValidationError(f"seed location is not a file in the project: {seed.location}")
                checked.append(seed)
            project = project.with_changes(seeds=tuple(checked))
            self._save(project)
        return project

    # -- images --

    def allocate_tag(self, project_id):
        """
        Reserve a store-wide unique image tag id for `project_id`.
        """
        self.get_project(project_id)
        with _lock_for((str(self.root.resolve()), TAGS_FILE)):
            tags_path = self.root / TAGS_FILE
            state = {"next": FIRST_TAG_ID, "owners": {}}
            if tags_path.is_file():
                state = json.loads(tags_path.read_text(encoding="utf-8"))
            tag_id = state["next"]
            state["next"] = tag_id + 1
            state["owners"][str(tag_id)] = project_id
            write_atomic(tags_path, dump_json(state))
        return tag_id

    def tag_owner(self, tag_id):
        tags_path = self.root / TAGS_FILE
        if not tags_path.is_file():
            return None
        state = json.loads(tags_path.read_text(encoding="utf-8"))
        return state["owners"].get(str(tag_id))

    def save_image(self, project_id, tag_id, record):
        path = self.project_dir(project_id) / IMAGES_DIR / f"{tag_id}.json"
        write_atomic(path, dump_json(record))

    def get_image(self, project_id, tag_id):
        """
        Image record of `tag_id`; the image must belong to `project_id`.
        """
        try:
            tag_id = int(tag_id)
        except (TypeError, ValueError) as e:
            raise NotFoundError(f"no such image: {tag_id}") from e
        path = self.project_dir(project_id) / IMAGES_DIR / f"{tag_id}.json"
        if not path.is_file():
            owner = self.tag_owner(tag_id)
            if owner is not None and owner != project_id:
                raise ValidationError(f"image {tag_id} belongs to another project")
            raise NotFoundError(f"no such image: {tag_id}")
        return json.loads(path.read_text(encoding="utf-8"))

    def list_images(self, project_id):
        directory = self.project_dir(project_id) / IMAGES_DIR
        if not directory.is_dir():
            return []
        records = [json.loads(path.read_text(encoding="utf-8")) for path in directory.glob("*.json")]
        return sorted(records, key=lambda record: record["tagId"])

    # -- runs --

    def save_run(self, project_id, run_id, record, stdout, stderr):
        """
        Persist a run record; history is append-only.
        """
        directory = self.project_dir(project_id) / RUNS_DIR / run_id
        try:
            directory.mkdir(parents=True, exist_ok=False)
        except FileExistsError as e:
            raise StorageError(f"run {run_id} already recorded") from e
        write_atomic(directory / "stdout.bin", stdout)
        write_atomic(directory / "stderr.bin", stderr)
        write_atomic(directory / "record.json", dump_json(record))

    def load_run(self, project_id, run_id):
        """
        Return `(record, stdout, stderr)` of a run.
        """
        directory = self.project_dir(project_id) / RUNS_DIR / str(run_id)
        if "/" in str(run_id) or not (directory / "record.json").is_file():
            raise NotFoundError(f"no such run: {run_id}")
        record = json.loads((directory / "record.json").read_text(encoding="utf-8"))
        return record, (directory / "stdout.bin").read_bytes(), (directory / "stderr.bin").read_bytes()

    def list_run_ids(self, project_id):
        self.get_project(project_id)
        directory = self.project_dir(project_id) / RUNS_DIR
        if not directory.is_dir():
            return []
        return sorted(entry.name for entry in directory.iterdir() if (entry / "record.json").is_file())
