# -*- coding: utf-8 -*-
"""
Module: packager.py

Export a project as a reproducibility package that runs anywhere a container
engine runs. Package layout (format version 1):

    manifest.json           project metadata, commands and file inventory
    environment/Dockerfile  the container spec the image was built from
    files/...               the experiment files (build context of the spec)
    runExperiment.sh        Unix and Mac OS entry point
    runExperiment.bat       Windows entry point
    image.tar               optional, the exported image (loaded instead of built)
    dataset/...             optional, a copy of an external dataset

The inventory maps every packaged file except `manifest.json` to its SHA-256
digest, so `verify_package` detects altered, missing and unlisted files.

Functions:
- `build_package(store, project_id, tag_id, commands, out, driver, embed_image)`
- `verify_package(directory)`
- `zip_package(directory, archive)`
- `replay_package(directory, driver)`
"""

import json
import logging
import shlex
import shutil
import zipfile
from dataclasses import dataclass, field, replace
from pathlib import Path

from jinja2 import Environment, FileSystemLoader, StrictUndefined, select_autoescape

from app.environment.containerspec import ContainerSpec, Sidecar
from app.exceptions import StorageError, ValidationError
from app.execution.digests import bytes_digest, tree_digest
from app.execution.drivers import Attachments, ImageRef
from app.projects.store import dump_json, write_atomic
from app.template_filters import register_template_filters
from app.utils import utc_now
from app.version import __version__

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST = "manifest.json"
DOCKERFILE = "environment/Dockerfile"
FILES_DIR = "files"
DATASET_DIR = "dataset"
IMAGE_ARCHIVE = "image.tar"
UNIX_SCRIPT = "runExperiment.sh"
WINDOWS_SCRIPT = "runExperiment.bat"
TEMPLATES_DIR = Path(__file__).parent / "templates"
FIXED_ZIP_TIME = (1980, 1, 1, 0, 0, 0)


@dataclass(frozen=True)
class PackageManifest:
    """
    Everything needed to run the experiment again.
    """

    name: str
    description: str
    project_type: str
    seeds: tuple
    authors: tuple
    spec_digest: str
    engine_tag: str
    commands: tuple
    dataset: dict | None
    inventory: dict
    created_at: str
    tool_version: str = __version__
    format_version: int = FORMAT_VERSION
    image_archive: str | None = None
    network: str | None = None
    sidecars: tuple = ()
    environment: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "formatVersion": self.format_version,
            "toolVersion": self.tool_version,
            "createdAt": self.created_at,
            "project": {
                "name": self.name,
                "description": self.description,
                "projectType": self.project_type,
                "seeds": list(self.seeds),
                "authors": list(self.authors),
            },
            "specDigest": self.spec_digest,
            "engineTag": self.engine_tag,
            "imageArchive": self.image_archive,
            "commands": list(self.commands),
            "dataset": self.dataset,
            "network": self.network,
            "sidecars": list(self.sidecars),
            "environment": dict(self.environment),
            "inventory": dict(sorted(self.inventory.items())),
        }

    @classmethod
    def from_dict(cls, data):
        try:
            project = data["project"]
            return cls(
                name=project["name"],
                description=project.get("description", ""),
                project_type=project["projectType"],
                seeds=tuple(project.get("seeds", [])),
                authors=tuple(project.get("authors", [])),
                spec_digest=data["specDigest"],
                engine_tag=data["engineTag"],
                commands=tuple(data["commands"]),
                dataset=data.get("dataset"),
                inventory=dict(data["inventory"]),
                created_at=data["createdAt"],
                tool_version=data.get("toolVersion", ""),
                format_version=int(data.get("formatVersion", FORMAT_VERSION)),
                image_archive=data.get("imageArchive"),
                network=data.get("network"),
                sidecars=tuple(data.get("sidecars", [])),
                environment=dict(data.get("environment", {})),
            )
        except (KeyError, TypeError) as e:
            raise ValidationError(f"malformed {MANIFEST}: missing {e}") from e


def _template_environment():
    env = Environment(
        loader=FileSystemLoader(str(TEMPLATES_DIR)),
        autoescape=select_autoescape(enabled_extensions=("html", "xml")),
        undefined=StrictUndefined,
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    return register_template_filters(env)


def render_scripts(manifest):
    """
    Render the Unix and Windows run scripts of a manifest.
    """
    env = _template_environment()
    sidecars = []
    for item in manifest.sidecars:
        sidecar = Sidecar.from_dict(item)
        sidecars.append(
            {
                "name": f"{manifest.network}-{sidecar.alias}",
                "alias": sidecar.alias,
                "image": sidecar.image,
                "environment": list(sidecar.environment),
                "mounts": list(sidecar.mounts),
            }
        )
    environment = dict(manifest.environment)
    dataset = manifest.dataset or {}
    if dataset.get("external"):
        environment["REPRO_DATASET_DIR"] = "/dataset"
    elif dataset.get("root"):
        environment["REPRO_DATASET_DIR"] = f"/files/{dataset['root']}"
    context = {
        "name": manifest.name,
        "engine_tag": manifest.engine_tag,
        "network": manifest.network or "reprokit",
        "image_archive": manifest.image_archive,
        "sidecars": sidecars,
        "dataset_mount": bool(dataset.get("external")),
        "environment": sorted(environment.items()),
        "commands": list(manifest.commands),
    }
    unix = env.get_template(f"{UNIX_SCRIPT}.j2").render(**context)
    windows = env.get_template(f"{WINDOWS_SCRIPT}.j2").render(**context)
    return unix, windows.replace("\r\n", "\n").replace("\n", "\r\n")


def _prepare_destination(out):
    out = Path(out)
    if out.exists() and (not out.is_dir() or any(out.iterdir())):
        raise ValidationError(f"package destination is not an empty directory: {out}")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise StorageError(f"cannot write package to {out}: {e}") from e
    return out


def build_package(store, project_id, tag_id, commands, out, driver=None, embed_image=False):
    """
    Write a reproducibility package for image `tag_id` of the project.
    """
    commands = [str(command) for command in commands or []]
    if not commands or any(not command.strip() for command in commands):
        raise ValidationError("a package needs at least one non-empty command")
    project = store.get_project(project_id)
    image_record = store.get_image(project_id, tag_id)
    out = _prepare_destination(out)
    logger.info("Packaging project %s image %s into %s", project_id, tag_id, out)
    try:
        shutil.copytree(store.files_root(project_id), out / FILES_DIR, symlinks=False)
        write_atomic(out / DOCKERFILE, image_record["dockerfile"])
        dataset = project.dataset.to_dict() if project.dataset else None
        if project.dataset is not None and project.dataset.external:
            shutil.copytree(project.dataset.root, out / DATASET_DIR)
        image_archive = None
        if embed_image:
            if driver is None:
                raise ValidationError("embedding the image needs an engine driver")
            driver.save_image(ImageRef.from_dict(image_record), out / IMAGE_ARCHIVE)
            image_archive = IMAGE_ARCHIVE
        manifest = PackageManifest(
            name=project.name,
            description=project.description,
            project_type=project.project_type.value,
            seeds=tuple(seed.to_dict() for seed in project.seeds),
            authors=tuple(project.authors),
            spec_digest=image_record["specDigest"],
            engine_tag=image_record["engineTag"],
            commands=tuple(commands),
            dataset=dataset,
            inventory={},
            created_at=utc_now(),
            image_archive=image_archive,
            network=image_record.get("network"),
            sidecars=tuple(image_record.get("sidecars", [])),
            environment=dict(image_record.get("environment", {})),
        )
        unix, windows = render_scripts(manifest)
        write_atomic(out / UNIX_SCRIPT, unix)
        (out / UNIX_SCRIPT).chmod(0o755)
        write_atomic(out / WINDOWS_SCRIPT, windows)
        manifest = replace(manifest, inventory=tree_digest(out, exclude=(MANIFEST,)))
        write_atomic(out / MANIFEST, dump_json(manifest.to_dict()))
    except OSError as e:
        raise StorageError(f"cannot write package to {out}: {e}") from e
    logger.info("Package written with %d files", len(manifest.inventory))
    return manifest


def load_manifest(directory):
    path = Path(directory) / MANIFEST
    if not path.is_file():
        raise ValidationError(f"not a package: {MANIFEST} missing in {directory}")
    try:
        return PackageManifest.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except ValueError as e:
        raise ValidationError(f"malformed {MANIFEST}: {e}") from e


def verify_package(directory):
    """
    Recompute the inventory and spec digests of a package; returns its
    manifest when everything matches.
    """
    directory = Path(directory)
    manifest = load_manifest(directory)
    actual = tree_digest(directory, exclude=(MANIFEST,))
    missing = sorted(set(manifest.inventory) - set(actual))
    unlisted = sorted(set(actual) - set(manifest.inventory))
    altered = sorted(
        path for path, digest in manifest.inventory.items() if path in actual and actual[path] != digest
    )
    if missing:
        raise ValidationError(f"package entries missing: {', '.join(missing)}")
    if unlisted:
        raise ValidationError(f"inventory incomplete, unlisted files: {', '.join(unlisted)}")
    if altered:
        raise ValidationError(f"digest mismatch: {', '.join(altered)}")
    dockerfile = directory / DOCKERFILE
    if bytes_digest(dockerfile.read_bytes()) != manifest.spec_digest:
        raise ValidationError(f"digest mismatch: {DOCKERFILE} does not match specDigest")
    if not manifest.commands:
        raise ValidationError("package has no commands")
    logger.info("Package %s verified", directory)
    return manifest


def zip_package(directory, archive=None):
    """
    Zip a package directory with fixed timestamps and sorted entries.
    """
    directory = Path(directory)
    archive = Path(archive) if archive else directory.with_suffix(".zip")
    if archive.resolve().is_relative_to(directory.resolve()):
        raise ValidationError("the archive must be written outside the package directory")
    try:
        with zipfile.ZipFile(archive, "w") as bundle:
            for path in sorted(item for item in directory.rglob("*") if item.is_file() and not item.is_symlink()):
                relative = path.relative_to(directory).as_posix()
                info = zipfile.ZipInfo(f"{directory.name}/{relative}")
                info.date_time = FIXED_ZIP_TIME
                info.compress_type = zipfile.ZIP_DEFLATED
                mode = 0o755 if path.suffix == ".sh" else 0o644
                info.external_attr = (0o100000 | mode) << 16
                bundle.writestr(info, path.read_bytes())
    except OSError as e:
        raise StorageError(f"cannot write archive {archive}: {e}") from e
    return archive


def script_commands(script_text):
    """
    The commands a Unix run script executes, in order.
    """
    commands = []
    for line in script_text.splitlines():
        if line.startswith("run_step "):
            words = shlex.split(line[len("run_step "):])
            if len(words) != 1:
                raise ValidationError(f"unreadable run step: {line}")
            commands.append(words[0])
    return commands


def replay_package(directory, driver, tag_id=None):
    """
    Verify a package, rebuild its image from the packaged spec and run the
    script's commands; returns `(manifest, outcomes)`.
    """
    directory = Path(directory)
    manifest = verify_package(directory)
    spec = ContainerSpec.parse((directory / DOCKERFILE).read_text(encoding="utf-8"))
    commands = script_commands((directory / UNIX_SCRIPT).read_text(encoding="utf-8"))
    tag_id = tag_id or f"package-{manifest.spec_digest[:12]}"
    image = driver.build_image(spec, directory, tag_id, f"reprokit-package:{manifest.spec_digest[:12]}")
    dataset = manifest.dataset or {}
    attachments = Attachments(
        dataset_path=None if dataset.get("external") else dataset.get("root"),
        dataset_mount=directory / DATASET_DIR if dataset.get("external") else None,
        sidecars=tuple(Sidecar.from_dict(item) for item in manifest.sidecars),
        network=manifest.network if manifest.sidecars else None,
        environment=tuple(sorted(manifest.environment.items())),
        context=directory / FILES_DIR,
    )
    outcomes = [driver.run(image, command, attachments) for command in commands]
    logger.info("Replayed %d commands of package %s", len(outcomes), directory)
    return manifest, outcomes
