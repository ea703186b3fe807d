# -*- coding: utf-8 -*-
"""
Module: ingest.py

Bring experiment files into a project. Every source is first staged into a
temporary directory and then merged into the project tree in one step, so a
rejected archive never leaves half of its entries behind.

Sources:
- `ZipArchive(path)`: zip upload; entries with absolute paths, `..`
  segments or symlinks are rejected.
- `LocalDir(path)`: a directory on this machine (`.git` is skipped).
- `GitUrl(url, ref)`: shallow `git clone` of a repository. With
  `remote_only` set (HTTP requests) only network URLs are cloned.
- `DoiUrl(url)`: a direct file URL published for a DOI record. Zip payloads
  are unpacked, anything else is stored as one file. Landing pages are not
  scraped.
- `SingleFile(path, content)`: one uploaded file.
"""

import logging
import re
import shutil
import stat
import subprocess
import tempfile
import zipfile
from dataclasses import dataclass
from pathlib import Path, PurePosixPath
from urllib.parse import urlparse

from app.exceptions import ReproError, ValidationError
from app.projects.models import normalize_path
from app.utils import download_file

logger = logging.getLogger(__name__)

GIT_TIMEOUT = 600
IGNORED_DIRS = {".git"}
REMOTE_GIT_SCHEMES = ("https", "http", "ssh", "git")
SCP_LIKE_GIT = re.compile(r"^[\w.-]+@[\w.-]+:")


@dataclass(frozen=True)
class ZipArchive:
    path: Path


@dataclass(frozen=True)
class LocalDir:
    path: Path


@dataclass(frozen=True)
class GitUrl:
    url: str
    ref: str | None = None
    remote_only: bool = False


@dataclass(frozen=True)
class DoiUrl:
    url: str


@dataclass(frozen=True)
class SingleFile:
    path: str
    content: bytes


def source_from_dict(data, remote_only=False):
    """
    Build a source from a JSON payload such as
    `{"kind": "git", "url": "...", "ref": "main"}`.
    """
    kind = str(data.get("kind", "")).lower()
    if kind == "git":
        if remote_only:
            check_remote_git_url(data["url"])
            return GitUrl(data["url"], data.get("ref"), remote_only=True)
        return GitUrl(data["url"], data.get("ref"))
    if kind == "doi":
        return DoiUrl(data["url"])
    if kind in ("zip", "archive"):
        return ZipArchive(Path(data["path"]))
    if kind in ("dir", "local"):
        return LocalDir(Path(data["path"]))
    raise ValidationError(f"unknown source kind: {data.get('kind')!r}")


def check_remote_git_url(url):
    """
    Accept only network git URLs: http(s), ssh, git or scp-like `user@host:path`.
    """
    if not isinstance(url, str):
        raise ValidationError("git URL must be a string")
    if SCP_LIKE_GIT.match(url):
        return url
    if urlparse(url).scheme.lower() in REMOTE_GIT_SCHEMES:
        return url
    raise ValidationError(
        f"git URL must use one of {REMOTE_GIT_SCHEMES} or user@host:path: {url}"
    )


def _is_symlink_entry(info):
    return stat.S_ISLNK(info.external_attr >> 16)


def check_zip_entries(archive):
    """
    Validate every entry name of an open zip archive; returns the
    normalized names in archive order.
    """
    names = []
    for info in archive.infolist():
        raw = info.filename.replace("\\", "/")
        if raw.startswith("/") or (len(raw) > 1 and raw[1] == ":"):
            raise ValidationError(f"absolute path in archive: {info.filename}")
        if ".." in PurePosixPath(raw).parts:
            raise ValidationError(f"path traversal in archive: {info.filename}")
        if _is_symlink_entry(info):
            raise ValidationError(f"symlink in archive: {info.filename}")
        if raw.rstrip("/") in ("", "."):
            continue
        names.append((info, normalize_path(raw), info.is_dir()))
    return names


def stage_zip(path, staging):
    try:
        with zipfile.ZipFile(path) as archive:
            entries = check_zip_entries(archive)
            for info, name, is_dir in entries:
                target = staging / name
                if is_dir:
                    target.mkdir(parents=True, exist_ok=True)
                    continue
                target.parent.mkdir(parents=True, exist_ok=True)
                with archive.open(info) as source, open(target, "wb") as sink:
                    shutil.copyfileobj(source, sink)
    except zipfile.BadZipFile as e:
        raise ValidationError(f"not a readable zip archive: {e}") from e
    except FileNotFoundError as e:
        raise ValidationError(f"source not readable: {path}") from e


def stage_local_dir(path, staging):
    path = Path(path)
    if not path.is_dir():
        raise ValidationError(f"source not readable: {path}")
    shutil.copytree(
        path,
        staging,
        symlinks=True,
        ignore=shutil.ignore_patterns(*IGNORED_DIRS),
        dirs_exist_ok=True,
    )


def stage_git(source, staging):
    git = shutil.which("git")
    if git is None:
        raise ReproError("git is not installed", stage="ingest")
    checkout = staging / "checkout"
    command = [git]
    if source.remote_only:
        check_remote_git_url(source.url)
        command += ["-c", "protocol.file.allow=never"]
    command += ["clone", "--depth", "1"]
    if source.ref:
        command += ["--branch", source.ref]
    command += ["--", source.url, str(checkout)]
    logger.info("Cloning %s", source.url)
    try:
        result = subprocess.run(
            command, capture_output=True, text=True, timeout=GIT_TIMEOUT, check=False
        )
    except subprocess.TimeoutExpired as e:
        raise ReproError(f"git clone timed out: {source.url}", stage="ingest") from e
    if result.returncode != 0:
        raise ReproError(
            f"git clone failed: {result.stderr.strip()[-500:]}", stage="ingest"
        )
    shutil.rmtree(checkout / ".git", ignore_errors=True)
    return checkout


def stage_doi(source, staging):
    parsed = urlparse(source.url)
    if parsed.scheme not in ("http", "https"):
        raise ValidationError(
            "DOI ingestion needs a direct file URL (http or https)"
        )
    name = PurePosixPath(parsed.path).name or "download"
    download = Path(tempfile.mkdtemp(prefix="reprokit-doi-")) / name
    try:
        download_file(source.url, download)
        with open(download, "rb") as handle:
            head = handle.read(512).lstrip().lower()
        if head.startswith(b"<!doctype html") or head.startswith(b"<html"):
            raise ValidationError(
                "URL resolves to a landing page; provide the direct file URL"
            )
        if zipfile.is_zipfile(download):
            stage_zip(download, staging)
        else:
            shutil.copyfile(download, staging / normalize_path(name))
    finally:
        shutil.rmtree(download.parent, ignore_errors=True)


def ingest(store, project_id, source):
    """
    Merge `source` into the project's tree; returns the added/updated nodes.
    """
    store.get_project(project_id)
    with tempfile.TemporaryDirectory(prefix="reprokit-ingest-") as temporary:
        staging = Path(temporary) / "staging"
        staging.mkdir()
        if isinstance(source, ZipArchive):
            stage_zip(source.path, staging)
        elif isinstance(source, LocalDir):
            stage_local_dir(source.path, staging)
        elif isinstance(source, GitUrl):
            staging = stage_git(source, staging)
        elif isinstance(source, DoiUrl):
            stage_doi(source, staging)
        elif isinstance(source, SingleFile):
            target = staging / normalize_path(source.path)
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(source.content)
        else:
            raise ValidationError(f"unsupported source: {source!r}")
        return store.merge_directory(project_id, staging)
