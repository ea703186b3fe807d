# -*- coding: utf-8 -*-
"""
Module: digests.py

Content hashing of files and directory trees. The project store, the engine
drivers and the packager all hash through this module, so a digest computed at
ingestion time, after a run, or inside an exported package is the same value
for the same bytes.

Functions:
- `file_digest(path)`: Hex SHA-256 of a file's content.
- `bytes_digest(data)`: Hex SHA-256 of a byte string.
- `tree_digest(root)`: Map of relative path to digest for every regular file
  below `root`. Unreadable files are recorded with an `error:` marker instead
  of being skipped.
- `diff_trees(before, after)`: Changed, created and deleted paths; deletions
  carry the `TOMBSTONE` marker.
"""

import hashlib
import logging
import os
from pathlib import Path

logger = logging.getLogger(__name__)

TOMBSTONE = "<deleted>"
ERROR_PREFIX = "error:"
CHUNK_SIZE = 128 * 1024


def bytes_digest(data):
    """
    Hex SHA-256 of `data`.
    """
    return hashlib.sha256(data).hexdigest()


def file_digest(path):
    """
    Hex SHA-256 of the content of `path`.
    """
    hasher = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(CHUNK_SIZE), b""):
            hasher.update(chunk)
    return hasher.hexdigest()


def tree_digest(root, exclude=()):
    """
    Digest every regular file below `root`; keys are slash-separated paths
    relative to `root`, sorted. Top-level names in `exclude` are skipped.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"not a directory: {root}")
    digests = {}
    for current, dirs, files in os.walk(root):
        current_path = Path(current)
        if current_path == root:
            dirs[:] = [name for name in dirs if name not in exclude]
            files = [name for name in files if name not in exclude]
        dirs.sort()
        for name in sorted(files):
            path = current_path / name
            if path.is_symlink() or not path.is_file():
                continue
            relative = path.relative_to(root).as_posix()
            try:
                digests[relative] = file_digest(path)
            except OSError as e:
                logger.warning("Cannot hash %s: %s", relative, e)
                digests[relative] = f"{ERROR_PREFIX}{e.strerror or e}"
    return dict(sorted(digests.items()))


def diff_trees(before, after):
    """
    Paths whose digest changed, was created, or was deleted.
    Deleted paths map to `TOMBSTONE`.
    """
    changed = {}
    for path, digest in after.items():
        if before.get(path) != digest:
            changed[path] = digest
    for path in before:
        if path not in after:
            changed[path] = TOMBSTONE
    return dict(sorted(changed.items()))
