# -*- coding: utf-8 -*-
"""
Tests for file and tree digests.
"""

import hashlib

import pytest

from app.execution.digests import TOMBSTONE, bytes_digest, diff_trees, file_digest, tree_digest


def test_file_and_bytes_digest_agree(tmp_path):
    path = tmp_path / "a.bin"
    path.write_bytes(b"\x00\x01" * 100_000)
    assert file_digest(path) == bytes_digest(b"\x00\x01" * 100_000)
    assert bytes_digest(b"") == hashlib.sha256(b"").hexdigest()


def test_tree_digest_keys(tmp_path):
    (tmp_path / "b").mkdir()
    (tmp_path / "b" / "c.txt").write_text("c")
    (tmp_path / "a.txt").write_text("a")
    (tmp_path / "skip").mkdir()
    (tmp_path / "skip" / "x").write_text("x")
    digests = tree_digest(tmp_path, exclude=("skip",))
    assert list(digests) == ["a.txt", "b/c.txt"]
    assert digests["a.txt"] == bytes_digest(b"a")


def test_tree_digest_needs_directory(tmp_path):
    with pytest.raises(FileNotFoundError):
        tree_digest(tmp_path / "missing")


def test_diff_trees():
    before = {"kept": "1", "edited": "1", "removed": "1"}
    after = {"kept": "1", "edited": "2", "created": "3"}
    assert diff_trees(before, after) == {"created": "3", "edited": "2", "removed": TOMBSTONE}
