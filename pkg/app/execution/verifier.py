# -*- coding: utf-8 -*-
"""
Module: verifier.py

Classify pairs of runs as reproduced, not reproduced or replication-diff.

Two runs are compared on their console output (stdout; stderr on request) and
on the files each run changed. An `OutputSpec` restricts the comparison to the
targets the researcher cares about; an empty spec compares everything.
Comparison is byte-exact unless ignore patterns are supplied, in which case
console lines matching any pattern are dropped from both sides first. Exact
comparison uses the digests of the full console output, so runs that differ
only past the console cap are still told apart.

Runs over different datasets are a replication, not a reproduction: the
report carries the same diff payload with the `ReplicationDiff` verdict and
leaves the judgement to the researcher.
"""

import difflib
import logging
import re
from dataclasses import dataclass, field
from enum import Enum

from app.exceptions import ValidationError
from app.execution.digests import TOMBSTONE, bytes_digest
from app.projects.models import normalize_path

logger = logging.getLogger(__name__)

CONSOLE_DIFF_LINES = 200
BEYOND_CAP = "(console output differs after the truncation point)"


class TargetKind(str, Enum):
    CONSOLE = "ConsoleOutput"
    FILE = "FilePath"


class Verdict(str, Enum):
    REPRODUCED = "Reproduced"
    NOT_REPRODUCED = "NotReproduced"
    REPLICATION_DIFF = "ReplicationDiff"


class DiffStatus(str, Enum):
    ONLY_IN_A = "OnlyInA"
    ONLY_IN_B = "OnlyInB"
    DIGEST_MISMATCH = "DigestMismatch"

    def mirrored(self):
        if self is DiffStatus.ONLY_IN_A:
            return DiffStatus.ONLY_IN_B
        if self is DiffStatus.ONLY_IN_B:
            return DiffStatus.ONLY_IN_A
        return self


@dataclass(frozen=True)
class OutputTarget:
    kind: TargetKind
    path: str | None = None

    def to_dict(self):
        if self.kind is TargetKind.CONSOLE:
            return {"kind": self.kind.value}
        return {"kind": self.kind.value, "path": self.path}


@dataclass(frozen=True)
class OutputSpec:
    """
    Where the results of an experiment are. Empty means everything.
    """

    locations: tuple = ()

    @classmethod
    def parse(cls, items):
        """
        Accepts `"console"`, a file or folder path, or
        `{"kind": "ConsoleOutput"}` / `{"kind": "FilePath", "path": ...}`.
        """
        targets = []
        for item in items or ():
            if isinstance(item, OutputTarget):
                targets.append(item)
                continue
            if isinstance(item, dict):
                kind = str(item.get("kind", ""))
                path = item.get("path")
            else:
                text = str(item)
                kind = TargetKind.CONSOLE.value if text.lower() in ("console", "consoleoutput", "stdout") else TargetKind.FILE.value
                path = None if kind == TargetKind.CONSOLE.value else text
            if kind.lower() in ("console", "consoleoutput"):
                targets.append(OutputTarget(TargetKind.CONSOLE))
            elif kind.lower() in ("file", "filepath"):
                targets.append(OutputTarget(TargetKind.FILE, normalize_path(path)))
            else:
                raise ValidationError(f"unknown output target: {item!r}")
        return cls(tuple(dict.fromkeys(targets)))

    @property
    def is_empty(self):
        return not self.locations

    @property
    def compares_console(self):
        return self.is_empty or any(target.kind is TargetKind.CONSOLE for target in self.locations)

    @property
    def file_paths(self):
        return [target.path for target in self.locations if target.kind is TargetKind.FILE]

    def covers(self, path):
        """
        Whether a changed file is compared. Folder targets cover their subtree.
        """
        if self.is_empty:
            return True
        return any(path == target or path.startswith(target + "/") for target in self.file_paths)

    def to_list(self):
        return [target.to_dict() for target in self.locations]


@dataclass(frozen=True)
class FileDiff:
    path: str
    status: DiffStatus

    def to_dict(self):
        return {"path": self.path, "status": self.status.value}


@dataclass(frozen=True)
class VerificationReport:
    verdict: Verdict
    console_match: bool
    file_diffs: tuple
    runs: tuple
    compared: OutputSpec = field(default_factory=OutputSpec)
    console_diff: tuple = ()

    def to_dict(self):
        return {
            "verdict": self.verdict.value,
            "consoleMatch": self.console_match,
            "fileDiffs": [diff.to_dict() for diff in self.file_diffs],
            "runs": list(self.runs),
            "compared": self.compared.to_list(),
            "consoleDiff": list(self.console_diff),
        }


def _console(stdout, stderr, compare_stderr, ignore_patterns):
    text = stdout.decode("utf-8", errors="surrogateescape")
    if compare_stderr:
        text += stderr.decode("utf-8", errors="surrogateescape")
    if not ignore_patterns:
        return text
    patterns = [re.compile(pattern) for pattern in ignore_patterns]
    lines = text.splitlines(keepends=True)
    return "".join(line for line in lines if not any(pattern.search(line) for pattern in patterns))


def _full_console_match(a, b, compare_stderr):
    if a.stdout_digest != b.stdout_digest:
        return False
    return not compare_stderr or a.stderr_digest == b.stderr_digest


def _console_diff(left, right, left_name, right_name):
    diff = difflib.unified_diff(
        left.splitlines(), right.splitlines(), fromfile=left_name, tofile=right_name, lineterm=""
    )
    return tuple(line for _, line in zip(range(CONSOLE_DIFF_LINES), diff))


def _file_diffs(changed_a, changed_b, output_spec):
    if not output_spec.is_empty and not output_spec.file_paths:
        return ()
    diffs = []
    for path in sorted(set(changed_a) | set(changed_b)):
        if not output_spec.covers(path):
            continue
        in_a = path in changed_a and changed_a[path] != TOMBSTONE
        in_b = path in changed_b and changed_b[path] != TOMBSTONE
        if changed_a.get(path) == changed_b.get(path):
            continue
        if in_a and in_b:
            status = DiffStatus.DIGEST_MISMATCH
        elif in_a:
            status = DiffStatus.ONLY_IN_A
        elif in_b:
            status = DiffStatus.ONLY_IN_B
        else:
            # deleted by one run only
            status = DiffStatus.ONLY_IN_B if path in changed_a else DiffStatus.ONLY_IN_A
        diffs.append(FileDiff(path, status))
    return tuple(diffs)


def compare_runs(a, b, output_spec=None, compare_stderr=False, ignore_patterns=()):
    """
    Compare two run records of the same project.
    """
    if a.project_id != b.project_id:
        raise ValidationError("runs belong to different projects")
    output_spec = output_spec or OutputSpec()
    console_match = True
    console_diff = ()
    if output_spec.compares_console:
        left = _console(a.outcome.stdout, a.outcome.stderr, compare_stderr, ignore_patterns)
        right = _console(b.outcome.stdout, b.outcome.stderr, compare_stderr, ignore_patterns)
        if ignore_patterns:
            console_match = left == right
            if console_match and (a.outcome.truncated or b.outcome.truncated):
                # lines past the cap are not available to filter
                console_match = _full_console_match(a.outcome, b.outcome, compare_stderr)
        else:
            console_match = _full_console_match(a.outcome, b.outcome, compare_stderr)
        if not console_match:
            console_diff = _console_diff(left, right, a.run_id, b.run_id) or (BEYOND_CAP,)
    file_diffs = _file_diffs(a.outcome.changed_files, b.outcome.changed_files, output_spec)
    if a.dataset_id != b.dataset_id:
        verdict = Verdict.REPLICATION_DIFF
    elif console_match and not file_diffs:
        verdict = Verdict.REPRODUCED
    else:
        verdict = Verdict.NOT_REPRODUCED
    logger.info("Runs %s and %s: %s", a.run_id, b.run_id, verdict.value)
    return VerificationReport(
        verdict=verdict,
        console_match=console_match,
        file_diffs=file_diffs,
        runs=(a.run_id, b.run_id),
        compared=output_spec,
        console_diff=console_diff,
    )


def verify_reproducibility(runner, project_id, tag_id, command, dataset_id=None, output_spec=None, ignore_patterns=()):
    """
    Run `command` twice on fresh containers and compare the pair.
    """
    first, second = runner.run_pair(project_id, tag_id, command, dataset_id)
    return compare_runs(
        first,
        second,
        output_spec,
        compare_stderr=runner.compare_stderr,
        ignore_patterns=ignore_patterns,
    )


def compare_with_expected(run, expected, output_spec=None, compare_stderr=False, ignore_patterns=()):
    """
    Compare a run with author-supplied expected results:
    `{"stdout": <text>, "files": {<path>: <sha256>}}`. Only what is given is
    compared; the expected side is B.
    """
    output_spec = output_spec or OutputSpec()
    console_match = True
    console_diff = ()
    if "stdout" in expected and output_spec.compares_console:
        actual = _console(run.outcome.stdout, run.outcome.stderr, compare_stderr, ignore_patterns)
        wanted = _console(str(expected["stdout"]).encode("utf-8"), b"", False, ignore_patterns)
        if run.outcome.truncated:
            console_match = (
                not ignore_patterns
                and not compare_stderr
                and run.outcome.stdout_digest == bytes_digest(str(expected["stdout"]).encode("utf-8"))
            )
        else:
            console_match = actual == wanted
        if not console_match:
            console_diff = _console_diff(actual, wanted, run.run_id, "expected") or (BEYOND_CAP,)
    diffs = []
    for path, digest in sorted(dict(expected.get("files", {})).items()):
        path = normalize_path(path)
        if not output_spec.covers(path) or (not output_spec.is_empty and not output_spec.file_paths):
            continue
        produced = run.outcome.changed_files.get(path)
        if produced is None or produced == TOMBSTONE:
            diffs.append(FileDiff(path, DiffStatus.ONLY_IN_B))
        elif produced != digest:
            diffs.append(FileDiff(path, DiffStatus.DIGEST_MISMATCH))
    verdict = Verdict.REPRODUCED if console_match and not diffs else Verdict.NOT_REPRODUCED
    return VerificationReport(
        verdict=verdict,
        console_match=console_match,
        file_diffs=tuple(diffs),
        runs=(run.run_id, "expected"),
        compared=output_spec,
        console_diff=console_diff,
    )
