# -*- coding: utf-8 -*-
"""
Module: drivers.py

Engine drivers build images from container specs and run commands in them.

- `DockerCliDriver` shells out to the container engine CLI (`docker` or a
  compatible executable such as `podman`).
- `SandboxDriver` runs without an engine: an "image" is a directory holding a
  copy of the build context, and a run executes the command in a throwaway copy
  of that directory. Its capability set:
    * `FROM` is recorded and ignored;
    * `RUN` lines that provision toolchains (`apt`, `apt-get`,
      `update-alternatives`, `pip install`) are skipped with a warning;
    * `WORKDIR`, `COPY` and every other `RUN` line are executed;
    * database sidecars are rejected.

Both drivers detect changed files the same way: the working tree (`/files`)
is digested before and after the command and the two maps are diffed.

Engine CLI contract (`DockerCliDriver`):
    build:   <cli> build -t <engine_tag> -f <Dockerfile> <context>
    exists:  <cli> image inspect <engine_tag>
    network: <cli> network inspect|create <network>
    sidecar: <cli> run -d --name <n> --network <network> --network-alias <alias> -e K=V ... <image>
    run:     <cli> create -w /files [--network N] [-v <dataset>:/dataset:ro] [-e K=V] <engine_tag> sh -c <command>
             <cli> cp <id>:/files <before>; <cli> start -a <id>; <cli> cp <id>:/files <after>; <cli> rm -f <id>
    save:    <cli> save -o <archive> <engine_tag>

Use `get_driver(settings)` to obtain the configured driver.
"""

import logging
import os
import re
import shlex
import shutil
import subprocess
import tarfile
import tempfile
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

from app.environment.containerspec import WORKDIR_FILES, DirectiveKind
from app.exceptions import EngineFailure, NotFoundError, NotSupportedError
from app.execution.digests import bytes_digest, diff_trees, tree_digest
from app.utils import new_id

logger = logging.getLogger(__name__)

TRUNCATION_MARKER = "\n[output truncated after {limit} bytes]\n"
LOG_EXCERPT = 4000
DATASET_MOUNT = "/dataset"
PROVISIONING = re.compile(r"^\s*(apt|apt-get|update-alternatives|pip3?\s+install)\b")


@dataclass(frozen=True)
class ImageRef:
    """
    A built image: store-wide tag id, engine name and the digest of its spec.
    """

    tag_id: int
    engine_tag: str
    spec_digest: str

    def to_dict(self):
        return {"tagId": self.tag_id, "engineTag": self.engine_tag, "specDigest": self.spec_digest}

    @classmethod
    def from_dict(cls, data):
        return cls(int(data["tagId"]), data["engineTag"], data["specDigest"])


@dataclass(frozen=True)
class RunOutcome:
    """
    Console output (capped), exit code and changed files of one run. The
    console digests are taken over the full output before capping.
    """

    stdout: bytes
    stderr: bytes
    exit_code: int
    changed_files: dict
    duration: float
    truncated: bool = False
    stdout_digest: str | None = None
    stderr_digest: str | None = None

    def __post_init__(self):
        if self.stdout_digest is None:
            object.__setattr__(self, "stdout_digest", bytes_digest(self.stdout))
        if self.stderr_digest is None:
            object.__setattr__(self, "stderr_digest", bytes_digest(self.stderr))


@dataclass(frozen=True)
class Attachments:
    """
    What a run gets besides its image.

    `dataset_path` is an in-tree dataset root; `dataset_mount` a host directory
    mounted read-only. `context` is the host directory that sidecar mounts
    are resolved against.
    """

    dataset_path: str | None = None
    dataset_mount: Path | None = None
    sidecars: tuple = ()
    network: str | None = None
    environment: tuple = ()
    context: Path | None = None


def engine_tag_for(project_id, tag_id):
    return f"reprokit/{project_id}:{tag_id}"


def cap_console(data, limit):
    """
    Cut console output at `limit` bytes and mark the cut.
    """
    if limit is None or len(data) <= limit:
        return data, False
    return data[:limit] + TRUNCATION_MARKER.format(limit=limit).encode("utf-8"), True


def _excerpt(text):
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    return text[-LOG_EXCERPT:]


class EngineDriver(ABC):
    """
    Contract shared by all drivers.
    """

    name = "abstract"

    def __init__(self, console_limit=1024 * 1024, run_timeout=3600):
        self.console_limit = console_limit
        self.run_timeout = run_timeout

    @abstractmethod
    def build_image(self, spec, context, tag_id, engine_tag):
        """
        Build `spec` with `context` as build context; returns an `ImageRef`.
        """

    @abstractmethod
    def run(self, image, command, attachments=None):
        """
        Run `command` in `/files` of a fresh container of `image`.
        """

    @abstractmethod
    def image_exists(self, image):
        pass

    @abstractmethod
    def save_image(self, image, destination):
        """
        Export `image` to an archive at `destination`.
        """

    def _outcome(self, stdout, stderr, exit_code, before, after, started):
        stdout = stdout or b""
        stderr = stderr or b""
        stdout_digest = bytes_digest(stdout)
        stderr_digest = bytes_digest(stderr)
        stdout, cut_out = cap_console(stdout, self.console_limit)
        stderr, cut_err = cap_console(stderr, self.console_limit)
        return RunOutcome(
            stdout=stdout,
            stderr=stderr,
            exit_code=exit_code,
            changed_files=diff_trees(before, after),
            duration=round(time.monotonic() - started, 3),
            truncated=cut_out or cut_err,
            stdout_digest=stdout_digest,
            stderr_digest=stderr_digest,
        )


class DockerCliDriver(EngineDriver):
    """
    Driver for a Docker-compatible engine CLI.
    """

    name = "docker"

    def __init__(self, cli="docker", console_limit=1024 * 1024, run_timeout=3600):
        super().__init__(console_limit, run_timeout)
        self.cli = cli

    def available(self):
        return shutil.which(self.cli) is not None

    def _engine(self, *args, timeout=None, check=True, stage="run"):
        command = [self.cli, *args]
        logger.debug("Engine: %s", shlex.join(command))
        try:
            result = subprocess.run(command, capture_output=True, timeout=timeout, check=False)
        except FileNotFoundError as e:
            raise EngineFailure(f"container engine not found: {self.cli}", stage=stage) from e
        except subprocess.TimeoutExpired as e:
            raise EngineFailure(f"engine command timed out: {args[0]}", stage=stage) from e
        if check and result.returncode != 0:
            log = _excerpt(result.stderr or result.stdout)
            raise EngineFailure(f"{self.cli} {args[0]} failed: {log.strip()[-300:]}", stage=stage, log=log)
        return result

    def build_image(self, spec, context, tag_id, engine_tag):
        context = Path(context)
        with tempfile.TemporaryDirectory(prefix="reprokit-build-") as temporary:
            dockerfile = Path(temporary) / "Dockerfile"
            dockerfile.write_text(spec.render(), encoding="utf-8")
            logger.info("Building %s", engine_tag)
            self._engine("build", "-t", engine_tag, "-f", str(dockerfile), str(context), stage="build")
        return ImageRef(tag_id, engine_tag, spec.digest)

    def image_exists(self, image):
        return self._engine("image", "inspect", image.engine_tag, check=False).returncode == 0

    def save_image(self, image, destination):
        self._engine("save", "-o", str(destination), image.engine_tag, stage="package")
        return Path(destination)

    def _ensure_network(self, network):
        if self._engine("network", "inspect", network, check=False).returncode != 0:
            self._engine("network", "create", network)

    def _start_sidecars(self, attachments, suffix):
        names = []
        for sidecar in attachments.sidecars:
            name = f"{attachments.network}-{sidecar.alias}-{suffix}"
            args = ["run", "-d", "--name", name, "--network", attachments.network, "--network-alias", sidecar.alias]
            for key, value in sidecar.environment:
                args += ["-e", f"{key}={value}"]
            for source, target in sidecar.mounts:
                host = Path(attachments.context or ".") / source
                args += ["-v", f"{host.resolve()}:{target}:ro"]
            self._engine(*args, sidecar.image)
            names.append(name)
            logger.info("Started sidecar %s (%s)", name, sidecar.image)
        return names

    def run(self, image, command, attachments=None):
        attachments = attachments or Attachments()
        if not self.image_exists(image):
            raise NotFoundError(f"no such image: {image.tag_id}")
        suffix = new_id()[:12]
        sidecars = []
        container = None
        args = ["create", "-w", WORKDIR_FILES]
        environment = dict(attachments.environment)
        if attachments.network:
            self._ensure_network(attachments.network)
            args += ["--network", attachments.network]
        if attachments.dataset_mount is not None:
            args += ["-v", f"{Path(attachments.dataset_mount).resolve()}:{DATASET_MOUNT}:ro"]
            environment["REPRO_DATASET_DIR"] = DATASET_MOUNT
        elif attachments.dataset_path:
            environment["REPRO_DATASET_DIR"] = f"{WORKDIR_FILES}/{attachments.dataset_path}"
        for key, value in sorted(environment.items()):
            args += ["-e", f"{key}={value}"]
        try:
            sidecars = self._start_sidecars(attachments, suffix)
            container = self._engine(*args, image.engine_tag, "sh", "-c", command).stdout.decode().strip()
            with tempfile.TemporaryDirectory(prefix="reprokit-run-") as temporary:
                before_dir = Path(temporary) / "before"
                after_dir = Path(temporary) / "after"
                self._engine("cp", f"{container}:{WORKDIR_FILES}", str(before_dir))
                before = tree_digest(before_dir)
                started = time.monotonic()
                result = self._engine("start", "-a", container, timeout=self.run_timeout, check=False)
                self._engine("cp", f"{container}:{WORKDIR_FILES}", str(after_dir))
                after = tree_digest(after_dir)
            logger.info("Run in %s exited with %d", image.engine_tag, result.returncode)
            return self._outcome(result.stdout, result.stderr, result.returncode, before, after, started)
        finally:
            if container:
                self._engine("rm", "-f", container, check=False)
            for name in sidecars:
                self._engine("rm", "-f", name, check=False)


class SandboxDriver(EngineDriver):
    """
    Engine-less driver for tests and for machines without a container engine.
    """

    name = "sandbox"

    def __init__(self, root, console_limit=1024 * 1024, run_timeout=3600):
        super().__init__(console_limit, run_timeout)
        self.root = Path(root)

    def _image_dir(self, tag_id):
        return self.root / "images" / str(tag_id)

    @staticmethod
    def _inside(rootfs, path):
        resolved = path.resolve()
        if resolved != rootfs.resolve() and not resolved.is_relative_to(rootfs.resolve()):
            raise EngineFailure(f"path escapes the sandbox: {path}", stage="build")
        return resolved

    def _target(self, rootfs, cwd, argument):
        if argument.startswith("/"):
            return self._inside(rootfs, rootfs / argument.lstrip("/"))
        return self._inside(rootfs, cwd / argument)

    def _shell(self, command, cwd, environment, stage):
        env = dict(os.environ)
        env.update(environment)
        try:
            # user-supplied experiment commands are shell lines by definition
            return subprocess.run(  # nosec B602
                command,
                shell=True,
                cwd=cwd,
                env=env,
                capture_output=True,
                timeout=self.run_timeout,
                check=False,
            )
        except subprocess.TimeoutExpired as e:
            raise EngineFailure(f"command timed out after {self.run_timeout}s: {command}", stage=stage) from e

    def build_image(self, spec, context, tag_id, engine_tag):
        context = Path(context)
        image_dir = self._image_dir(tag_id)
        if image_dir.exists():
            shutil.rmtree(image_dir)
        rootfs = image_dir / "rootfs"
        rootfs.mkdir(parents=True)
        cwd = rootfs
        for directive in spec.directives:
            if directive.kind is DirectiveKind.FROM:
                logger.debug("Sandbox ignores base image %s", directive.argument)
            elif directive.kind is DirectiveKind.WORKDIR:
                cwd = self._target(rootfs, cwd, directive.argument)
                cwd.mkdir(parents=True, exist_ok=True)
            elif directive.kind is DirectiveKind.COPY:
                source, _, destination = directive.argument.rpartition(" ")
                source_path = context / source
                target = self._target(rootfs, cwd, destination)
                if source_path.is_dir():
                    shutil.copytree(source_path, target, dirs_exist_ok=True, symlinks=True)
                elif source_path.is_file():
                    target.mkdir(parents=True, exist_ok=True)
                    shutil.copy2(source_path, target / source_path.name)
                else:
                    raise EngineFailure(f"COPY source not in build context: {source}", stage="build")
            elif PROVISIONING.match(directive.argument):
                logger.warning("Sandbox skips provisioning step: RUN %s", directive.argument.strip())
            else:
                result = self._shell(directive.argument, cwd, {}, "build")
                if result.returncode != 0:
                    log = _excerpt(result.stdout + result.stderr)
                    raise EngineFailure(
                        f"RUN {directive.argument} exited with {result.returncode}", stage="build", log=log
                    )
        (image_dir / "Dockerfile").write_text(spec.render(), encoding="utf-8")
        logger.info("Sandbox image %s built", engine_tag)
        return ImageRef(tag_id, engine_tag, spec.digest)

    def image_exists(self, image):
        return (self._image_dir(image.tag_id) / "rootfs").is_dir()

    def save_image(self, image, destination):
        if not self.image_exists(image):
            raise NotFoundError(f"no such image: {image.tag_id}")
        with tarfile.open(destination, "w") as archive:
            archive.add(self._image_dir(image.tag_id) / "rootfs", arcname="rootfs")
        return Path(destination)

    def run(self, image, command, attachments=None):
        attachments = attachments or Attachments()
        if not self.image_exists(image):
            raise NotFoundError(f"no such image: {image.tag_id}")
        if attachments.sidecars:
            raise NotSupportedError("the sandbox driver cannot run database sidecars")
        with tempfile.TemporaryDirectory(prefix="reprokit-sandbox-") as temporary:
            rootfs = Path(temporary) / "rootfs"
            shutil.copytree(self._image_dir(image.tag_id) / "rootfs", rootfs, symlinks=True)
            workdir = rootfs / WORKDIR_FILES.lstrip("/")
            workdir.mkdir(parents=True, exist_ok=True)
            environment = dict(attachments.environment)
            if attachments.dataset_mount is not None:
                environment["REPRO_DATASET_DIR"] = str(Path(attachments.dataset_mount).resolve())
            elif attachments.dataset_path:
                environment["REPRO_DATASET_DIR"] = str(workdir / attachments.dataset_path)
            before = tree_digest(workdir)
            started = time.monotonic()
            result = self._shell(command, workdir, environment, "run")
            after = tree_digest(workdir)
        logger.info("Sandbox run of image %s exited with %d", image.tag_id, result.returncode)
        return self._outcome(result.stdout, result.stderr, result.returncode, before, after, started)


def get_driver(settings):
    """
    The driver selected by `settings.driver`.
    """
    if settings.driver == "sandbox":
        return SandboxDriver(
            Path(settings.store_path) / ".sandbox",
            console_limit=settings.console_limit,
            run_timeout=settings.run_timeout,
        )
    return DockerCliDriver(
        settings.engine_cli,
        console_limit=settings.console_limit,
        run_timeout=settings.run_timeout,
    )
