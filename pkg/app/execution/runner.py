# -*- coding: utf-8 -*-
"""
Module: runner.py

Orchestrate executions of a project's experiment.

`ExperimentRunner` builds environments, runs commands through the configured
engine driver and persists every run as an append-only `RunRecord`. Runs of
one project are serialized by the store's per-project lock; runs of different
projects may proceed in parallel.

Classes:
- `RunPurpose`: Why a run happened (Configure, Manual, VerifyPair, Replication).
- `RunRecord`: One persisted execution.
- `ExperimentRunner`:
    - `build_environment(project_id, request)`: spec, image and image record.
    - `execute(project_id, tag_id, command, dataset_id)`: one run.
    - `run_pair(project_id, tag_id, command, dataset_id)`: two runs with a
      shared pair id.
    - `configure_and_double_run(project_id, request, command)`: spec, build,
      two runs and the verification report; failures carry the stage name.
"""

import logging
from dataclasses import dataclass
from enum import Enum

from app.environment.containerspec import Sidecar, plan_environment
from app.exceptions import NotFoundError, ReproError, StageFailure, ValidationError
from app.execution.drivers import Attachments, ImageRef, RunOutcome, engine_tag_for
from app.execution.verifier import compare_runs
from app.projects.store import write_atomic
from app.utils import new_id, utc_now

logger = logging.getLogger(__name__)

DOCKERFILE = "Dockerfile"


class RunPurpose(str, Enum):
    CONFIGURE = "Configure"
    MANUAL = "Manual"
    VERIFY_PAIR = "VerifyPair"
    REPLICATION = "Replication"


@dataclass(frozen=True)
class RunRecord:
    """
    One execution; immutable once persisted.
    """

    run_id: str
    project_id: str
    image: ImageRef
    command: str
    dataset_id: str | None
    outcome: RunOutcome
    started_at: str
    purpose: RunPurpose
    pair_id: str | None = None

    def to_record(self):
        """
        Stored form; console bytes are kept beside it.
        """
        return {
            "runId": self.run_id,
            "projectId": self.project_id,
            "image": self.image.to_dict(),
            "command": self.command,
            "datasetId": self.dataset_id,
            "startedAt": self.started_at,
            "purpose": self.purpose.value,
            "pairId": self.pair_id,
            "exitCode": self.outcome.exit_code,
            "duration": self.outcome.duration,
            "truncated": self.outcome.truncated,
            "stdoutDigest": self.outcome.stdout_digest,
            "stderrDigest": self.outcome.stderr_digest,
            "changedFiles": dict(self.outcome.changed_files),
        }

    def to_dict(self):
        data = self.to_record()
        data["stdout"] = self.outcome.stdout.decode("utf-8", errors="replace")
        data["stderr"] = self.outcome.stderr.decode("utf-8", errors="replace")
        return data

    @classmethod
    def from_record(cls, record, stdout, stderr):
        return cls(
            run_id=record["runId"],
            project_id=record["projectId"],
            image=ImageRef.from_dict(record["image"]),
            command=record["command"],
            dataset_id=record.get("datasetId"),
            outcome=RunOutcome(
                stdout=stdout,
                stderr=stderr,
                exit_code=record["exitCode"],
                changed_files=dict(record.get("changedFiles", {})),
                duration=record.get("duration", 0.0),
                truncated=record.get("truncated", False),
                stdout_digest=record.get("stdoutDigest"),
                stderr_digest=record.get("stderrDigest"),
            ),
            started_at=record["startedAt"],
            purpose=RunPurpose(record["purpose"]),
            pair_id=record.get("pairId"),
        )


class ExperimentRunner:
    def __init__(self, store, driver, settings):
        self.store = store
        self.driver = driver
        self.settings = settings
        self.compare_stderr = settings.compare_stderr

    # -- environments --

    def plan(self, project_id, request):
        project = self.store.get_project(project_id)
        return plan_environment(request, project.id, base_image=self.settings.base_image)

    def build_environment(self, project_id, request, plan=None):
        """
        Plan and build the environment of `request`; returns `(ImageRef, plan)`.
        """
        plan = plan or self.plan(project_id, request)
        write_atomic(self.store.environment_dir(project_id) / DOCKERFILE, plan.main_spec.render())
        tag_id = self.store.allocate_tag(project_id)
        engine_tag = engine_tag_for(project_id, tag_id)
        image = self.driver.build_image(plan.main_spec, self.store.project_dir(project_id), tag_id, engine_tag)
        record = image.to_dict()
        record.update(
            {
                "driver": self.driver.name,
                "createdAt": utc_now(),
                "request": request.to_json(),
                "dockerfile": plan.main_spec.render(),
                "network": plan.network_name,
                "sidecars": [sidecar.to_dict() for sidecar in plan.sidecars],
                "environment": dict(plan.environment),
            }
        )
        self.store.save_image(project_id, tag_id, record)
        logger.info("Project %s environment built as image %s", project_id, tag_id)
        return image, plan

    def image(self, project_id, tag_id):
        return ImageRef.from_dict(self.store.get_image(project_id, tag_id))

    # -- runs --

    def _attachments(self, project_id, image_record, dataset):
        dataset_path = None
        dataset_mount = None
        if dataset is not None:
            if dataset.external:
                dataset_mount = dataset.root
            else:
                dataset_path = dataset.root
        return Attachments(
            dataset_path=dataset_path,
            dataset_mount=dataset_mount,
            sidecars=tuple(Sidecar.from_dict(item) for item in image_record.get("sidecars", [])),
            network=image_record.get("network"),
            environment=tuple(sorted(image_record.get("environment", {}).items())),
            context=self.store.files_root(project_id),
        )

    def execute(self, project_id, tag_id, command, dataset_id=None, purpose=None, pair_id=None):
        """
        Run `command` on image `tag_id` of the project and persist the record.
        The project's dataset is used unless `dataset_id` names another known
        dataset, which makes the run a replication.
        """
        if not command or not str(command).strip():
            raise ValidationError("command must not be empty")
        project = self.store.get_project(project_id)
        image_record = self.store.get_image(project_id, tag_id)
        image = ImageRef.from_dict(image_record)
        dataset = project.dataset
        if dataset_id is not None:
            dataset = project.known_dataset(dataset_id)
            if dataset is None:
                raise NotFoundError(f"no such dataset: {dataset_id}")
        if purpose is None:
            replication = dataset is not None and project.dataset is not None and dataset.id != project.dataset.id
            purpose = RunPurpose.REPLICATION if replication else RunPurpose.MANUAL
        attachments = self._attachments(project_id, image_record, dataset)
        with self.store.project_lock(project_id):
            started_at = utc_now()
            logger.info("Running %r on image %s (%s)", command, image.tag_id, purpose.value)
            outcome = self.driver.run(image, command, attachments)
            record = RunRecord(
                run_id=new_id(),
                project_id=project_id,
                image=image,
                command=command,
                dataset_id=dataset.id if dataset else None,
                outcome=outcome,
                started_at=started_at,
                purpose=purpose,
                pair_id=pair_id,
            )
            self.store.save_run(project_id, record.run_id, record.to_record(), outcome.stdout, outcome.stderr)
        return record

    def run_pair(self, project_id, tag_id, command, dataset_id=None, purpose=RunPurpose.VERIFY_PAIR):
        pair_id = new_id()
        first = self.execute(project_id, tag_id, command, dataset_id, purpose=purpose, pair_id=pair_id)
        second = self.execute(project_id, tag_id, command, dataset_id, purpose=purpose, pair_id=pair_id)
        return first, second

    def get_run(self, project_id, run_id):
        record, stdout, stderr = self.store.load_run(project_id, run_id)
        return RunRecord.from_record(record, stdout, stderr)

    def list_runs(self, project_id):
        return [self.get_run(project_id, run_id) for run_id in self.store.list_run_ids(project_id)]

    # -- configure --

    def configure_and_double_run(
        self, project_id, request, command, dataset_id=None, output_spec=None, ignore_patterns=()
    ):
        """
        Build the environment and run the experiment twice; returns
        `(ImageRef, RunRecord, RunRecord, VerificationReport)`.
        """
        stage = "spec"
        try:
            plan = self.plan(project_id, request)
            stage = "build"
            image, _ = self.build_environment(project_id, request, plan)
            stage = "run"
            first, second = self.run_pair(
                project_id, image.tag_id, command, dataset_id, purpose=RunPurpose.CONFIGURE
            )
            stage = "verify"
            report = compare_runs(
                first, second, output_spec, compare_stderr=self.compare_stderr, ignore_patterns=ignore_patterns
            )
        except (ValidationError, NotFoundError) as e:
            e.stage = e.stage or stage
            raise
        except ReproError as e:
            raise StageFailure(stage, e.message) from e
        except OSError as e:
            raise StageFailure(stage, e) from e
        return image, first, second, report
