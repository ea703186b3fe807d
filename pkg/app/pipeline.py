# -*- coding: utf-8 -*-
"""
Module: pipeline.py

The operations of the toolchain as one object. The CLI (`app.cli`) and the
HTTP blueprints call the same methods and serialize the same dictionaries, so
`--json` output and HTTP response bodies are identical.

Payload field names follow the request bodies of the service
(`languages`, `languagesVersion`, `commandsToAdd`, `hasRequirementsFile`,
`command`, `tagId`, `datasetId`, ...).

Usage:
    from app.config import load_settings
    from app.pipeline import Pipeline

    pipeline = Pipeline(load_settings(driver="sandbox"))
    project = pipeline.create_project("E3", "subgraph experiment", "Script")
"""

import logging
from pathlib import Path

from app.environment.containerspec import EnvironmentRequest
from app.environment.dependencies import load_aliases
from app.environment.languages import load_language_table
from app.environment.suggest import suggest_request, write_inferred_requirements
from app.exceptions import NotFoundError, ValidationError
from app.execution.drivers import get_driver
from app.execution.runner import ExperimentRunner
from app.execution.verifier import (
    OutputSpec,
    compare_runs,
    compare_with_expected,
    verify_reproducibility,
)
from app.packaging.packager import build_package, replay_package, verify_package, zip_package
from app.projects.ingest import ingest
from app.projects.models import DatasetRef, EntryAction
from app.projects.store import ProjectStore
from app.utils import is_truthy, new_id

logger = logging.getLogger(__name__)

PACKAGES_DIR = "packages"


def _required(payload, key):
    value = payload.get(key)
    if value is None or (isinstance(value, str) and not value.strip()):
        raise ValidationError(f"{key} is required")
    return value


class Pipeline:
    """
    Façade over store, inference, spec generation, drivers and packaging.
    """

    def __init__(self, settings, driver=None):
        self.settings = settings
        self.store = ProjectStore(settings.store_path)
        self.driver = driver or get_driver(settings)
        self.runner = ExperimentRunner(self.store, self.driver, settings)
        self.table = load_language_table(settings.language_table)
        self.aliases = load_aliases(settings.alias_table)

    # -- projects --

    def create_project(self, name, description="", project_type="Script", authors=()):
        project = self.store.create_project(name, description, project_type, authors)
        return project.summary()

    def list_projects(self):
        return {"projects": [project.summary() for project in self.store.list_projects()]}

    def get_project(self, project_id):
        return self.store.get_project(project_id).to_dict()

    def add_files(self, project_id, source):
        nodes = ingest(self.store, project_id, source)
        return {"projectId": project_id, "added": [node.to_dict() for node in nodes]}

    def modify_entry(self, project_id, action, path, content=None):
        action = EntryAction.parse(action)
        node = self.store.modify_entry(project_id, action, path, content)
        if node is None:
            return {"projectId": project_id, "action": action.value, "path": path}
        return {"projectId": project_id, "action": action.value, "node": node.to_dict()}

    def read_file(self, project_id, path):
        return self.store.read_file(project_id, path)

    def set_dataset(self, project_id, payload):
        dataset = DatasetRef(
            id=payload.get("id") or "",
            root=_required(payload, "root"),
            label=payload.get("label", ""),
            external=is_truthy(payload.get("external", False)),
        )
        return self.store.set_dataset(project_id, dataset).summary()

    def set_seeds(self, project_id, seeds):
        if not isinstance(seeds, list):
            raise ValidationError("seeds must be a list")
        return self.store.set_seeds(project_id, seeds).summary()

    # -- inference --

    def infer(self, project_id, write_requirements=False):
        result = suggest_request(self.store, project_id, self.table, self.aliases)
        if write_requirements and result["inferredRequirements"] is not None:
            node, _ = write_inferred_requirements(self.store, project_id, self.aliases)
            result["requirementsFile"] = node.path
            result["request"]["hasRequirementsFile"] = True
        return result

    # -- environment --

    def _request(self, project_id, payload):
        project = self.store.get_project(project_id)
        return EnvironmentRequest.from_json(payload, project.project_type, project.seeds)

    def preview_environment(self, project_id, payload):
        plan = self.runner.plan(project_id, self._request(project_id, payload))
        return plan.to_dict()

    def build_environment(self, project_id, payload):
        image, plan = self.runner.build_environment(project_id, self._request(project_id, payload))
        result = image.to_dict()
        result["dockerfile"] = plan.main_spec.render()
        return result

    def list_images(self, project_id):
        self.store.get_project(project_id)
        return {"images": self.store.list_images(project_id)}

    # -- execution --

    def run(self, project_id, payload):
        record = self.runner.execute(
            project_id,
            _required(payload, "tagId"),
            payload.get("command"),
            payload.get("datasetId"),
        )
        return record.to_dict()

    def get_run(self, project_id, run_id):
        return self.runner.get_run(project_id, run_id).to_dict()

    def list_runs(self, project_id):
        return {"runs": [record.to_record() for record in self.runner.list_runs(project_id)]}

    def verify(self, project_id, payload):
        report = verify_reproducibility(
            self.runner,
            project_id,
            _required(payload, "tagId"),
            payload.get("command"),
            payload.get("datasetId"),
            OutputSpec.parse(payload.get("outputSpec")),
            tuple(payload.get("ignorePatterns", ())),
        )
        return report.to_dict()

    def configure(self, project_id, payload):
        image, first, second, report = self.runner.configure_and_double_run(
            project_id,
            self._request(project_id, _required(payload, "request")),
            _required(payload, "command"),
            payload.get("datasetId"),
            OutputSpec.parse(payload.get("outputSpec")),
            tuple(payload.get("ignorePatterns", ())),
        )
        return {
            "image": image.to_dict(),
            "runs": [first.to_record(), second.to_record()],
            "report": report.to_dict(),
        }

    def compare(self, project_id, payload):
        first = self.runner.get_run(project_id, _required(payload, "runA"))
        second = self.runner.get_run(project_id, _required(payload, "runB"))
        report = compare_runs(
            first,
            second,
            OutputSpec.parse(payload.get("outputSpec")),
            compare_stderr=self.settings.compare_stderr,
            ignore_patterns=tuple(payload.get("ignorePatterns", ())),
        )
        return report.to_dict()

    def expect(self, project_id, payload):
        record = self.runner.get_run(project_id, _required(payload, "runId"))
        expected = _required(payload, "expected")
        if not isinstance(expected, dict):
            raise ValidationError("expected must be an object with stdout and/or files")
        report = compare_with_expected(
            record,
            expected,
            OutputSpec.parse(payload.get("outputSpec")),
            compare_stderr=self.settings.compare_stderr,
            ignore_patterns=tuple(payload.get("ignorePatterns", ())),
        )
        return report.to_dict()

    # -- packaging --

    def package(self, project_id, payload):
        out = payload.get("out")
        if out is None:
            out = self.store.project_dir(project_id) / PACKAGES_DIR / new_id()
        manifest = build_package(
            self.store,
            project_id,
            _required(payload, "tagId"),
            payload.get("commands") or [],
            out,
            driver=self.driver,
            embed_image=is_truthy(payload.get("embedImage", False)),
        )
        result = {"path": str(Path(out)), "manifest": manifest.to_dict()}
        if is_truthy(payload.get("zip", False)):
            result["archive"] = str(zip_package(out))
        return result

    def package_archive(self, project_id, package_id):
        """
        Zip archive of a package stored under the project; built on first use.
        """
        directory = self.store.project_dir(project_id) / PACKAGES_DIR / package_id
        if "/" in package_id or package_id.startswith(".") or not directory.is_dir():
            raise NotFoundError(f"no such package: {package_id}")
        archive = directory.with_suffix(".zip")
        if not archive.is_file():
            zip_package(directory, archive)
        return archive

    def check_package(self, directory):
        return verify_package(directory).to_dict()

    def replay(self, directory):
        manifest, outcomes = replay_package(directory, self.driver)
        return {
            "manifest": manifest.to_dict(),
            "outcomes": [
                {
                    "command": command,
                    "exitCode": outcome.exit_code,
                    "changedFiles": dict(outcome.changed_files),
                    "stdout": outcome.stdout.decode("utf-8", errors="replace"),
                }
                for command, outcome in zip(manifest.commands, outcomes)
            ],
        }
