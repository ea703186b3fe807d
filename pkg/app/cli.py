# -*- coding: utf-8 -*-
"""
Module: cli.py

Command line interface of the toolchain. Every subcommand calls one
`Pipeline` method; with `--json` the returned dictionary is printed as JSON,
which is the same document the HTTP service returns for that operation.

Commands:
- `init`: create a project.
- `add`: add files from a zip, directory, single file, git URL or DOI URL.
- `files`: create, edit or delete one entry of the file tree.
- `dataset`, `seeds`: associate a dataset, declare seeds.
- `infer`: draft an environment request from the project's files.
- `env`: build (or with `--no-build` only render) the environment.
- `run`, `verify`, `configure`, `compare`, `expect`: execute and compare.
- `pack`, `check-package`: export and check reproducibility packages.
- `show`: print a project, a run or the list of projects.
- `serve`: start the HTTP service.

Exit codes: 0 on success, 2 for NotFound and Validation errors (and usage
errors), 1 for everything else.

Example:
    repro init --name E3 --type script
    repro env --project <id> --request request.json
    repro --json run --project <id> --tag 100 --command "./out"
"""

import json
import logging
from pathlib import Path

import click

from app import create_app
from app.config import DRIVERS, load_environment, load_settings
from app.exceptions import NotFoundError, ReproError, ValidationError
from app.logging_setup import configure_cli_logging
from app.pipeline import Pipeline
from app.projects.ingest import DoiUrl, GitUrl, LocalDir, SingleFile, ZipArchive

logger = logging.getLogger(__name__)


class CliState:
    """
    Lazily built pipeline plus output options shared by all subcommands.
    """

    def __init__(self, overrides, as_json):
        self.overrides = overrides
        self.as_json = as_json
        self._pipeline = None

    @property
    def settings(self):
        return self.pipeline.settings

    @property
    def pipeline(self):
        if self._pipeline is None:
            self._pipeline = Pipeline(load_settings(**self.overrides))
        return self._pipeline

    def emit(self, data, text=None):
        if self.as_json or text is None:
            click.echo(json.dumps(data, indent=2, ensure_ascii=False))
        else:
            click.echo(text)


pass_state = click.make_pass_decorator(CliState)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ValidationError(f"cannot read {path}: {e}") from e
    except ValueError as e:
        raise ValidationError(f"{path} is not valid JSON: {e}") from e


def _json_option(value, name):
    if value is None:
        return None
    try:
        return json.loads(value)
    except ValueError as e:
        raise ValidationError(f"{name} is not valid JSON: {e}") from e


@click.group()
@click.option("--store", "store_path", type=click.Path(file_okay=False), help="Project store root.")
@click.option("--driver", type=click.Choice(DRIVERS), help="Engine driver.")
@click.option("--engine-cli", help="Container engine executable.")
@click.option("--base-image", help="Base image of generated specs.")
@click.option("--json", "as_json", is_flag=True, help="Print machine-readable JSON.")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
@click.pass_context
def cli(ctx, store_path, driver, engine_cli, base_image, as_json, verbose):
    """Build, run, verify and package reproducible experiments."""
    load_environment()
    configure_cli_logging(verbose)
    overrides = {
        "store_path": store_path,
        "driver": driver,
        "engine_cli": engine_cli,
        "base_image": base_image,
    }
    ctx.obj = CliState(overrides, as_json)


@cli.command()
@click.option("--name", required=True)
@click.option("--description", default="")
@click.option("--type", "project_type", default="Script", help="Script, ScriptWithDatabase or AI.")
@click.option("--author", "authors", multiple=True)
@pass_state
def init(state, name, description, project_type, authors):
    """Create a project and print its id."""
    project = state.pipeline.create_project(name, description, project_type, authors)
    state.emit(project, project["id"])


@cli.command()
@click.option("--project", "project_id", required=True)
@click.option("--zip", "zip_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--dir", "dir_path", type=click.Path(exists=True, file_okay=False))
@click.option("--file", "file_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--as", "target", help="Tree path of --file (default: its name).")
@click.option("--git", "git_url")
@click.option("--ref", help="Branch or tag for --git.")
@click.option("--doi", "doi_url", help="Direct file URL of a DOI record.")
@pass_state
def add(state, project_id, zip_path, dir_path, file_path, target, git_url, ref, doi_url):
    """Add experiment files to a project."""
    given = [value for value in (zip_path, dir_path, file_path, git_url, doi_url) if value]
    if len(given) != 1:
        raise ValidationError("give exactly one of --zip, --dir, --file, --git, --doi")
    if zip_path:
        source = ZipArchive(Path(zip_path))
    elif dir_path:
        source = LocalDir(Path(dir_path))
    elif file_path:
        source = SingleFile(target or Path(file_path).name, Path(file_path).read_bytes())
    elif git_url:
        source = GitUrl(git_url, ref)
    else:
        source = DoiUrl(doi_url)
    result = state.pipeline.add_files(project_id, source)
    state.emit(result, f"{len(result['added'])} entries added")


@cli.command()
@click.option("--project", "project_id", required=True)
@click.option(
    "--action",
    required=True,
    type=click.Choice(["CreateFile", "CreateFolder", "EditFile", "Delete"], case_sensitive=False),
)
@click.option("--path", "entry_path", required=True)
@click.option("--content", type=click.Path(exists=True, dir_okay=False), help="Local file with the new content.")
@pass_state
def files(state, project_id, action, entry_path, content):
    """Create, edit or delete one entry of the file tree."""
    data = Path(content).read_bytes() if content else None
    result = state.pipeline.modify_entry(project_id, action, entry_path, data)
    state.emit(result, f"{result['action']} {entry_path}")


@cli.command()
@click.option("--project", "project_id", required=True)
@click.option("--root", required=True, help="Tree path, or a host directory with --external.")
@click.option("--label", default="")
@click.option("--id", "dataset_id", default="")
@click.option("--external", is_flag=True)
@pass_state
def dataset(state, project_id, root, label, dataset_id, external):
    """Associate a dataset with a project."""
    payload = {"id": dataset_id, "root": root, "label": label, "external": external}
    result = state.pipeline.set_dataset(project_id, payload)
    state.emit(result, result["dataset"]["id"])


@cli.command()
@click.option("--project", "project_id", required=True)
@click.option(
    "--seed",
    "seed_items",
    multiple=True,
    required=True,
    help="LOCATION:VARIABLE=VALUE, e.g. train.py:SEED=42",
)
@pass_state
def seeds(state, project_id, seed_items):
    """Declare the seeds used by the experiment's code."""
    declared = []
    for item in seed_items:
        location, _, assignment = item.partition(":")
        variable, _, value = assignment.partition("=")
        if not location or not variable or not value:
            raise ValidationError(f"malformed seed {item!r}; use LOCATION:VARIABLE=VALUE")
        declared.append({"location": location, "variable": variable, "value": value})
    result = state.pipeline.set_seeds(project_id, declared)
    state.emit(result, f"{len(result['seeds'])} seeds declared")


@cli.command()
@click.option("--project", "project_id", required=True)
@click.option("--write-requirements", is_flag=True, help="Create requirements.txt from inferred imports.")
@pass_state
def infer(state, project_id, write_requirements):
    """Draft an environment request from the project's files."""
    result = state.pipeline.infer(project_id, write_requirements)
    state.emit(result, json.dumps(result["request"], indent=2))


@cli.command()
@click.option("--project", "project_id", required=True)
@click.option("--request", "request_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--no-build", is_flag=True, help="Only render the container specification.")
@pass_state
def env(state, project_id, request_path, no_build):
    """Generate the container specification and build the image."""
    payload = _read_json(request_path)
    if no_build:
        result = state.pipeline.preview_environment(project_id, payload)
    else:
        result = state.pipeline.build_environment(project_id, payload)
    state.emit(result, result["dockerfile"].rstrip("\n"))


@cli.command()
@click.option("--project", "project_id", required=True)
@click.option("--tag", "tag_id", required=True, type=int)
@click.option("--command", "command", required=True)
@click.option("--dataset", "dataset_id")
@pass_state
def run(state, project_id, tag_id, command, dataset_id):
    """Run one command on a fresh container of an image."""
    payload = {"command": command, "tagId": tag_id, "datasetId": dataset_id}
    result = state.pipeline.run(project_id, payload)
    if not state.as_json:
        click.echo(result["stdout"], nl=False)
        click.echo(result["stderr"], nl=False, err=True)
        click.echo(f"run {result['runId']} exited with {result['exitCode']}", err=True)
        return
    state.emit(result)


def _comparison_payload(output, ignore):
    return {"outputSpec": list(output), "ignorePatterns": list(ignore)}


def _verdict_text(report):
    lines = [report["verdict"]]
    lines.extend(f"{diff['status']}: {diff['path']}" for diff in report["fileDiffs"])
    lines.extend(report["consoleDiff"])
    return "\n".join(lines)


@cli.command()
@click.option("--project", "project_id", required=True)
@click.option("--tag", "tag_id", required=True, type=int)
@click.option("--command", "command", required=True)
@click.option("--dataset", "dataset_id")
@click.option("--output", multiple=True, help="'console' or a file/folder path; repeatable.")
@click.option("--ignore", multiple=True, help="Regex of console lines to ignore; repeatable.")
@pass_state
def verify(state, project_id, tag_id, command, dataset_id, output, ignore):
    """Run a command twice and classify the pair."""
    payload = {"command": command, "tagId": tag_id, "datasetId": dataset_id}
    payload.update(_comparison_payload(output, ignore))
    report = state.pipeline.verify(project_id, payload)
    state.emit(report, _verdict_text(report))


@cli.command()
@click.option("--project", "project_id", required=True)
@click.option("--request", "request_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--command", "command", required=True)
@click.option("--dataset", "dataset_id")
@click.option("--output", multiple=True)
@click.option("--ignore", multiple=True)
@pass_state
def configure(state, project_id, request_path, command, dataset_id, output, ignore):
    """Build the environment and run the experiment twice."""
    payload = {"request": _read_json(request_path), "command": command, "datasetId": dataset_id}
    payload.update(_comparison_payload(output, ignore))
    result = state.pipeline.configure(project_id, payload)
    state.emit(result, f"image {result['image']['tagId']}\n{_verdict_text(result['report'])}")


@cli.command()
@click.option("--project", "project_id", required=True)
@click.argument("run_a")
@click.argument("run_b")
@click.option("--output", multiple=True)
@click.option("--ignore", multiple=True)
@pass_state
def compare(state, project_id, run_a, run_b, output, ignore):
    """Compare two stored runs."""
    payload = {"runA": run_a, "runB": run_b}
    payload.update(_comparison_payload(output, ignore))
    report = state.pipeline.compare(project_id, payload)
    state.emit(report, _verdict_text(report))


@cli.command()
@click.option("--project", "project_id", required=True)
@click.option("--run", "run_id", required=True)
@click.option("--stdout", "stdout_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--files", "files_json", help='JSON object {"path": "<sha256>"}.')
@click.option("--output", multiple=True)
@click.option("--ignore", multiple=True)
@pass_state
def expect(state, project_id, run_id, stdout_path, files_json, output, ignore):
    """Compare a run with the expected results of the author."""
    expected = {}
    if stdout_path:
        expected["stdout"] = Path(stdout_path).read_text(encoding="utf-8")
    if files_json:
        expected["files"] = _json_option(files_json, "--files")
    payload = {"runId": run_id, "expected": expected or None}
    payload.update(_comparison_payload(output, ignore))
    report = state.pipeline.expect(project_id, payload)
    state.emit(report, _verdict_text(report))


@cli.command()
@click.option("--project", "project_id", required=True)
@click.option("--tag", "tag_id", required=True, type=int)
@click.option("--command", "commands", multiple=True, required=True, help="Repeatable, in order.")
@click.option("--out", type=click.Path(file_okay=False), help="Empty or missing destination directory.")
@click.option("--embed-image", is_flag=True, help="Save the image into the package.")
@click.option("--zip", "make_zip", is_flag=True, help="Also write a deterministic zip archive.")
@pass_state
def pack(state, project_id, tag_id, commands, out, embed_image, make_zip):
    """Export a reproducibility package."""
    payload = {
        "tagId": tag_id,
        "commands": list(commands),
        "out": out,
        "embedImage": embed_image,
        "zip": make_zip,
    }
    result = state.pipeline.package(project_id, payload)
    state.emit(result, result.get("archive", result["path"]))


@cli.command("check-package")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--replay", is_flag=True, help="Rebuild and run the package with the selected driver.")
@pass_state
def check_package(state, directory, replay):
    """Check the integrity of a package and optionally replay it."""
    if replay:
        result = state.pipeline.replay(directory)
        text = "\n".join(f"{item['exitCode']}  {item['command']}" for item in result["outcomes"])
        state.emit(result, text)
        return
    result = state.pipeline.check_package(directory)
    state.emit(result, f"package {result['project']['name']} verified")


@cli.command()
@click.option("--project", "project_id")
@click.option("--run", "run_id")
@click.option("--images", is_flag=True, help="List the images of --project.")
@pass_state
def show(state, project_id, run_id, images):
    """Print projects, a project, its images or one run."""
    if project_id is None:
        if run_id or images:
            raise ValidationError("--run and --images need --project")
        state.emit(state.pipeline.list_projects())
    elif run_id:
        state.emit(state.pipeline.get_run(project_id, run_id))
    elif images:
        state.emit(state.pipeline.list_images(project_id))
    else:
        state.emit(state.pipeline.get_project(project_id))


@cli.command()
@click.option("--host")
@click.option("--port", type=int)
@pass_state
def serve(state, host, port):
    """Start the HTTP service (waitress)."""
    # pylint: disable=import-outside-toplevel
    from waitress import serve as waitress_serve

    state.overrides.update({"host": host, "port": port})
    settings = state.settings
    logger.info("Serving on %s:%s", settings.host, settings.port)
    waitress_serve(create_app(settings), host=settings.host, port=settings.port)


def exit_code_for(error):
    """
    0 success, 2 NotFound/Validation, 1 anything else.
    """
    if isinstance(error, (NotFoundError, ValidationError)):
        return 2
    return 1


def cli_dispatch(argv=None):
    """
    Run the CLI on `argv` and return the exit code instead of exiting.
    """
    try:
        result = cli.main(args=argv, prog_name="repro", standalone_mode=False)
    except ReproError as e:
        logger.debug("Command failed", exc_info=True)
        click.echo(json.dumps(e.to_dict(), ensure_ascii=False), err=True)
        return exit_code_for(e)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted.", err=True)
        return 1
    return result if isinstance(result, int) else 0
