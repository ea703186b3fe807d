# -*- coding: utf-8 -*-
"""
Module: views.py

Routes of the `projects` blueprint: projects, their file trees, datasets and
seed declarations.

Routes:
- `POST /projects`: create a project (`name`, `description`, `projectType`,
  `authors`).
- `GET /projects`, `GET /projects/<id>`: list, show (with file tree).
- `POST /projects/<id>/files`: multipart upload (`file`; a `.zip` is unpacked
  unless `unpack=false`; `path` names the tree path of a single file) or a
  JSON remote source `{"kind": "git"|"doi", "url": ..., "ref": ...}`.
- `GET /projects/<id>/files/<path>`: raw file content.
- `PATCH /projects/<id>/files/<path>`: `{"action": "EditFile"|"CreateFile"|
  "CreateFolder", "content": "<text>"}` (default action EditFile).
- `DELETE /projects/<id>/files/<path>`: delete a file or folder.
- `PUT /projects/<id>/dataset`: `{"root", "label", "external", "id"}`.
- `PUT /projects/<id>/seeds`: `{"seeds": [{"location", "variable", "value"}]}`.

Remote sources are limited to git and DOI URLs; paths on the server's disk
are only accepted by the CLI.
"""

import tempfile
from pathlib import Path

from flask import Blueprint, Response, jsonify, request

from app.decorators import conditional_produces, json_body
from app.exceptions import ValidationError
from app.extensions import current_pipeline
from app.projects.ingest import SingleFile, ZipArchive, source_from_dict
from app.utils import is_truthy

REMOTE_KINDS = ("git", "doi")

blueprint = Blueprint("projects", __name__)


@blueprint.route("/projects", methods=["POST"])
@conditional_produces("application/json")
@json_body()
def create_project(payload):
    """
    Create a project.
    ---
    tags:
      - projects
    parameters:
      - in: body
        name: body
        schema:
          type: object
          required: [name]
          properties:
            name: {type: string}
            description: {type: string}
            projectType: {type: string, enum: [Script, ScriptWithDatabase, AI]}
            authors: {type: array, items: {type: string}}
    responses:
      201:
        description: The new project.
      422:
        description: Validation error.
    """
    project = current_pipeline().create_project(
        payload.get("name"),
        payload.get("description", ""),
        payload.get("projectType", "Script"),
        payload.get("authors") or (),
    )
    return jsonify(project), 201


@blueprint.route("/projects", methods=["GET"])
@conditional_produces("application/json")
def list_projects():
    """
    List projects.
    """
    return jsonify(current_pipeline().list_projects())


@blueprint.route("/projects/<project_id>", methods=["GET"])
@conditional_produces("application/json")
def get_project(project_id):
    """
    Show a project with its file tree.
    """
    return jsonify(current_pipeline().get_project(project_id))


def _upload_source(upload):
    name = upload.filename or ""
    if name.lower().endswith(".zip") and is_truthy(request.form.get("unpack", "true")):
        with tempfile.NamedTemporaryFile(prefix="reprokit-upload-", suffix=".zip", delete=False) as handle:
            upload.save(handle)
        return ZipArchive(Path(handle.name))
    path = request.form.get("path") or name
    if not path:
        raise ValidationError("uploaded file needs a name or a path field")
    return SingleFile(path, upload.read())


@blueprint.route("/projects/<project_id>/files", methods=["POST"])
@conditional_produces("application/json")
def add_files(project_id):
    """
    Add files by upload or from a remote source.
    ---
    tags:
      - projects
    consumes:
      - multipart/form-data
      - application/json
    responses:
      200:
        description: The added or updated nodes.
    """
    upload = request.files.get("file")
    if upload is not None:
        source = _upload_source(upload)
        try:
            return jsonify(current_pipeline().add_files(project_id, source))
        finally:
            if isinstance(source, ZipArchive):
                source.path.unlink(missing_ok=True)
    payload = request.get_json(silent=True)
    if not isinstance(payload, dict):
        raise ValidationError("send a multipart 'file' or a JSON remote source")
    if str(payload.get("kind", "")).lower() not in REMOTE_KINDS:
        raise ValidationError(f"remote source kind must be one of {REMOTE_KINDS}")
    if not payload.get("url"):
        raise ValidationError("url is required")
    return jsonify(current_pipeline().add_files(project_id, source_from_dict(payload, remote_only=True)))


@blueprint.route("/projects/<project_id>/files/<path:entry_path>", methods=["GET"])
def read_file(project_id, entry_path):
    """
    Raw content of a file.
    """
    content = current_pipeline().read_file(project_id, entry_path)
    return Response(content, mimetype="application/octet-stream")


@blueprint.route("/projects/<project_id>/files/<path:entry_path>", methods=["PATCH"])
@conditional_produces("application/json")
@json_body(optional=True)
def modify_entry(project_id, entry_path, payload):
    """
    Create or edit one entry of the file tree.
    """
    action = payload.get("action", "EditFile")
    if str(action).lower() == "delete":
        raise ValidationError("use DELETE to remove entries")
    content = payload.get("content")
    if content is not None and not isinstance(content, str):
        raise ValidationError("content must be a string")
    return jsonify(current_pipeline().modify_entry(project_id, action, entry_path, content))


@blueprint.route("/projects/<project_id>/files/<path:entry_path>", methods=["DELETE"])
@conditional_produces("application/json")
def delete_entry(project_id, entry_path):
    """
    Delete a file or a folder with its contents.
    """
    return jsonify(current_pipeline().modify_entry(project_id, "Delete", entry_path))


@blueprint.route("/projects/<project_id>/dataset", methods=["PUT"])
@conditional_produces("application/json")
@json_body()
def set_dataset(project_id, payload):
    """
    Associate a dataset with the project.
    """
    return jsonify(current_pipeline().set_dataset(project_id, payload))


@blueprint.route("/projects/<project_id>/seeds", methods=["PUT"])
@conditional_produces("application/json")
@json_body()
def set_seeds(project_id, payload):
    """
    Declare the seeds used by the project's code.
    """
    return jsonify(current_pipeline().set_seeds(project_id, payload.get("seeds")))
