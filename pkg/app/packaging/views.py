# -*- coding: utf-8 -*-
"""
Module: views.py

Routes of the `packaging` blueprint.

Routes:
- `POST /projects/<id>/package`: `{"tagId", "commands": [...], "embedImage",
  "zip"}`; the package is written under the project's `packages/` folder.
- `GET /projects/<id>/packages/<package_id>.zip`: download a package archive.
"""

from flask import Blueprint, jsonify, send_file

from app.decorators import conditional_produces, json_body
from app.exceptions import ValidationError
from app.extensions import current_pipeline

blueprint = Blueprint("packaging", __name__)


@blueprint.route("/projects/<project_id>/package", methods=["POST"])
@conditional_produces("application/json")
@json_body()
def package(project_id, payload):
    """
    Export a reproducibility package of an image and its run commands.
    ---
    tags:
      - packaging
    parameters:
      - in: body
        name: body
        schema:
          type: object
          required: [tagId, commands]
          properties:
            tagId: {type: integer}
            commands: {type: array, items: {type: string}}
            embedImage: {type: boolean}
            zip: {type: boolean}
    responses:
      200:
        description: path, manifest and (with zip) archive
    """
    if "out" in payload:
        raise ValidationError("the package location is chosen by the service")
    return jsonify(current_pipeline().package(project_id, payload))


@blueprint.route("/projects/<project_id>/packages/<package_id>.zip", methods=["GET"])
def download_package(project_id, package_id):
    """
    Download the zip archive of a package.
    """
    archive = current_pipeline().package_archive(project_id, package_id)
    return send_file(archive, mimetype="application/zip", as_attachment=True, download_name=archive.name)
