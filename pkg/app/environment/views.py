# -*- coding: utf-8 -*-
"""
Module: views.py

Routes of the `environment` blueprint. Request bodies use the environment
request fields `languages`, `languagesVersion`, `commandsToAdd`,
`hasRequirementsFile` (plus `seeds` and `database`).

Routes:
- `GET|POST /projects/<id>/infer`: draft request, language profile and
  dependency graph; POST `{"writeRequirements": true}` also writes an
  inferred `requirements.txt`.
- `POST /projects/<id>/dockerfile`: render the container specification
  without building.
- `POST /projects/<id>/environment`: build the image; returns its `tagId`.
- `GET /projects/<id>/images`: images built for the project.
"""

from flask import Blueprint, jsonify

from app.decorators import conditional_produces, json_body
from app.extensions import current_pipeline
from app.utils import is_truthy

blueprint = Blueprint("environment", __name__)


@blueprint.route("/projects/<project_id>/infer", methods=["GET", "POST"])
@conditional_produces("application/json")
@json_body(optional=True)
def infer(project_id, payload):
    """
    Infer languages and dependencies and draft an environment request.
    ---
    tags:
      - environment
    responses:
      200:
        description: request, profile, dependencies, requirementsFile, inferredRequirements
    """
    write = is_truthy(payload.get("writeRequirements", False))
    return jsonify(current_pipeline().infer(project_id, write))


@blueprint.route("/projects/<project_id>/dockerfile", methods=["POST"])
@conditional_produces("application/json")
@json_body()
def preview_environment(project_id, payload):
    """
    Render the container specification of an environment request.
    ---
    tags:
      - environment
    parameters:
      - in: body
        name: body
        schema:
          type: object
          required: [languages]
          properties:
            languages: {type: array, items: {type: string}}
            languagesVersion: {type: object}
            commandsToAdd: {type: array, items: {type: string}}
            hasRequirementsFile: {type: string}
    responses:
      200:
        description: dockerfile, specDigest, sidecars, network, environment
      422:
        description: Validation error.
    """
    return jsonify(current_pipeline().preview_environment(project_id, payload))


@blueprint.route("/projects/<project_id>/environment", methods=["POST"])
@conditional_produces("application/json")
@json_body()
def build_environment(project_id, payload):
    """
    Build the environment image of an environment request.
    ---
    tags:
      - environment
    parameters:
      - in: body
        name: body
        schema:
          type: object
          required: [languages]
          properties:
            languages: {type: array, items: {type: string}}
            languagesVersion: {type: object}
            commandsToAdd: {type: array, items: {type: string}}
            hasRequirementsFile: {type: string}
    responses:
      200:
        description: tagId, engineTag, specDigest, dockerfile
      422:
        description: Validation error.
      502:
        description: The container engine failed.
    """
    return jsonify(current_pipeline().build_environment(project_id, payload))


@blueprint.route("/projects/<project_id>/images", methods=["GET"])
@conditional_produces("application/json")
def list_images(project_id):
    """
    Images built for the project.
    """
    return jsonify(current_pipeline().list_images(project_id))
