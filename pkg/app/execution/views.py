# -*- coding: utf-8 -*-
"""
Module: views.py

Routes of the `execution` blueprint.

Routes:
- `POST /projects/<id>/runs`: `{"command", "tagId", "datasetId"}`.
- `GET /projects/<id>/runs`, `GET /projects/<id>/runs/<run_id>`.
- `POST /projects/<id>/verify`: double run and verdict;
  `{"command", "tagId", "datasetId", "outputSpec", "ignorePatterns"}`.
- `POST /projects/<id>/configure`: build and double run;
  `{"request": {...}, "command", "datasetId", "outputSpec", "ignorePatterns"}`.
- `POST /projects/<id>/compare`: `{"runA", "runB", "outputSpec", "ignorePatterns"}`.
- `POST /projects/<id>/expected`: `{"runId", "expected": {"stdout", "files"}}`.
"""

from flask import Blueprint, jsonify

from app.decorators import conditional_produces, json_body
from app.extensions import current_pipeline

blueprint = Blueprint("execution", __name__)


@blueprint.route("/projects/<project_id>/runs", methods=["POST"])
@conditional_produces("application/json")
@json_body()
def run(project_id, payload):
    """
    Run one command on a fresh container.
    ---
    tags:
      - execution
    parameters:
      - in: body
        name: body
        schema:
          type: object
          required: [command, tagId]
          properties:
            command: {type: string}
            tagId: {type: integer}
            datasetId: {type: string}
    responses:
      200:
        description: The run record with console output and changed files.
      404:
        description: Unknown project, image or dataset.
      422:
        description: Empty command.
    """
    return jsonify(current_pipeline().run(project_id, payload))


@blueprint.route("/projects/<project_id>/runs", methods=["GET"])
@conditional_produces("application/json")
def list_runs(project_id):
    """
    Run records of the project, without console output.
    """
    return jsonify(current_pipeline().list_runs(project_id))


@blueprint.route("/projects/<project_id>/runs/<run_id>", methods=["GET"])
@conditional_produces("application/json")
def get_run(project_id, run_id):
    """
    One run record with its console output.
    """
    return jsonify(current_pipeline().get_run(project_id, run_id))


@blueprint.route("/projects/<project_id>/verify", methods=["POST"])
@conditional_produces("application/json")
@json_body()
def verify(project_id, payload):
    """
    Run a command twice and classify the pair.
    ---
    tags:
      - execution
    responses:
      200:
        description: verdict, consoleMatch, fileDiffs, runs, compared, consoleDiff
    """
    return jsonify(current_pipeline().verify(project_id, payload))


@blueprint.route("/projects/<project_id>/configure", methods=["POST"])
@conditional_produces("application/json")
@json_body()
def configure(project_id, payload):
    """
    Build the environment and verify the experiment in one call.
    """
    return jsonify(current_pipeline().configure(project_id, payload))


@blueprint.route("/projects/<project_id>/compare", methods=["POST"])
@conditional_produces("application/json")
@json_body()
def compare(project_id, payload):
    """
    Compare two stored runs.
    """
    return jsonify(current_pipeline().compare(project_id, payload))


@blueprint.route("/projects/<project_id>/expected", methods=["POST"])
@conditional_produces("application/json")
@json_body()
def expect(project_id, payload):
    """
    Compare a run with expected results.
    """
    return jsonify(current_pipeline().expect(project_id, payload))
