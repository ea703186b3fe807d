# -*- coding: utf-8 -*-
"""
Module: views.py

Public routes of the service: a service description at `/` and a health check
at `/ping`.

Blueprint:
- `blueprint`: The public blueprint.

Routes:
- `/`: Name, version, driver and the enabled endpoint groups, as JSON.
- `/ping`: A health check endpoint for monitoring the application's status.
"""


from flask import Blueprint, current_app, jsonify

from app.version import __version__

blueprint = Blueprint("public", __name__)


@blueprint.route("/", methods=["GET"])
def index_route():
    """
    Describe the running service.
    ---
    tags:
      - public
    responses:
      200:
        description: Service name, version and configuration summary.
    """
    settings = current_app.config["REPRO_SETTINGS"]
    return jsonify(
        {
            "name": "reprokit",
            "version": __version__,
            "driver": settings.driver,
            "baseImage": settings.base_image,
            "blueprints": sorted(name for name in current_app.blueprints if name != "flasgger"),
            "apidocs": "/apidocs/",
        }
    )


@blueprint.route("/ping", methods=["HEAD", "GET"])
def ping_route():
    """
    Health check endpoint.
    """
    return "OK"
