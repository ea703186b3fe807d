# -*- coding: utf-8 -*-
"""
Module: __init__.py

This module builds the Flask application of the reproducibility service. It
sets up the app's environment, logging, extensions, blueprints, Swagger UI,
error handling and security headers, and attaches the `Pipeline` every view
delegates to.

Main Features:
- **Environment Management**:
  - Loads environment variables from `.env` using `dotenv` (see `app.config`).
  - Resolves an immutable `Settings` value unless one is passed in.

- **Logging**:
  - Configures file-based logging with rotation and console logging.

- **Extensions and Middleware**:
  - Registers CORS, error handlers and the pipeline (`app.extensions["reprokit"]`).
  - Times every request and sets clickjacking and content-security headers.

- **Blueprints**:
  - Registers the public blueprint, then the blueprints listed in
    `ENABLED_BLUEPRINTS` (default: all four functional areas).

- **Swagger UI**:
  - Documents the JSON endpoints at `/apidocs`.

Environment Variables:
- `ENABLED_BLUEPRINTS`: Comma-separated list of blueprints to load.
- `ALLOWED_SOURCES`: Sources allowed to frame the service.
- `SENTRY_DSN`: The DSN for Sentry integration (optional).
- `LOG_LEVEL`, `LOG_FOLDER`: Logging.
- `REPRO_*`: Toolchain settings, see `app.config`.

Example:
    from app import create_app
    app = create_app()
"""


import logging
import os
import sys
import time

from flask import Flask, g, Response
from flasgger import Swagger

from app.config import load_environment, load_settings
from app.extensions import cors, PIPELINE_EXTENSION
from app.pipeline import Pipeline
from app.public.views import blueprint as public_blueprint
from app.version import __version__
from .error_handlers import register_error_handlers
from .logging_setup import (
    setup_file_handler,
    setup_stream_handler,
    create_log_folder,
)
from .utils import is_sentry_enabled

DEFAULT_BLUEPRINTS = "projects,environment,execution,packaging"


def init_sentry():
    """
    Initialize Sentry if enabled.
    """
    if not is_sentry_enabled():
        return False
    # pylint: disable=import-outside-toplevel
    import sentry_sdk

    sentry_sdk.init(
        dsn=os.getenv("SENTRY_DSN"),
        traces_sample_rate=1.0,
        release=f"reprokit@{__version__}",
    )
    return True


def create_app(settings=None, pipeline=None):
    """
    Create a Flask app serving the pipeline built from `settings`.
    """
    load_environment()
    settings = settings or load_settings()
    init_sentry()

    flask_app = Flask(__name__)
    flask_app.config["MAX_CONTENT_LENGTH"] = settings.upload_limit
    flask_app.config["REPRO_SETTINGS"] = settings
    flask_app.json.sort_keys = False

    configure_logger(flask_app)
    register_extensions(flask_app, pipeline or Pipeline(settings))
    register_error_handlers(flask_app)
    register_blueprints(flask_app)
    register_request_hooks(flask_app)
    register_swagger(flask_app)
    flask_app.logger.info(
        "reprokit %s ready (store %s, driver %s)",
        __version__,
        settings.store_path,
        settings.driver,
    )
    return flask_app


def configure_logger(flask_app):
    """
    Configure loggers.
    """
    try:
        create_log_folder()
        flask_app.logger.addHandler(setup_file_handler())
        flask_app.logger.addHandler(setup_stream_handler())
    except OSError as e:
        flask_app.logger.warning("File logging disabled: %s", e)


def register_extensions(flask_app, pipeline):
    """
    Register extensions with the app.
    """
    cors.init_app(flask_app)
    flask_app.extensions[PIPELINE_EXTENSION] = pipeline


def register_blueprints(flask_app) -> None:
    """
    Register blueprints with the app.
    """
    flask_app.register_blueprint(public_blueprint)

    enabled_blueprints = os.getenv("ENABLED_BLUEPRINTS", DEFAULT_BLUEPRINTS)
    for blueprint_name in filter(None, (name.strip() for name in enabled_blueprints.split(","))):
        try:
            blueprint = __import__(f"app.{blueprint_name}.views", fromlist=[""])
            flask_app.register_blueprint(blueprint.blueprint)
            flask_app.logger.debug("Registered blueprint: %s", blueprint_name)
        except ImportError as e:
            flask_app.logger.error("Failed to import blueprint %s: %s", blueprint_name, e)
        except (AttributeError, TypeError) as e:
            flask_app.logger.error("Invalid blueprint %s: %s", blueprint_name, e)
            sys.exit("Error: registering blueprints")

    for rule in flask_app.url_map.iter_rules():
        flask_app.logger.debug("%s -> %s", rule.rule, rule.endpoint)


def register_swagger(flask_app):
    """
    Register the Swagger UI.
    """
    swagger_config = {
        "swagger": "2.0",
        "uiversion": 3,
        "headers": [],
        "specs": [
            {
                "endpoint": "apispec",
                "route": "/apispec.json",
                "rule_filter": lambda _: True,
                "model_filter": lambda _: True,
            }
        ],
        "static_url_path": "/flasgger_static",
        "swagger_ui": True,
        "specs_route": "/apidocs/",
    }
    template = {
        "info": {
            "title": "reprokit",
            "description": "Build, run, verify and package reproducible experiments.",
            "version": __version__,
        }
    }
    return Swagger(flask_app, config=swagger_config, template=template)


def register_request_hooks(flask_app):
    """
    Request timing and security headers.
    """
    flask_app.before_request(before_request)
    flask_app.after_request(log_request_time)
    flask_app.after_request(apply_clickjacking_protection)
    flask_app.after_request(apply_csp)


def before_request():
    """
    Set the start time of the request
    """
    g.request_start_time = time.time()
    g.request_time = lambda: f"{time.time() - g.request_start_time:.5f}s"


def log_request_time(response):
    if "request_time" in g:
        logging.getLogger(__name__).debug("Request served in %s", g.request_time())
    return response


def apply_clickjacking_protection(response):
    """
    Apply clickjacking protection to all responses
    """
    # env var ALLOWED_SOURCES can be set to allow framing from specific sources
    allowed_sources = os.getenv("ALLOWED_SOURCES")
    if allowed_sources:
        response.headers["X-Frame-Options"] = f"ALLOW-FROM {allowed_sources}"
    else:
        response.headers["X-Frame-Options"] = "SAMEORIGIN"
    # Prevent MIME sniffing
    response.headers["X-Content-Type-Options"] = "nosniff"
    return response


def apply_csp(response: Response) -> Response:
    """
    Apply a Content Security Policy to all responses. JSON endpoints load
    nothing; the Swagger UI only needs its own bundled assets.
    """
    frame_ancestors = os.getenv("ALLOWED_SOURCES") or "'self'"
    csp = (
        "default-src 'self'; "
        "script-src 'self' 'unsafe-inline'; "
        "style-src 'self' 'unsafe-inline'; "
        "img-src 'self' data:; "
        f"frame-ancestors {frame_ancestors}; "
        "object-src 'none'; "
        "connect-src 'self'; "
        "base-uri 'self'; "
        "form-action 'self';"
    )
    response.headers["Content-Security-Policy"] = csp
    return response
