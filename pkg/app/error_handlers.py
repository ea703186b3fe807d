# -*- coding: utf-8 -*-
"""
Module: error_handlers.py

This module defines and registers custom error handlers for the Flask
application. Every error leaves the service in the ApiError shape:

{
    "error": {"code": "<ErrorCode>", "message": "<text>", "stage": <stage or null>}
}

Functions:
- `register_error_handlers(app)`: Registers the handler for toolchain errors
  (`ReproError` and subclasses, which carry their own status) and for plain
  HTTP errors.

Error Handlers:
- `ReproError`: status from the exception (404, 422, 500, 502).
- `400`, `401`, `403`, `405`, `406`, `413`, `415`, `429`: Validation.
- `404`: NotFound.
- `500`, `503`: StageFailure; unexpected exceptions are reported to Sentry
  when it is enabled.
"""

import logging

from flask import jsonify

from app.exceptions import ErrorCode, ReproError
from app.utils import is_sentry_enabled

logger = logging.getLogger(__name__)

HTTP_ERRORS = {
    400: (ErrorCode.VALIDATION, "Bad request"),
    401: (ErrorCode.VALIDATION, "Unauthorized"),
    403: (ErrorCode.VALIDATION, "Forbidden"),
    404: (ErrorCode.NOT_FOUND, "Page not found"),
    405: (ErrorCode.VALIDATION, "Method not allowed"),
    406: (ErrorCode.VALIDATION, "Not acceptable, request application/json"),
    413: (ErrorCode.VALIDATION, "Upload too large"),
    415: (ErrorCode.VALIDATION, "Unsupported media type"),
    429: (ErrorCode.VALIDATION, "Too many requests"),
    500: (ErrorCode.STAGE_FAILURE, "Internal server error"),
    503: (ErrorCode.STAGE_FAILURE, "Service unavailable"),
}


def api_error(code, message, status, stage=None):
    body = {"error": {"code": code.value, "message": message, "stage": stage}}
    return jsonify(body), status


def _capture(error):
    if is_sentry_enabled():
        # pylint: disable=import-outside-toplevel
        import sentry_sdk

        sentry_sdk.capture_exception(error)


def register_error_handlers(app):
    """
    Register error handlers for the application
    """

    @app.errorhandler(ReproError)
    def repro_error(error):
        if error.status_code >= 500:
            logger.error("%s: %s", error.code.value, error.message)
            _capture(error)
        else:
            logger.info("%s: %s", error.code.value, error.message)
        return jsonify(error.to_dict()), error.status_code

    def http_handler(status, code, message):
        def handler(error):
            if status == 500:
                _capture(getattr(error, "original_exception", None) or error)
            return api_error(code, f"{status} Error: {message}", status)

        return handler

    for status, (code, message) in HTTP_ERRORS.items():
        app.register_error_handler(status, http_handler(status, code, message))
