# -*- coding: utf-8 -*-
"""
Module: decorators.py

Custom decorators for the Flask views.

Decorators:
- `conditional_produces`: Enforces content negotiation unless
  `ENFORCE_CONTENT_NEGOTIATION` is false.
- `json_body`: Passes the JSON object of the request to the view as
  `payload`; a missing or malformed body is a Validation error.

Dependencies:
- Flask
- Flask-Negotiate
"""

import logging
import os

from functools import wraps
from flask import request
from flask_negotiate import produces

from app.exceptions import ValidationError

# content negotiation toggler
ENFORCE_CONTENT_NEGOTIATION = (
    os.getenv("ENFORCE_CONTENT_NEGOTIATION", "True").lower() == "true"
)


def conditional_produces(mime_type):
    """
    A decorator to conditionally enforce content negotiation based on the
    `ENFORCE_CONTENT_NEGOTIATION` environment variable.
    """

    def decorator(func):
        if ENFORCE_CONTENT_NEGOTIATION:
            return produces(mime_type)(func)
        return func

    return decorator


def json_body(optional=False):
    """
    Parse the request body as a JSON object.
    @json_body()            # body required
    @json_body(optional=True)  # empty body means {}
    """

    def decorator(func):
        @wraps(func)
        def wrapped(*args, **kwargs):
            payload = request.get_json(silent=True)
            if payload is None:
                if optional and not request.get_data():
                    payload = {}
                else:
                    logging.debug("Rejected body of %s", request.path)
                    raise ValidationError("request body must be a JSON object")
            if not isinstance(payload, dict):
                raise ValidationError("request body must be a JSON object")
            return func(*args, payload=payload, **kwargs)

        return wrapped

    return decorator
