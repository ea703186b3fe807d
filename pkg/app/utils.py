# -*- coding: utf-8 -*-
"""
Module: utils.py

Small helpers shared across the toolchain.

Functions:
- `is_sentry_enabled()`: True when the `SENTRY_DSN` environment variable is set.
- `is_truthy(value)`: Interpret request/config flags such as `"true"`, `"1"`,
  `True` (request payloads may send booleans as strings).
- `utc_now()`: Timezone-aware current UTC time as an ISO 8601 string.
- `new_id()`: Fresh opaque identifier.
- `download_file(url, destination)`: Stream a remote file to disk.
- `validate_json_against_json_schema(json_data, json_schema)`: Validate a
  payload, returning `(True, None)` or `(False, message)`.
- `load_json_schema(path)`: Read a bundled JSON schema.

Environment Variables:
- `SENTRY_DSN`: The Data Source Name for Sentry.
"""


import datetime
import json
import logging
import os
import uuid

import pytz
import requests

from jsonschema import validate
from jsonschema.exceptions import ValidationError as SchemaValidationError, SchemaError

from app.exceptions import NotFoundError, ReproError

logger = logging.getLogger(__name__)

TRUE_VALUES = {"true", "1", "yes", "on"}


def is_sentry_enabled():
    """
    Check if Sentry is enabled by verifying the presence of the SENTRY_DSN environment variable.
    """
    return bool(os.getenv("SENTRY_DSN"))


def is_truthy(value):
    """
    Interpret a boolean-ish flag.
    """
    if isinstance(value, bool):
        return value
    if value is None:
        return False
    return str(value).strip().lower() in TRUE_VALUES


def utc_now():
    """
    Current time in UTC, ISO 8601 formatted.
    """
    return datetime.datetime.now(pytz.utc).isoformat(timespec="seconds")


def new_id():
    """
    Opaque unique identifier.
    """
    return uuid.uuid4().hex


def download_file(url, destination, timeout=60):
    """
    Download a file from a URL to `destination`.
    """
    try:
        with requests.get(url, stream=True, timeout=timeout) as response:
            logger.debug("Download %s: %s", url, response.status_code)
            if response.status_code == 404:
                raise NotFoundError(f"remote file not found: {url}")
            if response.status_code != 200:
                raise ReproError(
                    f"remote fetch failed: {url} answered {response.status_code}"
                )
            with open(destination, "wb") as handle:
                for chunk in response.iter_content(chunk_size=64 * 1024):
                    handle.write(chunk)
        return destination
    except requests.exceptions.RequestException as e:
        logger.error("Request Error: %s", e)
        raise ReproError(f"remote fetch failed: {url}: {e}") from e


def validate_json_against_json_schema(json_data, json_schema):
    """
    Validate JSON data against a JSON schema.
    """
    try:
        validate(instance=json_data, schema=json_schema)
        return True, None
    except SchemaValidationError as e:
        location = "/".join(str(part) for part in e.absolute_path)
        return False, f"{location}: {e.message}" if location else e.message
    except SchemaError as e:
        logger.error("Schema Error: %s", e)
        return False, str(e)


def load_json_schema(path):
    """
    Load a JSON schema file.
    """
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)
