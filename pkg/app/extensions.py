# -*- coding: utf-8 -*-
"""
Module: extensions.py

This module initializes the extensions of the Flask application: Cross-Origin
Resource Sharing (CORS) through Flask-CORS, and the accessor for the pipeline
instance the application factory stores in `app.extensions`.

Environment Variables:
- `ALLOWED_ORIGINS`: Comma-separated list of origins allowed for CORS. Example:
  ALLOWED_ORIGINS="http://example.com,http://anotherdomain.com"

Example:
    from app.extensions import cors, current_pipeline
    cors.init_app(app)
    pipeline = current_pipeline()
"""


import os

from flask import current_app
from flask_cors import CORS

PIPELINE_EXTENSION = "reprokit"

# Read allowed origins from environment variable
allowed_origins = [origin for origin in os.getenv("ALLOWED_ORIGINS", "").split(",") if origin]

# Allow CORS
cors = CORS(origins=allowed_origins)


def current_pipeline():
    """
    The pipeline of the running application.
    """
    return current_app.extensions[PIPELINE_EXTENSION]
