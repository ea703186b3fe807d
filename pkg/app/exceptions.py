# -*- coding: utf-8 -*-
"""
Module: exceptions.py

This module defines the exceptions raised by the toolchain. Every error raised
by an inner module is a `ReproError` carrying a message, the HTTP status code
to answer with, and one `ErrorCode` from the public error vocabulary.

Classes:
- `ErrorCode`: The public error codes (NotFound, Validation, EngineFailure,
  StageFailure, Storage).
- `ReproError`: Base exception; `to_dict()` renders the ApiError JSON shape.
- `NotFoundError`, `ValidationError`, `NotSupportedError`, `EngineFailure`,
  `StageFailure`, `StorageError`: One subclass per failure family.

Usage:
    raise NotFoundError(f"no such image: {tag_id}")

The HTTP layer (`app.error_handlers`) and the CLI (`app.cli`) both translate
these exceptions; the HTTP layer into a JSON body with the matching status, the
CLI into an exit code.
"""

from enum import Enum


class ErrorCode(str, Enum):
    """
    Public error codes.
    """

    NOT_FOUND = "NotFound"
    VALIDATION = "Validation"
    ENGINE_FAILURE = "EngineFailure"
    STAGE_FAILURE = "StageFailure"
    STORAGE = "Storage"


class ReproError(Exception):
    """
    Base exception for all toolchain errors.
    """

    code = ErrorCode.STAGE_FAILURE
    default_status_code = 500

    def __init__(self, message, status_code=None, stage=None):
        super().__init__(message)
        self.message = message
        # the status code to be returned in the response
        self.status_code = status_code or self.default_status_code
        self.stage = stage

    def to_dict(self):
        """
        Render the error as the ApiError JSON shape.
        """
        return {
            "error": {
                "code": self.code.value,
                "message": self.message,
                "stage": self.stage,
            }
        }


class NotFoundError(ReproError):
    """
    A project, file, image, run or dataset does not exist.
    """

    code = ErrorCode.NOT_FOUND
    default_status_code = 404


class ValidationError(ReproError):
    """
    Input violates a precondition.
    """

    code = ErrorCode.VALIDATION
    default_status_code = 422


class NotSupportedError(ValidationError):
    """
    The requested language or feature is not supported.
    """


class EngineFailure(ReproError):
    """
    The container engine (or sandbox) failed to build or run.
    """

    code = ErrorCode.ENGINE_FAILURE
    default_status_code = 502

    def __init__(self, message, status_code=None, stage=None, log=""):
        super().__init__(message, status_code=status_code, stage=stage)
        self.log = log


class StageFailure(ReproError):
    """
    A pipeline stage failed; wraps the inner error and names the stage.
    """

    code = ErrorCode.STAGE_FAILURE
    default_status_code = 500

    def __init__(self, stage, cause):
        super().__init__(f"{stage} stage failed: {cause}", stage=stage)
        self.cause = cause


class StorageError(ReproError):
    """
    Reading or writing the project store failed.
    """

    code = ErrorCode.STORAGE
    default_status_code = 500
