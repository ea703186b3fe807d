# -*- coding: utf-8 -*-
"""
Module: logging_setup.py

This module configures logging for the service and the command line. Both use
the same formatter, the same rotating log file and a console stream handler.

Functions:
- `set_log_level()`: Determines the log level based on the `LOG_LEVEL` environment
  variable, defaulting to `INFO` if not specified.
- `setup_file_handler()`: Rotating file handler writing `<LOG_FOLDER>/reprokit.log`.
- `setup_stream_handler()`: Console handler (stderr, so `--json` stdout stays clean).
- `create_log_folder()`: Creates the log folder specified in the `LOG_FOLDER`
  environment variable if it does not already exist, defaulting to `logs`.
- `configure_cli_logging(verbose)`: Attach handlers to the root logger for CLI use.

Environment Variables:
- `LOG_LEVEL`: The logging level (e.g., DEBUG, INFO, WARNING, ERROR).
- `LOG_FOLDER`: The folder where log files will be stored.

Log Format:
    `%(asctime)s %(levelname)s [%(filename)s:%(lineno)d] - %(message)s`
"""


import logging
import os
import sys

from logging.handlers import RotatingFileHandler


log_formatter = logging.Formatter(
    "%(asctime)s %(levelname)s [%(filename)s:%(lineno)d] - %(message)s"
)

LOG_FILE_NAME = "reprokit.log"


def set_log_level():
    """
    Resolve the log level from LOG_LEVEL.
    """
    log_level_env = os.getenv("LOG_LEVEL", "INFO").upper()
    log_levels = {
        "DEBUG": logging.DEBUG,
        "INFO": logging.INFO,
        "WARNING": logging.WARNING,
        "ERROR": logging.ERROR,
    }
    return log_levels.get(log_level_env, logging.INFO)


def get_log_folder():
    """
    Log folder from LOG_FOLDER, default `logs`.
    """
    return os.getenv("LOG_FOLDER", "logs")


def setup_file_handler():
    """
    Setup file handler.
    """
    log_file = os.path.join(get_log_folder(), LOG_FILE_NAME)
    file_handler = RotatingFileHandler(
        log_file, maxBytes=1024 * 1024, backupCount=5, encoding="utf-8"
    )
    file_handler.setLevel(set_log_level())
    file_handler.setFormatter(log_formatter)
    return file_handler


def setup_stream_handler(level=None):
    """
    Setup stream handler.
    """
    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setLevel(level if level is not None else set_log_level())
    stream_handler.setFormatter(log_formatter)
    return stream_handler


def create_log_folder():
    """
    Create the log folder if it does not exist.
    """
    log_folder = get_log_folder()
    if not os.path.exists(log_folder):
        os.makedirs(log_folder)
        return True
    return False


def configure_cli_logging(verbose=False):
    """
    Configure the root logger for command line use.
    Console output is WARNING unless verbose; the file log follows LOG_LEVEL.
    """
    root = logging.getLogger()
    root.setLevel(logging.DEBUG if verbose else set_log_level())
    for handler in list(root.handlers):
        root.removeHandler(handler)
    root.addHandler(setup_stream_handler(logging.DEBUG if verbose else logging.WARNING))
    try:
        create_log_folder()
        root.addHandler(setup_file_handler())
    except OSError as e:
        root.warning("File logging disabled: %s", e)
    return root
