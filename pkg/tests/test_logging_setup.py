# -*- coding: utf-8 -*-
"""
This module contains tests for the logging setup.
"""

import logging
from logging.handlers import RotatingFileHandler

import pytest

from app.logging_setup import (
    LOG_FILE_NAME,
    configure_cli_logging,
    create_log_folder,
    set_log_level,
    setup_file_handler,
    setup_stream_handler,
)


@pytest.fixture
def restore_root_logger():
    """
    Fixture to restore the root logger after CLI logging was configured.
    """
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield root
    for handler in list(root.handlers):
        root.removeHandler(handler)
        if handler not in handlers:
            handler.close()
    for handler in handlers:
        root.addHandler(handler)
    root.setLevel(level)


def test_create_log_folder(log_folder):
    """
    Test that create_log_folder creates the folder once.
    """
    assert not log_folder.exists()
    assert create_log_folder() is True
    assert log_folder.is_dir()
    assert create_log_folder() is False


@pytest.mark.parametrize(
    "value, level",
    [("DEBUG", logging.DEBUG), ("warning", logging.WARNING), ("ERROR", logging.ERROR), ("chatty", logging.INFO)],
)
def test_set_log_level(monkeypatch, value, level):
    monkeypatch.setenv("LOG_LEVEL", value)
    assert set_log_level() == level


def test_file_handler(log_folder):
    create_log_folder()
    handler = setup_file_handler()
    try:
        assert isinstance(handler, RotatingFileHandler)
        assert handler.baseFilename == str(log_folder / LOG_FILE_NAME)
    finally:
        handler.close()


def test_stream_handler_level():
    assert setup_stream_handler(logging.WARNING).level == logging.WARNING


def test_cli_logging(restore_root_logger, log_folder, capsys):
    """
    Test that CLI logging keeps info off the console but writes it to the log file.
    """
    root = configure_cli_logging(verbose=False)
    logging.getLogger("app.cli").info("built image 100")
    logging.getLogger("app.cli").warning("sandbox skips provisioning")
    for handler in root.handlers:
        handler.flush()
    captured = capsys.readouterr()
    assert "built image 100" not in captured.err
    assert "sandbox skips provisioning" in captured.err
    assert captured.out == ""
    assert "built image 100" in (log_folder / LOG_FILE_NAME).read_text(encoding="utf-8")


def test_cli_logging_verbose(restore_root_logger):
    root = configure_cli_logging(verbose=True)
    assert root.level == logging.DEBUG
