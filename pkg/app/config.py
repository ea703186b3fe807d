# -*- coding: utf-8 -*-
"""
Module: config.py

This module collects the toolchain configuration from environment variables
into an immutable `Settings` value. The `.env` file, if present, is loaded by
`load_environment()` before the lookup so local overrides work the same way for
the CLI and for the HTTP service.

Environment Variables:
- `REPRO_STORE_PATH`: Root directory of the project store (default `store`).
- `REPRO_DRIVER`: Engine driver, `docker` or `sandbox` (default `docker`).
- `REPRO_ENGINE_CLI`: Container engine executable (default `docker`).
- `REPRO_BASE_IMAGE`: Base image of generated specs (default `ubuntu:20.04`).
- `REPRO_CONSOLE_LIMIT`: Console capture cap in bytes (default 1 MiB).
- `REPRO_RUN_TIMEOUT`: Per-command timeout in seconds (default 3600).
- `REPRO_UPLOAD_LIMIT`: Maximum HTTP upload size in bytes (default 500 MiB).
- `REPRO_LANGUAGE_TABLE`: Override for the language/toolchain table.
- `REPRO_ALIAS_TABLE`: Override for the import-name to package alias table.
- `REPRO_COMPARE_STDERR`: Include stderr in console comparison (default false).
- `HOST`, `PORT`: Bind address of `serve`.

Usage:
    from app.config import load_settings
    settings = load_settings(store_path="/tmp/store", driver="sandbox")
"""

import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path

from dotenv import load_dotenv

from app.exceptions import ValidationError
from app.utils import is_truthy

DRIVERS = ("docker", "sandbox")


@dataclass(frozen=True)
class Settings:
    """
    Resolved configuration.
    """

    store_path: Path = Path("store")
    driver: str = "docker"
    engine_cli: str = "docker"
    base_image: str = "ubuntu:20.04"
    console_limit: int = 1024 * 1024
    run_timeout: int = 3600
    upload_limit: int = 500 * 1024 * 1024
    language_table: Path | None = None
    alias_table: Path | None = None
    compare_stderr: bool = False
    host: str = "127.0.0.1"
    port: int = 5000


def check_if_env_file_exists():
    """
    Check if .env file exists.
    """
    if not os.path.isfile(".env"):
        logging.debug(".env file not found")
        return False
    logging.debug(".env file found")
    return True


def load_environment():
    """
    Load the .env file into the process environment when present.
    """
    if check_if_env_file_exists():
        load_dotenv(".env", override=True)


def _optional_path(name):
    value = os.getenv(name)
    return Path(value) if value else None


def load_settings(**overrides):
    """
    Build `Settings` from the environment; keyword overrides (CLI flags) win.
    None-valued overrides are ignored.
    """
    settings = Settings(
        store_path=Path(os.getenv("REPRO_STORE_PATH", "store")),
        driver=os.getenv("REPRO_DRIVER", "docker").lower(),
        engine_cli=os.getenv("REPRO_ENGINE_CLI", "docker"),
        base_image=os.getenv("REPRO_BASE_IMAGE", "ubuntu:20.04"),
        console_limit=int(os.getenv("REPRO_CONSOLE_LIMIT", str(1024 * 1024))),
        run_timeout=int(os.getenv("REPRO_RUN_TIMEOUT", "3600")),
        upload_limit=int(os.getenv("REPRO_UPLOAD_LIMIT", str(500 * 1024 * 1024))),
        language_table=_optional_path("REPRO_LANGUAGE_TABLE"),
        alias_table=_optional_path("REPRO_ALIAS_TABLE"),
        compare_stderr=is_truthy(os.getenv("REPRO_COMPARE_STDERR", "false")),
        host=os.getenv("HOST", "127.0.0.1"),
        port=int(os.getenv("PORT", "5000")),
    )
    overrides = {key: value for key, value in overrides.items() if value is not None}
    if "store_path" in overrides:
        overrides["store_path"] = Path(overrides["store_path"])
    settings = replace(settings, **overrides)
    if settings.driver not in DRIVERS:
        raise ValidationError(f"unknown driver {settings.driver!r}; use one of {DRIVERS}")
    return settings
