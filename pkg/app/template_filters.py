# -*- coding: utf-8 -*-
"""
Module: template_filters.py

This module defines and registers the custom Jinja2 filters used to render the
run scripts of reproducibility packages.

Functions:
- `register_template_filters(env)`: Registers all custom filters with a Jinja2
  environment (or a Flask application's `jinja_env`).
- `shell_quote(value)`: Quote a value as a single POSIX shell word.
- `batch_quote(value)`: Quote a value as a single argument in a Windows batch
  file.

Example:
    run_step {{ command|shell_quote }}
    call :run_step {{ command|batch_quote }}
"""

import shlex


def shell_quote(value):
    """
    POSIX shell quoting.
    """
    return shlex.quote(str(value))


def batch_quote(value):
    """
    Windows batch quoting: inner double quotes are backslash-escaped for the
    engine CLI's argument parser and `%` is doubled for cmd.exe.
    """
    text = str(value).replace('"', '\\"').replace("%", "%%")
    return f'"{text}"'


def register_template_filters(env):
    """
    Register custom template filters.
    """
    env.filters["shell_quote"] = shell_quote
    env.filters["batch_quote"] = batch_quote
    return env
