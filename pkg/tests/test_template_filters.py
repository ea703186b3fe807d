# -*- coding: utf-8 -*-
"""
This module contains tests for template filters.
"""

import shlex

import pytest
from jinja2 import Environment

from app.template_filters import batch_quote, register_template_filters, shell_quote


@pytest.fixture
def env():
    """Fixture to create a Jinja2 environment with the filters registered."""
    return register_template_filters(Environment())


@pytest.mark.parametrize(
    "value",
    ["make", "g++ -O3 ./src/bbfs_node.cpp -o out", "echo \"$HOME\" > 'x y'", "", "it's"],
)
def test_shell_quote_round_trips(value):
    """Test that a quoted command is read back as one shell word."""
    assert shlex.split(shell_quote(value)) == [value]


def test_batch_quote_escapes():
    """Test escaping of double quotes and percent signs for cmd.exe."""
    assert batch_quote('say "hi" 100%') == '"say \\"hi\\" 100%%"'
    assert batch_quote("ls") == '"ls"'


def test_filters_registered(env):
    """Test that the filters are usable from templates."""
    template = env.from_string("run_step {{ command|shell_quote }} / {{ command|batch_quote }}")
    assert template.render(command="mvn package") == "run_step 'mvn package' / \"mvn package\""
