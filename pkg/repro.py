# -*- coding: utf-8 -*-
"""
Module: repro.py

Command line entry point.

Usage:
    python repro.py --help
    python repro.py init --name E3 --type script
"""

import sys

from app.cli import cli_dispatch

if __name__ == "__main__":
    sys.exit(cli_dispatch(sys.argv[1:]))
