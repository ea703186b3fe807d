# -*- coding: utf-8 -*-
"""
Version of the reprokit toolchain, recorded in package manifests.
"""

__version__ = "1.0.0"
