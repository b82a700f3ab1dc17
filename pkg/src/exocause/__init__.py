"""Cause-effect direction inference by bootstrap tests of exogeneity."""

__version__ = "0.1.0"
