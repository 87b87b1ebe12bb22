"""Offline figure generation for estimator-learning experiment outputs."""

from .render import KINDS, PlotSpec, render
from .schema import SchemaError

__all__ = ["KINDS", "PlotSpec", "SchemaError", "render"]

__version__ = "0.1.0"
